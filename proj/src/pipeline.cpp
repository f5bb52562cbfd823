#include "cxrgen/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>

#include "cxrgen/detect.hpp"
#include "cxrgen/errors.hpp"
#include "cxrgen/version.hpp"

namespace cxrgen {

namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RecordErrorLog {
  json entries = json::array();

  void add(const std::string& stage, const Error& error, const std::string& study_id = "",
           size_t line = 0) {
    json entry = {{"stage", stage}, {"kind", error.kind()}, {"message", error.what()}};
    if (!study_id.empty()) entry["study_id"] = study_id;
    if (line > 0) entry["line"] = line;
    entries.push_back(std::move(entry));
  }
};

void write_json_file(const std::string& path, const json& value) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open '" + path + "' for writing");
  out << value.dump(2) << '\n';
  if (!out) throw IoFailure("write failed for '" + path + "'");
}

class StageWriter {
 public:
  explicit StageWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoFailure("cannot open '" + path + "' for writing");
  }
  void write(const json& record) { write_jsonl_line(out_, record); }

 private:
  std::ofstream out_;
};

}  // namespace

json parsed_record(const RadiologyReport& report) {
  json sections = json::object();
  for (const auto& [name, text] : report.sections) sections[std::string(to_string(name))] = text;
  return {{"study_id", report.study_id}, {"sections", std::move(sections)}};
}

RadiologyReport report_from_parsed_record(size_t line, const json& record) {
  if (!record.is_object() || !record.contains("study_id") || !record["study_id"].is_string() ||
      !record.contains("sections") || !record["sections"].is_object()) {
    throw MalformedRecord(line, "expected {study_id, sections}");
  }
  RadiologyReport report;
  report.study_id = record["study_id"].get<std::string>();
  if (report.study_id.empty()) throw MalformedRecord(line, "missing or empty study_id");
  for (const auto& [key, value] : record["sections"].items()) {
    auto name = section_from_string(key);
    if (!name || !value.is_string()) {
      throw MalformedRecord(line, "bad section entry '" + key + "'");
    }
    report.sections[*name] = value.get<std::string>();
    report.sentence_lists[*name] = segment_sentences(value.get<std::string>());
  }
  return report;
}

json filtered_record(const std::string& study_id, const std::string& text) {
  return {{"study_id", study_id}, {"text", text}};
}

json decision_record(const std::string& study_id, const FilterDecision& decision) {
  json record = {{"study_id", study_id}, {"sentence", decision.sentence}, {"kept", decision.kept}};
  if (decision.matched_rule) record["matched_rule"] = *decision.matched_rule;
  return record;
}

json prompt_record(const Prompt& prompt) {
  return {{"study_id", prompt.study_id}, {"prompt", prompt.text}};
}

json generation_record(const GeneratedFindings& findings) {
  return {{"study_id", findings.study_id}, {"text", findings.text}, {"backend", findings.backend}};
}

json score_record(const std::string& study_id, const RougeScore& score) {
  return {{"study_id", study_id},   {"precision", score.precision}, {"recall", score.recall},
          {"f", score.f},           {"lcs_len", score.lcs_len},     {"hyp_len", score.hyp_len},
          {"ref_len", score.ref_len}};
}

json summary_json(const CorpusScore& corpus, double beta) {
  return {{"beta", beta},
          {"mean_f", corpus.mean_f},
          {"n", corpus.n},
          {"empty_references", corpus.empty_references},
          {"empty_reference_ids", corpus.empty_reference_ids},
          {"rule_set_version", corpus.rule_set_version},
          {"prompt_options_version", corpus.prompt_options_version}};
}

json manifest_to_json(const RunManifest& manifest) {
  json counts = {{"reports", manifest.counts.reports},
                 {"parsed", manifest.counts.parsed},
                 {"filtered", manifest.counts.filtered},
                 {"detection_sets", manifest.counts.detection_sets},
                 {"prompts", manifest.counts.prompts},
                 {"generations", manifest.counts.generations},
                 {"scored", manifest.counts.scored},
                 {"empty_references", manifest.counts.empty_references},
                 {"record_errors", manifest.counts.record_errors}};
  json out = {{"tool_version", manifest.tool_version},
              {"status", manifest.status},
              {"config", manifest.config_snapshot},
              {"rule_set_version", manifest.rule_set_version},
              {"prompt_options_version", manifest.prompt_options_version},
              {"counts", std::move(counts)},
              {"started_at", manifest.started_at},
              {"finished_at", manifest.finished_at}};
  if (!manifest.failed_stage.empty()) out["failed_stage"] = manifest.failed_stage;
  if (!manifest.split_counts.empty()) out["split_counts"] = manifest.split_counts;
  return out;
}

RunManifest run_pipeline(const PipelineConfig& config) {
  config.validate();
  fs::create_directories(config.output_dir);
  auto out_path = [&](const char* name) { return (fs::path(config.output_dir) / name).string(); };

  RunManifest manifest;
  manifest.tool_version = std::string(kToolVersion);
  manifest.status = "ok";
  manifest.config_snapshot = config.to_json();
  manifest.started_at = utc_now();

  RecordErrorLog errors;
  std::string stage = "setup";

  auto finalize = [&] {
    manifest.counts.record_errors = errors.entries.size();
    manifest.finished_at = utc_now();
    std::ofstream err_out(out_path("errors.jsonl"), std::ios::binary);
    for (const json& entry : errors.entries) write_jsonl_line(err_out, entry);
    write_json_file(out_path("manifest.json"), manifest_to_json(manifest));
  };

  try {
    stage = "rules";
    FilterRuleSet rules = load_rules(config.rules);
    manifest.rule_set_version = rules.version();
    manifest.prompt_options_version = config.prompt.version();

    // Studies that fail a stage drop out of the rest of the run.
    auto parse_error_sink = [&](size_t line, const MalformedRecord& e) {
      if (config.strict) throw e;
      errors.add(stage, e, "", line);
    };

    stage = "read-corpus";
    std::vector<StudyRecord> records;
    {
      std::set<std::string> seen;
      for_each_jsonl(
          config.corpus_path,
          [&](size_t line, const json& raw) {
            try {
              StudyRecord record = study_record_from_json(line, raw);
              if (!seen.insert(record.study_id).second) {
                throw MalformedRecord(line, "duplicate study_id '" + record.study_id + "'");
              }
              records.push_back(std::move(record));
            } catch (const Error& e) {
              if (config.strict) throw;
              errors.add(stage, e, "", line);
            }
          },
          parse_error_sink);
    }
    manifest.counts.reports = records.size();

    if (config.split_seed) {
      stage = "split";
      split_corpus(records, *config.split_seed);
      StageWriter writer(out_path("split_corpus.jsonl"));
      for (const StudyRecord& record : records) {
        writer.write(study_record_to_json(record));
        ++manifest.split_counts[std::string(to_string(*record.split))];
      }
    }

    stage = "parse";
    std::vector<RadiologyReport> reports;
    {
      StageWriter writer(out_path("parsed.jsonl"));
      for (const StudyRecord& record : records) {
        try {
          RadiologyReport report = parse_report(record.study_id, record.report_text);
          writer.write(parsed_record(report));
          reports.push_back(std::move(report));
        } catch (const Error& e) {
          if (config.strict) throw;
          errors.add(stage, e, record.study_id);
        }
      }
    }
    manifest.counts.parsed = reports.size();

    stage = "filter";
    std::vector<std::string> references(reports.size());
    {
      StageWriter writer(out_path("filtered.jsonl"));
      StageWriter decisions(out_path("filter_decisions.jsonl"));
      static const std::vector<std::string> kNoSentences;
      for (size_t i = 0; i < reports.size(); ++i) {
        auto it = reports[i].sentence_lists.find(SectionName::kFindings);
        const auto& sentences = it == reports[i].sentence_lists.end() ? kNoSentences : it->second;
        FilterResult result = filter_findings(sentences, rules);
        references[i] = result.filtered_text;
        writer.write(filtered_record(reports[i].study_id, result.filtered_text));
        for (const FilterDecision& d : result.decisions) {
          decisions.write(decision_record(reports[i].study_id, d));
        }
      }
    }
    manifest.counts.filtered = references.size();

    stage = "detect";
    std::vector<DetectionSet> sets(reports.size());
    if (config.mock_seed) {
      for (size_t i = 0; i < reports.size(); ++i) {
        sets[i] = mock_detect(reports[i].study_id, *config.mock_seed);
      }
    } else {
      std::map<std::string, size_t> index_of;
      for (size_t i = 0; i < reports.size(); ++i) {
        sets[i].study_id = reports[i].study_id;
        index_of[reports[i].study_id] = i;
      }
      std::map<std::string, std::vector<Detection>> rows;
      for_each_jsonl(
          *config.detections_path,
          [&](size_t line, const json& raw) {
            try {
              std::string study_id;
              Detection detection = detection_from_json(line, raw, &study_id);
              if (!index_of.count(study_id)) {
                throw MalformedDetection(line, "study_id '" + study_id + "' is not in the corpus");
              }
              rows[study_id].push_back(detection);
            } catch (const Error& e) {
              if (config.strict) throw;
              errors.add(stage, e, "", line);
            }
          },
          parse_error_sink);
      for (auto& [study_id, detections] : rows) {
        sets[index_of[study_id]].detections = normalize_detections(std::move(detections));
      }
    }
    {
      StageWriter writer(out_path("detections.jsonl"));
      for (const DetectionSet& set : sets) {
        for (const Detection& d : set.detections) writer.write(detection_to_json(set.study_id, d));
      }
    }
    manifest.counts.detection_sets = sets.size();

    stage = "prompt";
    std::vector<Prompt> prompts;
    prompts.reserve(sets.size());
    {
      StageWriter writer(out_path("prompts.jsonl"));
      for (const DetectionSet& set : sets) {
        prompts.push_back(build_prompt(set, config.prompt));
        writer.write(prompt_record(prompts.back()));
      }
    }
    manifest.counts.prompts = prompts.size();

    stage = "generate";
    std::vector<GeneratedFindings> generations;
    {
      std::unique_ptr<GenerationBackend> backend =
          make_backend(config.backend, config.remote, config.prompt.terminator);
      std::vector<GenerationRequest> requests;
      requests.reserve(prompts.size());
      for (const Prompt& p : prompts) {
        requests.push_back({p.text, config.max_new_tokens, p.study_id});
      }
      generations = generate_batch(requests, *backend, config.workers);
      StageWriter writer(out_path("generations.jsonl"));
      for (const GeneratedFindings& g : generations) writer.write(generation_record(g));
    }
    manifest.counts.generations = generations.size();

    stage = "evaluate";
    {
      std::vector<EvalPair> pairs;
      pairs.reserve(generations.size());
      for (size_t i = 0; i < generations.size(); ++i) {
        pairs.push_back({generations[i].study_id, generations[i].text, references[i]});
      }
      CorpusScore corpus =
          evaluate_corpus(pairs, config.beta, {rules.version(), config.prompt.version()});
      StageWriter writer(out_path("scores.jsonl"));
      for (const EvalPair& pair : pairs) {
        auto it = corpus.per_study.find(pair.study_id);
        if (it != corpus.per_study.end()) writer.write(score_record(pair.study_id, it->second));
      }
      write_json_file(out_path("summary.json"), summary_json(corpus, config.beta));
      manifest.counts.scored = corpus.n;
      manifest.counts.empty_references = corpus.empty_references;
    }

    finalize();
    return manifest;
  } catch (const Error& e) {
    manifest.status = "failed";
    manifest.failed_stage = stage;
    finalize();
    throw PipelineError(stage, e.kind(), e.what());
  }
}

}  // namespace cxrgen
