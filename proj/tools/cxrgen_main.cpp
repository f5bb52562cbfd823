// cxrgen: two-step radiology findings generation pipeline.
// Every stage is a subcommand over line-delimited JSON records; `run`
// chains them and writes a reproducible manifest.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>

#include "cxrgen/config.hpp"
#include "cxrgen/corpus.hpp"
#include "cxrgen/detect.hpp"
#include "cxrgen/errors.hpp"
#include "cxrgen/filter.hpp"
#include "cxrgen/generate.hpp"
#include "cxrgen/jsonl.hpp"
#include "cxrgen/pipeline.hpp"
#include "cxrgen/prompt.hpp"
#include "cxrgen/rouge.hpp"
#include "cxrgen/version.hpp"

using namespace cxrgen;

namespace {

int exit_code_for_kind(const std::string& kind) {
  if (kind == "ConfigError" || kind == "InvalidRule") return 1;
  if (kind == "BackendUnreachable" || kind == "BackendProtocolError" || kind == "Timeout") return 3;
  return 2;
}

int report_failure(const Error& e) {
  json record = {{"error", e.kind()}, {"message", e.what()}};
  std::string kind = e.kind();
  if (const auto* wrapped = dynamic_cast<const PipelineError*>(&e)) {
    record["stage"] = wrapped->stage;
    kind = wrapped->inner_kind;
  }
  std::cerr << record.dump() << '\n';
  return exit_code_for_kind(kind);
}

struct StreamOptions {
  std::string input = "-";
  std::string output = "-";
  bool strict = false;
};

void add_stream_options(CLI::App* cmd, StreamOptions* io) {
  cmd->add_option("-i,--input", io->input, "Input records file, or - for stdin");
  cmd->add_option("-o,--output", io->output, "Output records file, or - for stdout");
  cmd->add_flag("--strict", io->strict, "Abort on the first malformed record");
}

// Per-record isolation: a bad record is logged to stderr and counted, the
// batch continues. --strict rethrows instead.
class RecordErrors {
 public:
  explicit RecordErrors(bool strict) : strict_(strict) {}
  void handle(size_t line, const Error& e) {
    if (strict_) throw Error(e.kind(), e.what());
    std::cerr << json({{"error", e.kind()}, {"message", e.what()}, {"line", line}}).dump() << '\n';
    ++count_;
  }
  size_t count() const { return count_; }

 private:
  bool strict_;
  size_t count_ = 0;
};

class OutputStream {
 public:
  explicit OutputStream(const std::string& path) {
    if (path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw IoFailure("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void for_each_record(const std::string& input, const RecordFn& fn,
                     RecordErrors* errors = nullptr) {
  ParseErrorFn sink;
  if (errors) {
    sink = [errors](size_t line, const MalformedRecord& e) { errors->handle(line, e); };
  }
  if (input == "-") {
    for_each_jsonl(std::cin, fn, sink);
  } else {
    for_each_jsonl(input, fn, sink);
  }
}

std::vector<StudyRecord> read_corpus_lenient(const std::string& input, RecordErrors& errors) {
  std::vector<StudyRecord> records;
  std::set<std::string> seen;
  for_each_record(input, [&](size_t line, const json& raw) {
    try {
      StudyRecord record = study_record_from_json(line, raw);
      if (!seen.insert(record.study_id).second) {
        throw MalformedRecord(line, "duplicate study_id '" + record.study_id + "'");
      }
      records.push_back(std::move(record));
    } catch (const Error& e) {
      errors.handle(line, e);
    }
  }, &errors);
  return records;
}

int cmd_parse(const StreamOptions& io) {
  RecordErrors errors(io.strict);
  OutputStream out(io.output);
  for_each_record(io.input, [&](size_t line, const json& raw) {
    try {
      StudyRecord record = study_record_from_json(line, raw);
      write_jsonl_line(out.get(), parsed_record(parse_report(record.study_id, record.report_text)));
    } catch (const Error& e) {
      errors.handle(line, e);
    }
  }, &errors);
  return 0;
}

int cmd_filter(const StreamOptions& io, const std::string& rules_path,
               const std::string& decisions_path) {
  FilterRuleSet rules = load_rules(rules_path);
  RecordErrors errors(io.strict);
  OutputStream out(io.output);
  std::optional<OutputStream> decisions;
  if (!decisions_path.empty()) decisions.emplace(decisions_path);
  for_each_record(io.input, [&](size_t line, const json& raw) {
    try {
      RadiologyReport report = report_from_parsed_record(line, raw);
      auto it = report.sentence_lists.find(SectionName::kFindings);
      static const std::vector<std::string> kNone;
      FilterResult result =
          filter_findings(it == report.sentence_lists.end() ? kNone : it->second, rules);
      write_jsonl_line(out.get(), filtered_record(report.study_id, result.filtered_text));
      if (decisions) {
        for (const FilterDecision& d : result.decisions) {
          write_jsonl_line(decisions->get(), decision_record(report.study_id, d));
        }
      }
    } catch (const Error& e) {
      errors.handle(line, e);
    }
  }, &errors);
  return 0;
}

int cmd_split(const StreamOptions& io, uint64_t seed) {
  RecordErrors errors(io.strict);
  std::vector<StudyRecord> records = read_corpus_lenient(io.input, errors);
  split_corpus(records, seed);
  OutputStream out(io.output);
  write_corpus(records, out.get());
  return 0;
}

int cmd_detect_mock(const StreamOptions& io, uint64_t seed) {
  RecordErrors errors(io.strict);
  OutputStream out(io.output);
  std::set<std::string> seen;
  for_each_record(io.input, [&](size_t line, const json& raw) {
    try {
      StudyRecord record = study_record_from_json(line, raw);
      if (!seen.insert(record.study_id).second) {
        throw MalformedRecord(line, "duplicate study_id '" + record.study_id + "'");
      }
      DetectionSet set = mock_detect(record.study_id, seed);
      for (const Detection& d : set.detections) {
        write_jsonl_line(out.get(), detection_to_json(set.study_id, d));
      }
    } catch (const Error& e) {
      errors.handle(line, e);
    }
  }, &errors);
  return 0;
}

int cmd_prompt(const StreamOptions& io, const std::string& corpus_path,
               const PromptOptions& options) {
  options.validate();
  RecordErrors errors(io.strict);

  std::vector<std::string> order;
  std::map<std::string, std::vector<Detection>> rows;
  for_each_record(io.input, [&](size_t line, const json& raw) {
    try {
      std::string study_id;
      Detection detection = detection_from_json(line, raw, &study_id);
      auto [it, inserted] = rows.try_emplace(study_id);
      if (inserted) order.push_back(study_id);
      it->second.push_back(detection);
    } catch (const Error& e) {
      errors.handle(line, e);
    }
  }, &errors);

  // With a corpus the roster comes from it, so studies without any
  // detection row still get their empty-list prompt.
  if (!corpus_path.empty()) {
    RecordErrors corpus_errors(io.strict);
    std::vector<StudyRecord> records = read_corpus_lenient(corpus_path, corpus_errors);
    order.clear();
    for (const StudyRecord& record : records) order.push_back(record.study_id);
  }

  OutputStream out(io.output);
  for (const std::string& study_id : order) {
    DetectionSet set{study_id, {}};
    auto it = rows.find(study_id);
    if (it != rows.end()) set.detections = normalize_detections(it->second);
    write_jsonl_line(out.get(), prompt_record(build_prompt(set, options)));
  }
  return 0;
}

int cmd_generate(const StreamOptions& io, const std::string& backend_kind,
                 const RemoteBackendOptions& remote, int max_new_tokens, int workers,
                 const std::string& terminator) {
  RecordErrors errors(io.strict);
  std::vector<GenerationRequest> requests;
  for_each_record(io.input, [&](size_t line, const json& raw) {
    try {
      if (!raw.is_object() || !raw.contains("study_id") || !raw["study_id"].is_string() ||
          !raw.contains("prompt") || !raw["prompt"].is_string()) {
        throw MalformedRecord(line, "expected {study_id, prompt}");
      }
      requests.push_back({raw["prompt"].get<std::string>(), max_new_tokens,
                          raw["study_id"].get<std::string>()});
    } catch (const Error& e) {
      errors.handle(line, e);
    }
  }, &errors);
  std::unique_ptr<GenerationBackend> backend = make_backend(backend_kind, remote, terminator);
  std::vector<GeneratedFindings> generations = generate_batch(requests, *backend, workers);
  OutputStream out(io.output);
  for (const GeneratedFindings& g : generations) {
    write_jsonl_line(out.get(), generation_record(g));
  }
  return 0;
}

int cmd_evaluate(const std::string& hyp_path, const std::string& ref_path, double beta,
                 const std::string& scores_path, const std::string& baselines_path,
                 const std::string& system_name) {
  auto read_text_records = [](const std::string& path, const char* field) {
    std::map<std::string, std::string> out;
    std::vector<std::string> order;
    for_each_record(path, [&](size_t line, const json& raw) {
      if (!raw.is_object() || !raw.contains("study_id") || !raw["study_id"].is_string() ||
          !raw.contains(field) || !raw[field].is_string()) {
        throw MalformedRecord(line, std::string("expected {study_id, ") + field + "}");
      }
      std::string id = raw["study_id"].get<std::string>();
      if (!out.emplace(id, raw[field].get<std::string>()).second) throw DuplicateStudy(id);
      order.push_back(id);
    });
    return std::pair(std::move(out), std::move(order));
  };

  auto [hyps, hyp_order] = read_text_records(hyp_path, "text");
  auto [refs, ref_order] = read_text_records(ref_path, "text");

  std::vector<EvalPair> pairs;
  for (const std::string& study_id : hyp_order) {
    auto ref = refs.find(study_id);
    if (ref == refs.end()) {
      throw ConfigError("no reference record for study '" + study_id + "'");
    }
    pairs.push_back({study_id, hyps[study_id], ref->second});
  }

  CorpusScore corpus = evaluate_corpus(pairs, beta);
  if (!scores_path.empty()) {
    OutputStream out(scores_path);
    for (const EvalPair& pair : pairs) {
      auto it = corpus.per_study.find(pair.study_id);
      if (it != corpus.per_study.end()) {
        write_jsonl_line(out.get(), score_record(pair.study_id, it->second));
      }
    }
  }

  std::vector<ComparisonRow> rows;
  if (!baselines_path.empty()) rows = read_baselines(baselines_path);
  rows.push_back({system_name, corpus.mean_f});
  std::cout << render_comparison(std::move(rows));
  std::cout << "n=" << corpus.n << " empty_references=" << corpus.empty_references
            << " beta=" << beta << '\n';
  return 0;
}

int cmd_run(PipelineConfig config) {
  RunManifest manifest = run_pipeline(config);
  std::cout << manifest_to_json(manifest).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-step radiology findings generation pipeline"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  StreamOptions parse_io;
  CLI::App* parse_cmd = app.add_subcommand("parse", "Split corpus reports into sections");
  add_stream_options(parse_cmd, &parse_io);

  StreamOptions filter_io;
  std::string filter_rules = "builtin";
  std::string filter_decisions;
  CLI::App* filter_cmd =
      app.add_subcommand("filter", "Remove negation and device sentences from Findings");
  add_stream_options(filter_cmd, &filter_io);
  filter_cmd->add_option("--rules", filter_rules, "Rules file, or 'builtin'");
  filter_cmd->add_option("--decisions", filter_decisions,
                         "Also write per-sentence decisions to this file");

  StreamOptions split_io;
  uint64_t split_seed = 0;
  CLI::App* split_cmd = app.add_subcommand("split", "Assign 70:10:20 train/validation/test splits");
  add_stream_options(split_cmd, &split_io);
  split_cmd->add_option("--seed", split_seed, "Hash seed for the assignment")->required();

  StreamOptions mock_io;
  uint64_t mock_seed = 0;
  CLI::App* mock_cmd = app.add_subcommand("detect-mock", "Emit deterministic mock detections");
  add_stream_options(mock_cmd, &mock_io);
  mock_cmd->add_option("--seed", mock_seed, "Mock detector seed")->required();

  StreamOptions prompt_io;
  std::string prompt_corpus;
  PromptOptions prompt_options;
  CLI::App* prompt_cmd = app.add_subcommand("prompt", "Serialize detections into prompts");
  add_stream_options(prompt_cmd, &prompt_io);
  prompt_cmd->add_option("--corpus", prompt_corpus,
                         "Corpus file providing the study roster (studies without "
                         "detections get the empty prompt)");
  prompt_cmd->add_option("--decimals", prompt_options.probability_decimals,
                         "Probability decimals");
  prompt_cmd->add_option("--threshold", prompt_options.threshold,
                         "Strict probability threshold");
  prompt_cmd->add_option("--terminator", prompt_options.terminator, "Prompt terminator token");
  prompt_cmd->add_flag("--include-bbox", prompt_options.include_bbox,
                       "Render bounding boxes when present");

  StreamOptions generate_io;
  std::string generate_backend = "template";
  RemoteBackendOptions generate_remote;
  int generate_max_tokens = 128;
  int generate_workers = 4;
  std::string generate_terminator = "TL;DR";
  CLI::App* generate_cmd = app.add_subcommand("generate", "Run a generation backend over prompts");
  add_stream_options(generate_cmd, &generate_io);
  generate_cmd->add_option("--backend", generate_backend, "template or remote");
  generate_cmd->add_option("--endpoint", generate_remote.endpoint, "Remote inference endpoint");
  generate_cmd->add_option("--max-new-tokens", generate_max_tokens, "Generation token cap");
  generate_cmd->add_option("--timeout", generate_remote.timeout_seconds,
                           "Remote request timeout in seconds");
  generate_cmd->add_option("--retries", generate_remote.retries, "Remote transport retries");
  generate_cmd->add_option("--workers", generate_workers, "In-flight request pool size");
  generate_cmd->add_option("--terminator", generate_terminator,
                           "Prompt terminator (template backend)");

  std::string eval_hyp, eval_ref, eval_scores, eval_baselines;
  std::string eval_name = "this-run";
  double eval_beta = 1.0;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Score generations with ROUGE-L");
  eval_cmd->add_option("--hyp", eval_hyp, "Generated findings records")->required();
  eval_cmd->add_option("--ref", eval_ref, "Filtered reference records")->required();
  eval_cmd->add_option("--beta", eval_beta, "F-measure beta");
  eval_cmd->add_option("--scores", eval_scores, "Write per-study scores to this file (- stdout)");
  eval_cmd->add_option("--baselines", eval_baselines,
                       "Merge literature rows from this file into the comparison");
  eval_cmd->add_option("--name", eval_name, "Row name for this run in the comparison");

  std::string run_config_path;
  std::optional<std::string> run_corpus, run_detections, run_rules, run_backend, run_endpoint,
      run_output, run_terminator;
  std::optional<uint64_t> run_mock_seed, run_split_seed;
  std::optional<int> run_max_tokens, run_workers, run_decimals;
  std::optional<double> run_beta, run_threshold;
  bool run_strict = false;
  bool run_include_bbox = false;
  CLI::App* run_cmd = app.add_subcommand("run", "Execute the whole pipeline from a config");
  run_cmd->add_option("--config", run_config_path, "Pipeline config file");
  run_cmd->add_option("--corpus", run_corpus, "Override corpus path");
  run_cmd->add_option("--detections", run_detections, "Override detections path");
  run_cmd->add_option("--mock-seed", run_mock_seed, "Override mock detector seed");
  run_cmd->add_option("--rules", run_rules, "Override rules file");
  run_cmd->add_option("--backend", run_backend, "Override backend");
  run_cmd->add_option("--endpoint", run_endpoint, "Override remote endpoint");
  run_cmd->add_option("--output-dir", run_output, "Override output directory");
  run_cmd->add_option("--split-seed", run_split_seed, "Override split seed");
  run_cmd->add_option("--max-new-tokens", run_max_tokens, "Override token cap");
  run_cmd->add_option("--workers", run_workers, "Override worker pool size");
  run_cmd->add_option("--beta", run_beta, "Override F-measure beta");
  run_cmd->add_option("--decimals", run_decimals, "Override probability decimals");
  run_cmd->add_option("--threshold", run_threshold, "Override prompt threshold");
  run_cmd->add_option("--terminator", run_terminator, "Override prompt terminator");
  run_cmd->add_flag("--include-bbox", run_include_bbox, "Render bounding boxes in prompts");
  run_cmd->add_flag("--strict", run_strict, "Abort on the first malformed record");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*parse_cmd) return cmd_parse(parse_io);
    if (*filter_cmd) return cmd_filter(filter_io, filter_rules, filter_decisions);
    if (*split_cmd) return cmd_split(split_io, split_seed);
    if (*mock_cmd) return cmd_detect_mock(mock_io, mock_seed);
    if (*prompt_cmd) return cmd_prompt(prompt_io, prompt_corpus, prompt_options);
    if (*generate_cmd) {
      return cmd_generate(generate_io, generate_backend, generate_remote, generate_max_tokens,
                          generate_workers, generate_terminator);
    }
    if (*eval_cmd) {
      return cmd_evaluate(eval_hyp, eval_ref, eval_beta, eval_scores, eval_baselines, eval_name);
    }
    if (*run_cmd) {
      PipelineConfig config =
          run_config_path.empty() ? PipelineConfig{} : load_config(run_config_path);
      if (run_corpus) config.corpus_path = *run_corpus;
      if (run_detections && run_mock_seed) {
        throw ConfigError("exactly one detection source may be given "
                          "(--detections or --mock-seed)");
      }
      // A flag for one source replaces a configured other source.
      if (run_detections) {
        config.detections_path = *run_detections;
        config.mock_seed.reset();
      }
      if (run_mock_seed) {
        config.mock_seed = *run_mock_seed;
        config.detections_path.reset();
      }
      if (run_rules) config.rules = *run_rules;
      if (run_backend) config.backend = *run_backend;
      if (run_endpoint) config.remote.endpoint = *run_endpoint;
      if (run_output) config.output_dir = *run_output;
      if (run_split_seed) config.split_seed = *run_split_seed;
      if (run_max_tokens) config.max_new_tokens = *run_max_tokens;
      if (run_workers) config.workers = *run_workers;
      if (run_beta) config.beta = *run_beta;
      if (run_decimals) config.prompt.probability_decimals = *run_decimals;
      if (run_threshold) config.prompt.threshold = *run_threshold;
      if (run_terminator) config.prompt.terminator = *run_terminator;
      if (run_include_bbox) config.prompt.include_bbox = true;
      if (run_strict) config.strict = true;
      return cmd_run(std::move(config));
    }
  } catch (const Error& e) {
    return report_failure(e);
  } catch (const std::exception& e) {
    std::cerr << json({{"error", "Error"}, {"message", e.what()}}).dump() << '\n';
    return 2;
  }
  return 0;
}
