// Acceptance suite: one pass/fail line per criterion. Exits non-zero if any
// criterion fails. Usage: acceptance_test <source_root> <cxrgen_binary>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <vector>

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
#include "lcs_oracle.hpp"

using namespace cxrgen;
using cxrgen::testing::lcs_brute_force;
using cxrgen::testing::lcs_full_matrix;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::string detail;
  void require(bool condition, const std::string& message) {
    if (!condition && ok) {
      ok = false;
      detail = message;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_command(const std::string& command) {
  CommandResult result;
  FILE* pipe = popen((command + " 2>/dev/null").c_str(), "r");
  if (!pipe) return result;
  char buffer[4096];
  size_t n;
  while ((n = fread(buffer, 1, sizeof(buffer), pipe)) > 0) result.output.append(buffer, n);
  int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<<missing file: " + path.string() + ">>";
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::vector<std::string> random_tokens(std::mt19937& rng, size_t max_len, int vocab) {
  std::uniform_int_distribution<size_t> len_dist(0, max_len);
  std::uniform_int_distribution<int> tok_dist(0, vocab - 1);
  std::vector<std::string> out(len_dist(rng));
  for (auto& t : out) t = std::string(1, static_cast<char>('a' + tok_dist(rng)));
  return out;
}

// ---- criteria ----

Check criterion_lcs_oracle() {
  Check check;
  auto start = std::chrono::steady_clock::now();

  // exhaustive over the 2-symbol alphabet, lengths <= 4
  std::vector<std::vector<std::string>> all;
  for (size_t len = 0; len <= 4; ++len) {
    for (size_t bits = 0; bits < (1u << len); ++bits) {
      std::vector<std::string> seq;
      for (size_t k = 0; k < len; ++k) seq.emplace_back(1, (bits >> k) & 1 ? 'b' : 'a');
      all.push_back(std::move(seq));
    }
  }
  for (const auto& a : all) {
    for (const auto& b : all) {
      check.require(lcs_length(a, b) == lcs_brute_force(a, b), "exhaustive small-case mismatch");
    }
  }

  // random pairs, lengths <= 12, 5-symbol vocabulary, exponential oracle
  std::mt19937 rng(20240811);
  for (int trial = 0; trial < 800; ++trial) {
    auto a = random_tokens(rng, 12, 5);
    auto b = random_tokens(rng, 12, 5);
    check.require(lcs_length(a, b) == lcs_brute_force(a, b),
                  "brute-force oracle mismatch at trial " + std::to_string(trial));
  }

  // 1000 random pairs, lengths <= 40, independent quadratic DP
  for (int trial = 0; trial < 1000; ++trial) {
    auto a = random_tokens(rng, 40, 5);
    auto b = random_tokens(rng, 40, 5);
    check.require(lcs_length(a, b) == lcs_full_matrix(a, b),
                  "full-matrix DP mismatch at trial " + std::to_string(trial));
  }

  double elapsed = seconds_since(start);
  check.require(elapsed < 10.0, "oracle equivalence took " + std::to_string(elapsed) + " s");
  return check;
}

Check criterion_rouge_analytic() {
  Check check;
  RougeScore identity = rouge_l("the lungs are clear", "the lungs are clear");
  check.require(std::abs(identity.f - 1.0) < 1e-12, "identity F != 1");

  RougeScore disjoint = rouge_l("alpha beta gamma", "delta epsilon");
  check.require(disjoint.f == 0.0, "disjoint F != 0");

  std::vector<std::string> hyp = {"the", "cat", "on", "the", "mat"};
  std::vector<std::string> ref = {"the", "cat", "sat", "on", "the", "mat"};
  size_t oracle = lcs_brute_force(hyp, ref);
  check.require(oracle == 5, "oracle LCS of the worked example is not 5");
  double p = static_cast<double>(oracle) / hyp.size();
  double r = static_cast<double>(oracle) / ref.size();
  double f_oracle = 2.0 * p * r / (p + r);
  RougeScore worked = rouge_l("the cat on the mat", "the cat sat on the mat");
  check.require(std::abs(worked.f - 10.0 / 11.0) < 1e-12, "worked example F != 10/11");
  check.require(std::abs(worked.f - f_oracle) < 1e-12, "worked example disagrees with oracle");
  return check;
}

Check criterion_prompt_invariants() {
  Check check;
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> count_dist(0, 8);
  std::uniform_int_distribution<int> class_dist(1, 19);
  std::uniform_real_distribution<double> prob_dist(0.0, 1.0);

  for (int trial = 0; trial < 1000; ++trial) {
    DetectionSet set;
    set.study_id = "t" + std::to_string(trial);
    std::set<int> classes;
    int wanted = count_dist(rng);
    while (static_cast<int>(classes.size()) < wanted) classes.insert(class_dist(rng));
    std::vector<int> shuffled(classes.begin(), classes.end());
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (int c : shuffled) set.detections.push_back({c, prob_dist(rng), std::nullopt});

    PromptOptions opts;
    opts.threshold = trial % 3 == 0 ? 0.0 : prob_dist(rng) * 0.9;
    Prompt prompt = build_prompt(set, opts);

    check.require(prompt.text.ends_with(" " + opts.terminator) ||
                      prompt.text == "no abnormalities detected " + opts.terminator,
                  "prompt does not end with the terminator");
    size_t first = prompt.text.find(opts.terminator);
    check.require(first == prompt.text.size() - opts.terminator.size(),
                  "terminator appears more than once");
    check.require(prompt.text.find("device") == std::string::npos, "Device label in prompt");

    std::vector<PromptEntry> entries;
    try {
      entries = parse_prompt(prompt.text, opts.terminator);
    } catch (const Error&) {
      check.require(false, "prompt did not parse back");
      break;
    }
    int previous = 0;
    size_t qualifying = 0;
    for (const Detection& d : set.detections) {
      if (d.class_id != kDeviceClassId && d.probability > opts.threshold) ++qualifying;
    }
    check.require(entries.size() == qualifying, "entry count mismatch");
    for (const PromptEntry& entry : entries) {
      const Detection* source = nullptr;
      for (const Detection& d : set.detections) {
        if (label_of(d.class_id) == entry.label) source = &d;
      }
      check.require(source != nullptr, "entry label has no source detection");
      if (!source) break;
      check.require(source->probability > opts.threshold, "entry at or below threshold");
      check.require(source->class_id > previous, "entries not in ascending class order");
      previous = source->class_id;
    }
    check.require(build_prompt(set, opts).text == prompt.text, "build_prompt not deterministic");
    if (!check.ok) break;
  }
  return check;
}

Check criterion_filter_invariants(const fs::path& root) {
  Check check;
  const FilterRuleSet& rules = FilterRuleSet::builtin();

  size_t fixture_size = 0;
  size_t correct = 0;
  for_each_jsonl((root / "data/filter_fixture.jsonl").string(), [&](size_t, const json& record) {
    ++fixture_size;
    bool keep = record.at("keep").get<bool>();
    auto result = filter_findings({record.at("sentence").get<std::string>()}, rules);
    if (result.decisions[0].kept == keep) ++correct;
  });
  check.require(fixture_size == 40, "fixture does not hold 40 sentences");
  check.require(correct == fixture_size, "fixture classification below 100%: " +
                                              std::to_string(correct) + "/" +
                                              std::to_string(fixture_size));

  std::vector<std::string> sentences;
  for_each_jsonl((root / "data/filter_fixture.jsonl").string(), [&](size_t, const json& record) {
    sentences.push_back(record.at("sentence").get<std::string>());
  });

  // order preservation
  FilterResult once = filter_findings(sentences, rules);
  size_t cursor = 0;
  for (const FilterDecision& d : once.decisions) {
    if (!d.kept) continue;
    size_t at = once.filtered_text.find(d.sentence, cursor);
    check.require(at != std::string::npos, "kept sentence out of order");
    cursor = at + 1;
  }

  // monotonicity under rule addition
  FilterRuleSet narrow({R"(\bno\b)"}, {R"(\btube\b)"}, "narrow");
  FilterRuleSet wider({R"(\bno\b)", R"(\bunremarkable\b)"}, {R"(\btube\b)", R"(\bwire\b)"},
                      "wider");
  FilterResult before = filter_findings(sentences, narrow);
  FilterResult after = filter_findings(sentences, wider);
  for (size_t i = 0; i < sentences.size(); ++i) {
    if (after.decisions[i].kept) {
      check.require(before.decisions[i].kept, "rule addition grew the kept set");
    }
  }

  // idempotence
  FilterResult again = filter_findings(segment_sentences(once.filtered_text), rules);
  check.require(again.filtered_text == once.filtered_text, "filtering is not idempotent");
  return check;
}

Check criterion_split(const fs::path& root, const std::string& cxrgen, const fs::path& tmp) {
  Check check;
  std::vector<StudyRecord> records;
  for (size_t i = 0; i < 1000; ++i) {
    records.push_back({"case-" + std::to_string(i), "FINDINGS: Text.", std::nullopt});
  }
  write_corpus(records, (tmp / "corpus1000.jsonl").string());

  // CLI path: split --seed 7
  CommandResult cli = run_command(cxrgen + " split --seed 7 -i " +
                                  (tmp / "corpus1000.jsonl").string() + " -o " +
                                  (tmp / "split1000.jsonl").string());
  check.require(cli.exit_code == 0, "split subcommand failed");
  std::vector<StudyRecord> assigned = read_corpus((tmp / "split1000.jsonl").string());
  std::map<Split, size_t> sizes;
  for (const auto& r : assigned) {
    check.require(r.split.has_value(), "record left unassigned");
    if (r.split) ++sizes[*r.split];
  }
  check.require(sizes[Split::kTrain] == 700, "train size != 700");
  check.require(sizes[Split::kValidation] == 100, "validation size != 100");
  check.require(sizes[Split::kTest] == 200, "test size != 200");

  // seed determinism
  auto twice = records;
  split_corpus(twice, 7);
  std::map<std::string, Split> reference;
  for (const auto& r : twice) reference[r.study_id] = *r.split;
  for (const auto& r : assigned) {
    check.require(reference.at(r.study_id) == *r.split, "CLI and library splits disagree");
  }

  // append stability: existing assignments unchanged, quotas still exact
  auto grown = twice;
  for (size_t i = 1000; i < 1300; ++i) {
    grown.push_back({"case-" + std::to_string(i), "FINDINGS: Text.", std::nullopt});
  }
  split_corpus(grown, 7);
  std::map<Split, size_t> grown_sizes;
  for (const auto& r : grown) {
    ++grown_sizes[*r.split];
    auto it = reference.find(r.study_id);
    if (it != reference.end()) {
      check.require(it->second == *r.split, "append reassigned an existing record");
    }
  }
  check.require(grown_sizes[Split::kTrain] == 910, "grown train size != 910");
  check.require(grown_sizes[Split::kValidation] == 130, "grown validation size != 130");
  check.require(grown_sizes[Split::kTest] == 260, "grown test size != 260");
  return check;
}

const std::vector<std::string> kGoldenFiles = {
    "split_corpus.jsonl", "parsed.jsonl",       "filtered.jsonl",
    "filter_decisions.jsonl", "detections.jsonl", "prompts.jsonl",
    "generations.jsonl",  "scores.jsonl",       "summary.json",
    "errors.jsonl"};

Check criterion_end_to_end(const fs::path& root, const std::string& cxrgen, const fs::path& tmp) {
  Check check;
  auto write_config = [&](const fs::path& path, const fs::path& out_dir) {
    std::ofstream cfg(path);
    cfg << "[corpus]\npath = " << (root / "data/synthetic_corpus.jsonl").string()
        << "\nsplit_seed = 7\n[detect]\nmock_seed = 42\n[filter]\nrules = builtin\n"
        << "[generate]\nbackend = template\nmax_new_tokens = 128\n[evaluate]\nbeta = 1.0\n"
        << "[output]\ndir = " << out_dir.string() << "\n";
  };
  write_config(tmp / "run_a.cfg", tmp / "run_a");
  write_config(tmp / "run_b.cfg", tmp / "run_b");

  auto start = std::chrono::steady_clock::now();
  CommandResult a = run_command(cxrgen + " run --config " + (tmp / "run_a.cfg").string());
  double elapsed = seconds_since(start);
  check.require(a.exit_code == 0, "run exited with " + std::to_string(a.exit_code));
  check.require(elapsed < 5.0, "run took " + std::to_string(elapsed) + " s");

  CommandResult b = run_command(cxrgen + " run --config " + (tmp / "run_b.cfg").string());
  check.require(b.exit_code == 0, "second run failed");

  for (const std::string& name : kGoldenFiles) {
    std::string ours = slurp(tmp / "run_a" / name);
    check.require(ours == slurp(tmp / "run_b" / name), "rerun differs on " + name);
    check.require(ours == slurp(root / "data/golden" / name), "golden mismatch on " + name);
  }
  return check;
}

Check criterion_baseline_sanity(const fs::path& root) {
  Check check;
  json golden = json::parse(slurp(root / "data/golden/summary.json"), nullptr, false);
  check.require(!golden.is_discarded(), "golden summary.json missing or invalid");
  if (golden.is_discarded()) return check;
  double template_mean = golden.at("mean_f").get<double>();

  // Recompute the two baselines over the golden references.
  std::vector<EvalPair> empty_pairs, constant_pairs;
  for_each_jsonl((root / "data/golden/filtered.jsonl").string(), [&](size_t, const json& rec) {
    std::string id = rec.at("study_id").get<std::string>();
    std::string ref = rec.at("text").get<std::string>();
    empty_pairs.push_back({id, "", ref});
    constant_pairs.push_back({id, "The lungs are clear.", ref});
  });
  double empty_mean = evaluate_corpus(empty_pairs).mean_f;
  double constant_mean = evaluate_corpus(constant_pairs).mean_f;

  json frozen = json::parse(slurp(root / "data/golden/baseline_sanity.json"), nullptr, false);
  check.require(!frozen.is_discarded(), "baseline_sanity.json missing or invalid");
  if (!frozen.is_discarded()) {
    check.require(std::abs(frozen.at("template_mean").get<double>() - template_mean) < 1e-12,
                  "template mean drifted from the golden value");
    check.require(std::abs(frozen.at("constant_mean").get<double>() - constant_mean) < 1e-12,
                  "constant-baseline mean drifted from the golden value");
    check.require(frozen.at("empty_mean").get<double>() == empty_mean,
                  "empty-hypothesis mean drifted from the golden value");
  }

  check.require(empty_mean == 0.0, "empty-hypothesis mean is not 0");
  check.require(template_mean > empty_mean, "template does not beat the empty hypothesis");
  check.require(template_mean > constant_mean,
                "template (" + std::to_string(template_mean) + ") does not beat the constant baseline (" +
                    std::to_string(constant_mean) + ")");
  return check;
}

Check criterion_table_rendering(const fs::path& root, const std::string& cxrgen) {
  Check check;
  CommandResult result = run_command(
      cxrgen + " evaluate --hyp " + (root / "data/golden/generations.jsonl").string() +
      " --ref " + (root / "data/golden/filtered.jsonl").string() + " --baselines " +
      (root / "data/baselines_mimic_cxr.tsv").string() + " --name template-run");
  check.require(result.exit_code == 0, "evaluate exited with " + std::to_string(result.exit_code));

  for (const char* system : {"ST", "CMCL", "PPKED", "CMM+RL", "UAR", "OURS"}) {
    check.require(result.output.find(system) != std::string::npos,
                  std::string("missing literature row ") + system);
  }
  for (const char* value : {"0.263", "0.281", "0.284", "0.287", "0.289", "0.373"}) {
    check.require(result.output.find(value) != std::string::npos,
                  std::string("missing literature score ") + value);
  }

  std::istringstream lines(result.output);
  std::string line, best_line;
  while (std::getline(lines, line)) {
    if (line.find("(best)") != std::string::npos) best_line = line;
  }
  check.require(!best_line.empty(), "no row marked best");
  check.require(best_line.find("OURS") != std::string::npos, "best row is not OURS");
  check.require(best_line.find("0.373") != std::string::npos, "best row is not 0.373");
  return check;
}

Check criterion_throughput() {
  Check check;
  const size_t kReports = 100000;
  // Report text cycles through realistic shapes; ids keep every study unique.
  const char* bodies[] = {
      "INDICATION: Dyspnea.\nFINDINGS: There is a moderate right pleural effusion. "
      "No pneumothorax is seen. Endotracheal tube tip is above the carina. "
      "There is patchy consolidation at the base.\nIMPRESSION: Effusion.",
      "FINDINGS: The lungs are without focal consolidation. The cardiomediastinal "
      "silhouette is unremarkable. There is a calcified granuloma. Heart size is "
      "within normal limits.\nIMPRESSION: No acute disease.",
      "HISTORY: Fever.\nFINDINGS: There is a dense consolidation in the left lower "
      "lobe. A left PICC terminates in the SVC. There is mild pulmonary edema. "
      "Degenerative changes are present.\nIMPRESSION: Pneumonia.",
      "FINDINGS: There is a right upper lobe mass. There is volume loss in the right "
      "hemithorax. Sternal wires are intact. The costophrenic angles are sharp.\n"
      "IMPRESSION: Mass.",
  };

  const FilterRuleSet& rules = FilterRuleSet::builtin();
  PromptOptions prompt_options;
  auto start = std::chrono::steady_clock::now();
  size_t kept_sentences = 0, prompts_built = 0;
  for (size_t i = 0; i < kReports; ++i) {
    std::string study_id = "perf-" + std::to_string(i);
    RadiologyReport report = parse_report(study_id, bodies[i % 4]);
    auto it = report.sentence_lists.find(SectionName::kFindings);
    static const std::vector<std::string> kNone;
    FilterResult filtered =
        filter_findings(it == report.sentence_lists.end() ? kNone : it->second, rules);
    kept_sentences += filtered.decisions.size();
    Prompt prompt = build_prompt(mock_detect(study_id, 7), prompt_options);
    prompts_built += prompt.text.size() > 0;
  }
  double elapsed = seconds_since(start);
  check.require(prompts_built == kReports, "not every report produced a prompt");
  check.require(kept_sentences > 0, "no sentences flowed through the filter");
  check.require(elapsed < 60.0,
                "parse+filter+prompt on 100k reports took " + std::to_string(elapsed) + " s");
  std::fprintf(stderr, "  [throughput] 100k reports in %.2f s\n", elapsed);
  return check;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: acceptance_test <source_root> <cxrgen_binary>\n");
    return 2;
  }
  fs::path root = argv[1];
  std::string cxrgen = argv[2];
  fs::path tmp = fs::temp_directory_path() / "cxrgen_acceptance";
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  struct Criterion {
    const char* name;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria = {
      {"lcs-oracle-equivalence", [&] { return criterion_lcs_oracle(); }},
      {"rouge-analytic-cases", [&] { return criterion_rouge_analytic(); }},
      {"prompt-invariants", [&] { return criterion_prompt_invariants(); }},
      {"filter-invariants-and-fixture", [&] { return criterion_filter_invariants(root); }},
      {"split-exactness", [&] { return criterion_split(root, cxrgen, tmp); }},
      {"end-to-end-determinism", [&] { return criterion_end_to_end(root, cxrgen, tmp); }},
      {"baseline-sanity", [&] { return criterion_baseline_sanity(root); }},
      {"baseline-table-rendering", [&] { return criterion_table_rendering(root, cxrgen); }},
      {"throughput-100k", [&] { return criterion_throughput(); }},
  };

  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Check check;
    try {
      check = criteria[i].run();
    } catch (const std::exception& e) {
      check.ok = false;
      check.detail = std::string("exception: ") + e.what();
    }
    if (check.ok) {
      std::printf("PASS  %zu  %s\n", i + 1, criteria[i].name);
    } else {
      std::printf("FAIL  %zu  %s: %s\n", i + 1, criteria[i].name, check.detail.c_str());
      ++failures;
    }
    std::fflush(stdout);
  }
  fs::remove_all(tmp);
  return failures == 0 ? 0 : 1;
}
