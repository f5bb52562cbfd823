#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace cxrgen {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
  size_t lcs_len = 0;
  size_t hyp_len = 0;
  size_t ref_len = 0;
};

struct CorpusScore {
  double mean_f = 0.0;  // arithmetic mean of per-study f (0 when n == 0)
  std::map<std::string, RougeScore> per_study;
  size_t n = 0;
  size_t empty_references = 0;
  std::vector<std::string> empty_reference_ids;  // sorted
  std::string rule_set_version;
  std::string prompt_options_version;
};

// Lowercase, split on whitespace, strip leading/trailing punctuation per
// token, drop empty tokens. Internal punctuation ("x-ray") is kept.
std::vector<std::string> tokenize_for_rouge(std::string_view text);

// Longest common subsequence length, O(|a|*|b|) time, O(min(|a|,|b|)) space.
size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Whole-text sequence ROUGE-L: P = lcs/|hyp|, R = lcs/|ref|,
// F = (1 + beta^2) P R / (R + beta^2 P), with 0 for the degenerate cases.
RougeScore rouge_l(const std::string& hyp, const std::string& ref, double beta = 1.0);

struct EvalPair {
  std::string study_id;
  std::string hyp;
  std::string ref;
};

struct EvalVersions {
  std::string rule_set_version = "unspecified";
  std::string prompt_options_version = "unspecified";
};

// Per-study rouge_l plus the corpus mean. Throws DuplicateStudy on repeated
// ids; pairs whose reference tokenizes to nothing are counted and excluded
// from the mean. Result is independent of pair order.
CorpusScore evaluate_corpus(const std::vector<EvalPair>& pairs, double beta = 1.0,
                            const EvalVersions& versions = {});

struct ComparisonRow {
  std::string system;
  double rouge_l = 0.0;
};

// Whitespace-separated "name score" rows, '#' comments.
std::vector<ComparisonRow> read_baselines(const std::string& path);

// Fixed-width table sorted ascending by score (ties by name); the best row
// is marked.
std::string render_comparison(std::vector<ComparisonRow> rows);

}  // namespace cxrgen
