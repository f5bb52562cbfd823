#include "cxrgen/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cxrgen/errors.hpp"

namespace cxrgen {

std::vector<std::string> tokenize_for_rouge(std::string_view text) {
  std::vector<std::string> tokens;
  size_t i = 0;
  const size_t n = text.size();
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto is_punct = [](unsigned char c) { return std::ispunct(c) != 0; };
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    size_t start = i;
    while (i < n && !is_space(text[i])) ++i;
    size_t begin = start, end = i;
    while (begin < end && is_punct(text[begin])) ++begin;
    while (end > begin && is_punct(text[end - 1])) --end;
    if (begin == end) continue;
    std::string token(text.substr(begin, end - begin));
    for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    tokens.push_back(std::move(token));
  }
  return tokens;
}

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  // Intern tokens so the inner loop compares ints.
  std::unordered_map<std::string_view, int> ids;
  auto intern = [&](const std::vector<std::string>& v) {
    std::vector<int> out;
    out.reserve(v.size());
    for (const auto& t : v) {
      auto [it, _] = ids.try_emplace(t, static_cast<int>(ids.size()));
      out.push_back(it->second);
    }
    return out;
  };
  std::vector<int> rows = intern(a.size() >= b.size() ? a : b);
  std::vector<int> cols = intern(a.size() >= b.size() ? b : a);

  std::vector<size_t> prev(cols.size() + 1, 0);
  std::vector<size_t> cur(cols.size() + 1, 0);
  for (int row : rows) {
    for (size_t j = 0; j < cols.size(); ++j) {
      cur[j + 1] = row == cols[j] ? prev[j] + 1 : std::max(prev[j + 1], cur[j]);
    }
    std::swap(prev, cur);
  }
  return prev[cols.size()];
}

RougeScore rouge_l(const std::string& hyp, const std::string& ref, double beta) {
  std::vector<std::string> hyp_tokens = tokenize_for_rouge(hyp);
  std::vector<std::string> ref_tokens = tokenize_for_rouge(ref);
  RougeScore score;
  score.hyp_len = hyp_tokens.size();
  score.ref_len = ref_tokens.size();
  score.lcs_len = lcs_length(hyp_tokens, ref_tokens);
  if (score.hyp_len > 0) score.precision = static_cast<double>(score.lcs_len) / score.hyp_len;
  if (score.ref_len > 0) score.recall = static_cast<double>(score.lcs_len) / score.ref_len;
  const double b2 = beta * beta;
  const double denom = score.recall + b2 * score.precision;
  if (denom > 0.0) score.f = (1.0 + b2) * score.precision * score.recall / denom;
  return score;
}

CorpusScore evaluate_corpus(const std::vector<EvalPair>& pairs, double beta,
                            const EvalVersions& versions) {
  CorpusScore corpus;
  corpus.rule_set_version = versions.rule_set_version;
  corpus.prompt_options_version = versions.prompt_options_version;
  std::set<std::string> seen;
  for (const EvalPair& pair : pairs) {
    if (!seen.insert(pair.study_id).second) throw DuplicateStudy(pair.study_id);
    if (tokenize_for_rouge(pair.ref).empty()) {
      corpus.empty_reference_ids.push_back(pair.study_id);
      continue;
    }
    corpus.per_study.emplace(pair.study_id, rouge_l(pair.hyp, pair.ref, beta));
  }
  std::sort(corpus.empty_reference_ids.begin(), corpus.empty_reference_ids.end());
  corpus.empty_references = corpus.empty_reference_ids.size();
  corpus.n = corpus.per_study.size();
  if (corpus.n > 0) {
    double sum = 0.0;  // summed in study_id order so the mean is order invariant
    for (const auto& [id, score] : corpus.per_study) sum += score.f;
    corpus.mean_f = sum / static_cast<double>(corpus.n);
  }
  return corpus;
}

std::vector<ComparisonRow> read_baselines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");
  std::vector<ComparisonRow> rows;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream fields(line);
    std::string name;
    if (!(fields >> name)) continue;  // blank line
    double score = 0.0;
    if (!(fields >> score)) throw MalformedRecord(line_number, "expected '<system> <score>'");
    rows.push_back({name, score});
  }
  return rows;
}

std::string render_comparison(std::vector<ComparisonRow> rows) {
  if (rows.empty()) throw Error("InvalidArgument", "render_comparison requires at least one row");
  std::sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    if (a.rouge_l != b.rouge_l) return a.rouge_l < b.rouge_l;
    return a.system < b.system;
  });
  size_t width = std::string("System").size();
  for (const auto& row : rows) width = std::max(width, row.system.size());

  std::ostringstream out;
  out << "System";
  out << std::string(width - 6 + 2, ' ') << "ROUGE-L\n";
  char buf[32];
  for (size_t i = 0; i < rows.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.3f", rows[i].rouge_l);
    out << rows[i].system << std::string(width - rows[i].system.size() + 2, ' ') << buf;
    if (i + 1 == rows.size()) out << "  (best)";
    out << '\n';
  }
  return out.str();
}

}  // namespace cxrgen
