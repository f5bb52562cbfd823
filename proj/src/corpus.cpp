#include "cxrgen/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <numeric>
#include <set>

#include "cxrgen/errors.hpp"
#include "cxrgen/hashing.hpp"

namespace cxrgen {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

char to_lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string lowercased(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = to_lower(c);
  return out;
}

std::string_view trimmed(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

struct HeaderKeyword {
  std::string_view word;
  SectionName section;
};

constexpr std::array<HeaderKeyword, 6> kHeaderKeywords = {{
    {"INDICATION", SectionName::kIndication},
    {"HISTORY", SectionName::kIndication},
    {"TECHNIQUE", SectionName::kTechnique},
    {"COMPARISON", SectionName::kComparison},
    {"FINDINGS", SectionName::kFindings},
    {"IMPRESSION", SectionName::kImpression},
}};

bool keyword_matches(std::string_view text, size_t pos, std::string_view keyword) {
  if (pos + keyword.size() >= text.size()) return false;  // need room for ':'
  for (size_t i = 0; i < keyword.size(); ++i) {
    if (to_lower(text[pos + i]) != to_lower(keyword[i])) return false;
  }
  return text[pos + keyword.size()] == ':';
}

struct HeaderHit {
  SectionName section;
  size_t begin;       // keyword offset
  size_t body_start;  // offset just past the ':'
};

std::vector<HeaderHit> find_headers(std::string_view raw) {
  std::vector<HeaderHit> hits;
  for (size_t pos = 0; pos < raw.size(); ++pos) {
    if (pos != 0 && !is_space(raw[pos - 1])) continue;
    for (const HeaderKeyword& kw : kHeaderKeywords) {
      if (keyword_matches(raw, pos, kw.word)) {
        hits.push_back({kw.section, pos, pos + kw.word.size() + 1});
        pos += kw.word.size();  // skip past keyword; ++pos moves over ':'
        break;
      }
    }
  }
  return hits;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> split_from_string(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  return std::nullopt;
}

std::string_view to_string(SectionName name) {
  switch (name) {
    case SectionName::kIndication: return "indication";
    case SectionName::kTechnique: return "technique";
    case SectionName::kComparison: return "comparison";
    case SectionName::kFindings: return "findings";
    case SectionName::kImpression: return "impression";
    case SectionName::kOther: return "other";
  }
  return "other";
}

std::optional<SectionName> section_from_string(std::string_view name) {
  for (SectionName s : {SectionName::kIndication, SectionName::kTechnique,
                        SectionName::kComparison, SectionName::kFindings,
                        SectionName::kImpression, SectionName::kOther}) {
    if (name == to_string(s)) return s;
  }
  return std::nullopt;
}

const std::string* RadiologyReport::section(SectionName name) const {
  auto it = sections.find(name);
  return it == sections.end() ? nullptr : &it->second;
}

RadiologyReport parse_report(const std::string& study_id, const std::string& raw) {
  if (trimmed(raw).empty()) throw EmptyReport(study_id);

  RadiologyReport report;
  report.study_id = study_id;
  report.raw_text = raw;

  // Keep only the first header per section; repeats stay inside the body of
  // whatever section precedes them.
  std::vector<HeaderHit> accepted;
  std::set<SectionName> seen;
  for (const HeaderHit& hit : find_headers(raw)) {
    if (seen.insert(hit.section).second) accepted.push_back(hit);
  }

  auto add_span = [&](SectionName name, size_t header_begin, size_t from, size_t to) {
    std::string_view body = trimmed(std::string_view(raw).substr(from, to - from));
    size_t body_begin = body.empty() ? from : static_cast<size_t>(body.data() - raw.data());
    report.spans.push_back({name, header_begin, body_begin, body_begin + body.size()});
    report.sections[name] = std::string(body);
    report.sentence_lists[name] = segment_sentences(body);
  };

  size_t first_header = accepted.empty() ? raw.size() : accepted.front().begin;
  if (!trimmed(std::string_view(raw).substr(0, first_header)).empty()) {
    size_t other_begin =
        static_cast<size_t>(trimmed(std::string_view(raw).substr(0, first_header)).data() -
                            raw.data());
    add_span(SectionName::kOther, other_begin, 0, first_header);
  }

  for (size_t i = 0; i < accepted.size(); ++i) {
    size_t end = i + 1 < accepted.size() ? accepted[i + 1].begin : raw.size();
    add_span(accepted[i].section, accepted[i].begin, accepted[i].body_start, end);
  }
  return report;
}

const std::vector<std::string>& default_abbreviations() {
  static const std::vector<std::string> kAbbreviations = {
      "dr", "mr", "mrs", "vs", "e.g", "i.e", "approx", "no", "cm", "mm"};
  return kAbbreviations;
}

namespace {

// Word immediately before position `dot` (exclusive), lowercased, with
// leading punctuation stripped. "(e.g" -> "e.g".
std::string word_before(std::string_view text, size_t dot) {
  size_t begin = dot;
  while (begin > 0 && !is_space(text[begin - 1])) --begin;
  while (begin < dot && !std::isalnum(static_cast<unsigned char>(text[begin]))) ++begin;
  return lowercased(text.substr(begin, dot - begin));
}

bool suppressed_by_abbreviation(std::string_view text, size_t dot,
                                const std::vector<std::string>& abbreviations) {
  std::string word = word_before(text, dot);
  if (word.empty()) return false;
  for (const std::string& abbr : abbreviations) {
    if (word != abbr) continue;
    if (abbr == "no") {
      size_t next = dot + 1;
      while (next < text.size() && is_space(text[next])) ++next;
      return next < text.size() && is_digit(text[next]);
    }
    return true;
  }
  return false;
}

}  // namespace

std::vector<std::string> segment_sentences(std::string_view text,
                                           const std::vector<std::string>& abbreviations) {
  std::vector<std::string> sentences;
  auto flush = [&](size_t begin, size_t end) {
    std::string_view sentence = trimmed(text.substr(begin, end - begin));
    if (!sentence.empty()) sentences.emplace_back(sentence);
  };

  size_t start = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (c == '.' && suppressed_by_abbreviation(text, i, abbreviations)) continue;
    size_t next = i + 1;
    while (next < text.size() && is_space(text[next])) ++next;
    bool at_end = next == text.size();
    bool boundary = (next > i + 1 && next < text.size() && is_upper(text[next])) || at_end;
    if (!boundary) continue;
    flush(start, i + 1);
    start = next;
    i = next - 1;
  }
  flush(start, text.size());
  return sentences;
}

StudyRecord study_record_from_json(size_t line, const json& record) {
  if (!record.is_object()) throw MalformedRecord(line, "record is not an object");
  StudyRecord out;
  auto id = record.find("study_id");
  if (id == record.end() || !id->is_string() || id->get<std::string>().empty()) {
    throw MalformedRecord(line, "missing or empty study_id");
  }
  out.study_id = id->get<std::string>();
  auto text = record.find("report_text");
  if (text == record.end() || !text->is_string() || text->get<std::string>().empty()) {
    throw MalformedRecord(line, "missing or empty report_text");
  }
  out.report_text = text->get<std::string>();
  auto split = record.find("split");
  if (split != record.end() && !split->is_null()) {
    if (!split->is_string()) throw MalformedRecord(line, "split is not a string");
    out.split = split_from_string(split->get<std::string>());
    if (!out.split) {
      throw MalformedRecord(line, "unknown split '" + split->get<std::string>() + "'");
    }
  }
  return out;
}

json study_record_to_json(const StudyRecord& record) {
  json out = {{"study_id", record.study_id}, {"report_text", record.report_text}};
  if (record.split) out["split"] = std::string(to_string(*record.split));
  return out;
}

std::vector<StudyRecord> read_corpus(std::istream& in) {
  std::vector<StudyRecord> records;
  std::set<std::string> seen;
  for_each_jsonl(in, [&](size_t line, const json& record) {
    StudyRecord parsed = study_record_from_json(line, record);
    if (!seen.insert(parsed.study_id).second) {
      throw MalformedRecord(line, "duplicate study_id '" + parsed.study_id + "'");
    }
    records.push_back(std::move(parsed));
  });
  return records;
}

std::vector<StudyRecord> read_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");
  return read_corpus(in);
}

void write_corpus(const std::vector<StudyRecord>& records, std::ostream& out) {
  for (const StudyRecord& record : records) write_jsonl_line(out, study_record_to_json(record));
}

void write_corpus(const std::vector<StudyRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open '" + path + "' for writing");
  write_corpus(records, out);
  if (!out) throw IoFailure("write failed for '" + path + "'");
}

void split_corpus(std::vector<StudyRecord>& records, uint64_t seed) {
  const size_t n = records.size();
  if (n == 0) return;
  const size_t train_quota = n * 7 / 10;
  const size_t validation_quota = n / 10;

  size_t assigned_train = 0, assigned_validation = 0;
  std::vector<size_t> unassigned;
  for (size_t i = 0; i < n; ++i) {
    if (!records[i].split) {
      unassigned.push_back(i);
    } else if (*records[i].split == Split::kTrain) {
      ++assigned_train;
    } else if (*records[i].split == Split::kValidation) {
      ++assigned_validation;
    }
  }
  std::sort(unassigned.begin(), unassigned.end(), [&](size_t a, size_t b) {
    uint64_t ha = seeded_hash(records[a].study_id, seed);
    uint64_t hb = seeded_hash(records[b].study_id, seed);
    if (ha != hb) return ha < hb;
    return records[a].study_id < records[b].study_id;
  });

  size_t train_deficit = train_quota > assigned_train ? train_quota - assigned_train : 0;
  size_t validation_deficit =
      validation_quota > assigned_validation ? validation_quota - assigned_validation : 0;
  for (size_t index : unassigned) {
    if (train_deficit > 0) {
      records[index].split = Split::kTrain;
      --train_deficit;
    } else if (validation_deficit > 0) {
      records[index].split = Split::kValidation;
      --validation_deficit;
    } else {
      records[index].split = Split::kTest;
    }
  }
}

}  // namespace cxrgen
