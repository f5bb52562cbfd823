#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cxrgen/jsonl.hpp"

namespace cxrgen {

enum class Split { kTrain, kValidation, kTest };

std::string_view to_string(Split split);
std::optional<Split> split_from_string(std::string_view name);

struct StudyRecord {
  std::string study_id;
  std::string report_text;
  std::optional<Split> split;
  bool operator==(const StudyRecord&) const = default;
};

enum class SectionName { kIndication, kTechnique, kComparison, kFindings, kImpression, kOther };

std::string_view to_string(SectionName name);
std::optional<SectionName> section_from_string(std::string_view name);

// Character span of one section within the raw report. The body offsets
// delimit the trimmed section text; header_begin == body_begin for Other.
struct SectionSpan {
  SectionName name;
  size_t header_begin = 0;
  size_t body_begin = 0;
  size_t body_end = 0;
};

struct RadiologyReport {
  std::string study_id;
  std::string raw_text;
  std::map<SectionName, std::string> sections;
  std::map<SectionName, std::vector<std::string>> sentence_lists;
  std::vector<SectionSpan> spans;  // document order

  // nullptr when the section is absent.
  const std::string* section(SectionName name) const;
};

// Splits the raw text into sections. A header is a recognized keyword
// (INDICATION, HISTORY, TECHNIQUE, COMPARISON, FINDINGS, IMPRESSION;
// case-insensitive) at the start of text or preceded by whitespace,
// immediately followed by ':'. Text before the first header goes to Other;
// a repeated header for a section already seen is treated as plain content.
// Throws EmptyReport when raw is empty or whitespace-only.
RadiologyReport parse_report(const std::string& study_id, const std::string& raw);

const std::vector<std::string>& default_abbreviations();

// Sentence split at '.', '!' or '?' followed by whitespace and an uppercase
// letter, or at end of text. A '.' whose preceding word is in the
// abbreviation list never splits; "no" suppresses only when a digit follows.
std::vector<std::string> segment_sentences(
    std::string_view text,
    const std::vector<std::string>& abbreviations = default_abbreviations());

// One record per line: {"report_text": ..., "split"?: ..., "study_id": ...}.
// read_corpus throws MalformedRecord (with line number) on bad records,
// including duplicate or empty study_id; write-then-read is the identity.
std::vector<StudyRecord> read_corpus(const std::string& path);
std::vector<StudyRecord> read_corpus(std::istream& in);
void write_corpus(const std::vector<StudyRecord>& records, const std::string& path);
void write_corpus(const std::vector<StudyRecord>& records, std::ostream& out);

// Single-record codec shared by the strict readers above and the lenient
// streaming used by the CLI. Throws MalformedRecord.
StudyRecord study_record_from_json(size_t line, const json& record);
json study_record_to_json(const StudyRecord& record);

// Assigns train/validation/test with exact quotas floor(0.7 N) and
// floor(0.1 N), remainder to test. Records that already carry a split keep
// it; unassigned records fill each quota in seeded-hash order of study_id,
// so re-splitting an appended corpus never reassigns existing records.
void split_corpus(std::vector<StudyRecord>& records, uint64_t seed);

}  // namespace cxrgen
