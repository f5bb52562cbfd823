#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cxrgen {

// Base of all toolkit errors. `kind()` is the stable machine-readable name
// emitted in CLI error records.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

struct EmptyReport : Error {
  explicit EmptyReport(const std::string& study_id)
      : Error("EmptyReport",
              "report text is empty or whitespace-only (study " + study_id + ")") {}
};

struct MalformedRecord : Error {
  size_t line;
  MalformedRecord(size_t line_number, const std::string& detail)
      : Error("MalformedRecord", "line " + std::to_string(line_number) + ": " + detail),
        line(line_number) {}
};

struct IoFailure : Error {
  explicit IoFailure(const std::string& detail) : Error("IoFailure", detail) {}
};

struct InvalidRule : Error {
  std::string pattern;
  size_t line;  // 0 when the rule did not come from a file
  InvalidRule(std::string pattern_, size_t line_number, const std::string& detail)
      : Error("InvalidRule", "invalid pattern '" + pattern_ + "'" +
                                 (line_number ? " at line " + std::to_string(line_number) : "") +
                                 ": " + detail),
        pattern(std::move(pattern_)),
        line(line_number) {}
};

struct UnknownClass : Error {
  int class_id;
  size_t line;  // 0 outside of file ingestion
  explicit UnknownClass(int id, size_t line_number = 0)
      : Error("UnknownClass", "class id " + std::to_string(id) + " outside taxonomy range 0..19" +
                                  (line_number ? " (line " + std::to_string(line_number) + ")" : "")),
        class_id(id),
        line(line_number) {}
};

struct MalformedDetection : Error {
  size_t line;
  MalformedDetection(size_t line_number, const std::string& detail)
      : Error("MalformedDetection", "line " + std::to_string(line_number) + ": " + detail),
        line(line_number) {}
};

struct ProbabilityOutOfRange : Error {
  size_t line;
  ProbabilityOutOfRange(size_t line_number, double value)
      : Error("ProbabilityOutOfRange", "line " + std::to_string(line_number) + ": probability " +
                                           std::to_string(value) + " outside [0, 1]"),
        line(line_number) {}
};

struct EmptyTarget : Error {
  explicit EmptyTarget(const std::string& study_id)
      : Error("EmptyTarget", "filtered findings are empty (study " + study_id + ")") {}
};

struct PromptParseError : Error {
  explicit PromptParseError(const std::string& detail) : Error("PromptParseError", detail) {}
};

struct BackendUnreachable : Error {
  explicit BackendUnreachable(const std::string& detail) : Error("BackendUnreachable", detail) {}
};

struct BackendProtocolError : Error {
  explicit BackendProtocolError(const std::string& detail)
      : Error("BackendProtocolError", detail) {}
};

struct Timeout : Error {
  double seconds;
  explicit Timeout(double seconds_)
      : Error("Timeout", "backend request timed out after " + std::to_string(seconds_) + " s"),
        seconds(seconds_) {}
};

struct DuplicateStudy : Error {
  std::string study_id;
  explicit DuplicateStudy(std::string study_id_)
      : Error("DuplicateStudy", "duplicate study_id '" + study_id_ + "'"),
        study_id(std::move(study_id_)) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& detail) : Error("ConfigError", detail) {}
};

// Wraps an error raised while a pipeline stage was executing; keeps the
// original kind so exit codes survive the wrapping.
struct PipelineError : Error {
  std::string stage;
  std::string inner_kind;
  PipelineError(std::string stage_, std::string inner_kind_, const std::string& detail)
      : Error("PipelineError", "stage '" + stage_ + "': " + detail),
        stage(std::move(stage_)),
        inner_kind(std::move(inner_kind_)) {}
};

}  // namespace cxrgen
