#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cxrgen {

// Immutable, compiled rule set. Matching is case-insensitive; a sentence is
// removed when any negation or device pattern matches. Cheap to copy.
class FilterRuleSet {
 public:
  // Compiles every pattern at construction; throws InvalidRule on a pattern
  // that does not compile or when no patterns are given.
  FilterRuleSet(std::vector<std::string> negation_patterns,
                std::vector<std::string> device_patterns, std::string version);

  // Pinned default rule set, version "default-1".
  static const FilterRuleSet& builtin();

  // One regex per line, '#' comments. A "negation:" or "device:" prefix
  // routes the pattern; bare lines are negation patterns. File rules replace
  // the defaults entirely.
  static FilterRuleSet from_file(const std::string& path);

  const std::vector<std::string>& negation_patterns() const;
  const std::vector<std::string>& device_patterns() const;
  const std::string& version() const;

  // Identifier of the first matching rule ("negation:<pattern>" or
  // "device:<pattern>"), or nullopt when the sentence is kept.
  std::optional<std::string> match(const std::string& sentence) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

struct FilterDecision {
  std::string sentence;
  bool kept = true;
  std::optional<std::string> matched_rule;  // present exactly when kept is false
};

struct FilterResult {
  std::string filtered_text;  // kept sentences joined by a single space
  std::vector<FilterDecision> decisions;
};

FilterResult filter_findings(const std::vector<std::string>& sentences,
                             const FilterRuleSet& rules);

// Empty path or "builtin" selects the default rule set.
FilterRuleSet load_rules(const std::string& path);

}  // namespace cxrgen
