#include "cxrgen/filter.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <boost/regex.hpp>

#include "cxrgen/errors.hpp"
#include "cxrgen/hashing.hpp"

namespace cxrgen {

namespace {

struct CompiledRule {
  std::string id;  // "<category>:<pattern>"
  boost::regex regex;
};

std::vector<CompiledRule> compile(const std::vector<std::string>& patterns,
                                  const char* category, size_t base_line) {
  std::vector<CompiledRule> compiled;
  compiled.reserve(patterns.size());
  for (const std::string& pattern : patterns) {
    try {
      compiled.push_back({std::string(category) + ":" + pattern,
                          boost::regex(pattern, boost::regex::perl | boost::regex::icase)});
    } catch (const boost::regex_error& e) {
      throw InvalidRule(pattern, base_line, e.what());
    }
  }
  return compiled;
}

std::string_view trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

struct FilterRuleSet::Impl {
  std::vector<std::string> negation_patterns;
  std::vector<std::string> device_patterns;
  std::string version;
  std::vector<CompiledRule> compiled;  // negation rules first, then device
};

FilterRuleSet::FilterRuleSet(std::vector<std::string> negation_patterns,
                             std::vector<std::string> device_patterns, std::string version) {
  if (negation_patterns.empty() && device_patterns.empty()) {
    throw InvalidRule("", 0, "rule set contains no patterns");
  }
  auto impl = std::make_shared<Impl>();
  impl->negation_patterns = std::move(negation_patterns);
  impl->device_patterns = std::move(device_patterns);
  impl->version = std::move(version);
  impl->compiled = compile(impl->negation_patterns, "negation", 0);
  auto devices = compile(impl->device_patterns, "device", 0);
  impl->compiled.insert(impl->compiled.end(), std::make_move_iterator(devices.begin()),
                        std::make_move_iterator(devices.end()));
  impl_ = std::move(impl);
}

const FilterRuleSet& FilterRuleSet::builtin() {
  static const FilterRuleSet kDefault(
      {R"(\bno\b)", R"(\bwithout\b)", R"(\bfree of\b)", R"(\bnegative for\b)",
       R"(\bunremarkable\b)", R"(\bwithin normal limits\b)", R"(\bclear of\b)",
       R"(\bis normal\b)", R"(\bare normal\b)", R"(\bnot? (seen|identified|visualized|present)\b)"},
      {R"(\btube\b)", R"(\bcatheter\b)", R"(\bline\b)", R"(\bpacemaker\b)", R"(\bwire\b)",
       R"(\bclip\b)", R"(\bdevice\b)", R"(\bport\b)", R"(\bvalve\b)", R"(\bsternotomy\b)",
       R"(\bpicc\b)", R"(\bdrain\b)", R"(\blead\b)"},
      "default-1");
  return kDefault;
}

FilterRuleSet FilterRuleSet::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open rules file '" + path + "'");

  std::vector<std::string> negation, device;
  std::string line;
  std::string content;
  size_t line_number = 0;
  // Patterns are validated line by line so InvalidRule can carry the line.
  while (std::getline(in, line)) {
    ++line_number;
    content += line;
    content += '\n';
    std::string_view entry = trim(line);
    if (entry.empty() || entry.front() == '#') continue;
    std::vector<std::string>* target = &negation;
    if (entry.starts_with("device:")) {
      target = &device;
      entry = trim(entry.substr(7));
    } else if (entry.starts_with("negation:")) {
      entry = trim(entry.substr(9));
    }
    if (entry.empty()) throw InvalidRule(std::string(entry), line_number, "empty pattern");
    try {
      boost::regex probe(std::string(entry), boost::regex::perl | boost::regex::icase);
    } catch (const boost::regex_error& e) {
      throw InvalidRule(std::string(entry), line_number, e.what());
    }
    target->push_back(std::string(entry));
  }

  char digest[17];
  std::snprintf(digest, sizeof(digest), "%08llx",
                static_cast<unsigned long long>(fnv1a64(content) & 0xffffffffull));
  std::string version =
      "file:" + std::filesystem::path(path).filename().string() + "#" + digest;
  return FilterRuleSet(std::move(negation), std::move(device), std::move(version));
}

const std::vector<std::string>& FilterRuleSet::negation_patterns() const {
  return impl_->negation_patterns;
}
const std::vector<std::string>& FilterRuleSet::device_patterns() const {
  return impl_->device_patterns;
}
const std::string& FilterRuleSet::version() const { return impl_->version; }

std::optional<std::string> FilterRuleSet::match(const std::string& sentence) const {
  for (const CompiledRule& rule : impl_->compiled) {
    if (boost::regex_search(sentence, rule.regex)) return rule.id;
  }
  return std::nullopt;
}

FilterResult filter_findings(const std::vector<std::string>& sentences,
                             const FilterRuleSet& rules) {
  FilterResult result;
  result.decisions.reserve(sentences.size());
  for (const std::string& sentence : sentences) {
    FilterDecision decision;
    decision.sentence = sentence;
    decision.matched_rule = rules.match(sentence);
    decision.kept = !decision.matched_rule.has_value();
    if (decision.kept) {
      if (!result.filtered_text.empty()) result.filtered_text += ' ';
      result.filtered_text += sentence;
    }
    result.decisions.push_back(std::move(decision));
  }
  return result;
}

FilterRuleSet load_rules(const std::string& path) {
  if (path.empty() || path == "builtin") return FilterRuleSet::builtin();
  return FilterRuleSet::from_file(path);
}

}  // namespace cxrgen
