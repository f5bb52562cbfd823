#include "cxrgen/prompt.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>

#include "cxrgen/errors.hpp"

namespace cxrgen {

void PromptOptions::validate() const {
  if (probability_decimals < 1) throw ConfigError("probability_decimals must be >= 1");
  if (threshold < 0.0 || threshold >= 1.0) throw ConfigError("threshold must be in [0, 1)");
  if (terminator.empty()) throw ConfigError("terminator must be non-empty");
}

std::string PromptOptions::version() const {
  return "prompt-v1 decimals=" + std::to_string(probability_decimals) +
         " bbox=" + (include_bbox ? "on" : "off") + " threshold=" + format_probability(threshold, 4) +
         " terminator=" + terminator;
}

std::string format_probability(double p, int decimals) {
  double scale = std::pow(10.0, decimals);
  double scaled = p * scale;
  double floor_v = std::floor(scaled);
  double frac = scaled - floor_v;
  long long units = static_cast<long long>(floor_v);
  if (frac > 0.5) {
    ++units;
  } else if (frac == 0.5 && units % 2 != 0) {
    ++units;  // half to even
  }
  long long whole = units / static_cast<long long>(scale);
  long long rest = units % static_cast<long long>(scale);
  std::string digits = std::to_string(rest);
  return std::to_string(whole) + "." +
         std::string(static_cast<size_t>(decimals) - digits.size(), '0') + digits;
}

Prompt build_prompt(const DetectionSet& ds, const PromptOptions& opts) {
  opts.validate();

  std::vector<Detection> entries;
  for (const Detection& d : ds.detections) {
    if (d.class_id == kBackgroundClassId || d.class_id == kDeviceClassId) continue;
    if (!(d.probability > opts.threshold)) continue;
    entries.push_back(d);
  }
  // The predefined order is ascending class_id regardless of input order.
  std::sort(entries.begin(), entries.end(),
            [](const Detection& a, const Detection& b) { return a.class_id < b.class_id; });

  std::string text;
  if (entries.empty()) {
    text = "no abnormalities detected";
  } else {
    for (size_t i = 0; i < entries.size(); ++i) {
      if (i > 0) text += ", ";
      text += std::string(label_of(entries[i].class_id)) + ": " +
              format_probability(entries[i].probability, opts.probability_decimals);
      if (opts.include_bbox && entries[i].bbox) {
        const BoundingBox& b = *entries[i].bbox;
        text += " at [" + format_probability(b.x, 2) + ", " + format_probability(b.y, 2) + ", " +
                format_probability(b.w, 2) + ", " + format_probability(b.h, 2) + "]";
      }
    }
  }
  text += " " + opts.terminator;
  return {ds.study_id, std::move(text), opts};
}

namespace {

bool parse_fixed_number(std::string_view s, double* out) {
  size_t dot = s.find('.');
  if (dot == std::string_view::npos || dot == 0 || dot + 1 == s.size()) return false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (i == dot) continue;
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  *out = std::stod(std::string(s));
  return true;
}

// Splits on ", " outside brackets.
std::vector<std::string_view> split_entries(std::string_view body) {
  std::vector<std::string_view> parts;
  size_t start = 0;
  int depth = 0;
  for (size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '[') ++depth;
    if (body[i] == ']') --depth;
    if (depth == 0 && body[i] == ',' && i + 1 < body.size() && body[i + 1] == ' ') {
      parts.push_back(body.substr(start, i - start));
      start = i + 2;
      ++i;
    }
  }
  parts.push_back(body.substr(start));
  return parts;
}

PromptEntry parse_entry(std::string_view entry) {
  size_t sep = entry.find(": ");
  if (sep == std::string_view::npos || sep == 0) {
    throw PromptParseError("entry '" + std::string(entry) + "' is not '<label>: <probability>'");
  }
  PromptEntry out;
  out.label = std::string(entry.substr(0, sep));
  std::string_view rest = entry.substr(sep + 2);

  std::string_view number = rest;
  size_t at = rest.find(" at [");
  if (at != std::string_view::npos) {
    number = rest.substr(0, at);
    std::string_view coords = rest.substr(at + 5);
    if (coords.empty() || coords.back() != ']') {
      throw PromptParseError("unterminated bbox in entry '" + std::string(entry) + "'");
    }
    coords.remove_suffix(1);
    BoundingBox box;
    double* slots[4] = {&box.x, &box.y, &box.w, &box.h};
    size_t field = 0, start = 0;
    for (size_t i = 0; i <= coords.size(); ++i) {
      if (i == coords.size() || (coords[i] == ',' && i + 1 < coords.size() && coords[i + 1] == ' ')) {
        if (field >= 4 || !parse_fixed_number(coords.substr(start, i - start), slots[field])) {
          throw PromptParseError("bad bbox in entry '" + std::string(entry) + "'");
        }
        ++field;
        start = i + 2;
        ++i;
      }
    }
    if (field != 4) throw PromptParseError("bbox needs four coordinates in '" + std::string(entry) + "'");
    out.bbox = box;
  }
  if (!parse_fixed_number(number, &out.probability)) {
    throw PromptParseError("bad probability '" + std::string(number) + "'");
  }
  return out;
}

}  // namespace

std::vector<PromptEntry> parse_prompt(const std::string& text, const std::string& terminator) {
  if (terminator.empty()) throw PromptParseError("terminator must be non-empty");
  std::string suffix = " " + terminator;
  if (text.size() <= suffix.size() || !text.ends_with(suffix)) {
    throw PromptParseError("prompt does not end with ' " + terminator + "'");
  }
  std::string_view body(text.data(), text.size() - suffix.size());
  if (body == "no abnormalities detected") return {};
  std::vector<PromptEntry> entries;
  for (std::string_view part : split_entries(body)) entries.push_back(parse_entry(part));
  return entries;
}

std::string render_training_pair(const Prompt& prompt, const std::string& filtered_findings) {
  if (filtered_findings.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw EmptyTarget(prompt.study_id);
  }
  return prompt.text + "\n" + filtered_findings;
}

}  // namespace cxrgen
