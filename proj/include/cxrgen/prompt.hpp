#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cxrgen/detect.hpp"

namespace cxrgen {

struct PromptOptions {
  int probability_decimals = 2;  // >= 1
  bool include_bbox = false;
  double threshold = 0.0;  // strict: an entry needs probability > threshold
  std::string terminator = "TL;DR";

  // Pinned identifier of the serialization decisions, recorded with every
  // evaluation so scores stay comparable across runs.
  std::string version() const;
  void validate() const;  // throws ConfigError
};

struct Prompt {
  std::string study_id;
  std::string text;
  PromptOptions options;
};

struct PromptEntry {
  std::string label;
  double probability = 0.0;
  std::optional<BoundingBox> bbox;
};

// Serializes the detections above the threshold, excluding Background and
// Device, in ascending class_id order: "<label>: <p>, <label>: <p> TL;DR".
// An empty entry list yields "no abnormalities detected TL;DR".
Prompt build_prompt(const DetectionSet& ds, const PromptOptions& opts = {});

// Inverse of build_prompt's serialization. Throws PromptParseError on text
// build_prompt could not have produced.
std::vector<PromptEntry> parse_prompt(const std::string& text,
                                      const std::string& terminator = "TL;DR");

// "<prompt>\n<filtered findings>", the input-sequence layout for fine-tuning
// consumers. Throws EmptyTarget when the findings are empty.
std::string render_training_pair(const Prompt& prompt, const std::string& filtered_findings);

// Fixed-point decimal formatting, round half to even.
std::string format_probability(double p, int decimals);

}  // namespace cxrgen
