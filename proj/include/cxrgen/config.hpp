#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "cxrgen/generate.hpp"
#include "cxrgen/jsonl.hpp"
#include "cxrgen/prompt.hpp"

namespace cxrgen {

struct PipelineConfig {
  std::string corpus_path;
  std::optional<std::string> detections_path;  // exactly one of these two
  std::optional<uint64_t> mock_seed;
  std::string rules = "builtin";  // "builtin" or a rules file path
  PromptOptions prompt;
  std::string backend = "template";  // template | remote
  RemoteBackendOptions remote;
  int max_new_tokens = 128;
  double beta = 1.0;
  std::string output_dir;
  std::optional<uint64_t> split_seed;
  int workers = 4;
  bool strict = false;

  // Throws ConfigError on a constraint violation or a missing input path.
  void validate() const;
  json to_json() const;
};

// Flat `key = value` file with [section] headers; '#' comments. Unknown
// keys are rejected. CLI flags override file values, so callers layer this
// under their own flag handling.
PipelineConfig load_config(const std::string& path);

}  // namespace cxrgen
