#include "cxrgen/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>

#include "cxrgen/errors.hpp"

namespace cxrgen {

namespace {

std::string_view trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

uint64_t parse_u64(const std::string& key, std::string_view value) {
  uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + std::string(value) + "'");
  }
  return out;
}

double parse_double(const std::string& key, std::string_view value) {
  try {
    size_t used = 0;
    double out = std::stod(std::string(value), &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + std::string(value) + "'");
  }
}

bool parse_bool(const std::string& key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + std::string(value) + "'");
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open config '" + path + "'");

  PipelineConfig config;
  std::string line;
  std::string section;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string_view entry = trim(line);
    if (entry.empty() || entry.front() == '#') continue;
    if (entry.front() == '[') {
      if (entry.back() != ']') {
        throw ConfigError(path + ":" + std::to_string(line_number) + ": unterminated section");
      }
      section = std::string(trim(entry.substr(1, entry.size() - 2)));
      continue;
    }
    size_t eq = entry.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path + ":" + std::to_string(line_number) + ": expected key = value");
    }
    std::string key = section + "." + std::string(trim(entry.substr(0, eq)));
    std::string value(trim(entry.substr(eq + 1)));

    if (key == "corpus.path") {
      config.corpus_path = value;
    } else if (key == "corpus.split_seed") {
      config.split_seed = parse_u64(key, value);
    } else if (key == "detect.detections_path") {
      config.detections_path = value;
    } else if (key == "detect.mock_seed") {
      config.mock_seed = parse_u64(key, value);
    } else if (key == "filter.rules") {
      config.rules = value;
    } else if (key == "prompt.probability_decimals") {
      config.prompt.probability_decimals = static_cast<int>(parse_u64(key, value));
    } else if (key == "prompt.include_bbox") {
      config.prompt.include_bbox = parse_bool(key, value);
    } else if (key == "prompt.threshold") {
      config.prompt.threshold = parse_double(key, value);
    } else if (key == "prompt.terminator") {
      config.prompt.terminator = value;
    } else if (key == "generate.backend") {
      config.backend = value;
    } else if (key == "generate.endpoint") {
      config.remote.endpoint = value;
    } else if (key == "generate.max_new_tokens") {
      config.max_new_tokens = static_cast<int>(parse_u64(key, value));
    } else if (key == "generate.timeout_seconds") {
      config.remote.timeout_seconds = parse_double(key, value);
    } else if (key == "generate.retries") {
      config.remote.retries = static_cast<int>(parse_u64(key, value));
    } else if (key == "generate.workers") {
      config.workers = static_cast<int>(parse_u64(key, value));
    } else if (key == "evaluate.beta") {
      config.beta = parse_double(key, value);
    } else if (key == "output.dir") {
      config.output_dir = value;
    } else {
      throw ConfigError(path + ":" + std::to_string(line_number) + ": unknown key '" + key + "'");
    }
  }
  return config;
}

void PipelineConfig::validate() const {
  if (corpus_path.empty()) throw ConfigError("corpus path is required");
  if (!std::filesystem::exists(corpus_path)) {
    throw ConfigError("corpus path '" + corpus_path + "' does not exist");
  }
  if (detections_path.has_value() == mock_seed.has_value()) {
    throw ConfigError("exactly one detection source must be configured "
                      "(detections_path or mock_seed)");
  }
  if (detections_path && !std::filesystem::exists(*detections_path)) {
    throw ConfigError("detections path '" + *detections_path + "' does not exist");
  }
  if (rules != "builtin" && !rules.empty() && !std::filesystem::exists(rules)) {
    throw ConfigError("rules file '" + rules + "' does not exist");
  }
  prompt.validate();
  if (backend != "template" && backend != "remote") {
    throw ConfigError("backend must be template or remote, got '" + backend + "'");
  }
  if (backend == "remote" && remote.endpoint.empty()) {
    throw ConfigError("remote backend requires an endpoint");
  }
  if (max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
  if (beta <= 0.0) throw ConfigError("beta must be positive");
  if (output_dir.empty()) throw ConfigError("output dir is required");
  if (workers < 1) throw ConfigError("workers must be >= 1");
}

json PipelineConfig::to_json() const {
  json out = {
      {"corpus_path", corpus_path},
      {"rules", rules},
      {"prompt",
       {{"probability_decimals", prompt.probability_decimals},
        {"include_bbox", prompt.include_bbox},
        {"threshold", prompt.threshold},
        {"terminator", prompt.terminator}}},
      {"backend", backend},
      {"max_new_tokens", max_new_tokens},
      {"beta", beta},
      {"output_dir", output_dir},
      {"workers", workers},
      {"strict", strict},
  };
  if (detections_path) out["detections_path"] = *detections_path;
  if (mock_seed) out["mock_seed"] = *mock_seed;
  if (split_seed) out["split_seed"] = *split_seed;
  if (backend == "remote") {
    out["remote"] = {{"endpoint", remote.endpoint},
                     {"timeout_seconds", remote.timeout_seconds},
                     {"retries", remote.retries}};
  }
  return out;
}

}  // namespace cxrgen
