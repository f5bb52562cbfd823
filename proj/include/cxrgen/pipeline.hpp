#pragma once

#include <map>
#include <string>
#include <vector>

#include "cxrgen/config.hpp"
#include "cxrgen/corpus.hpp"
#include "cxrgen/filter.hpp"
#include "cxrgen/generate.hpp"
#include "cxrgen/prompt.hpp"
#include "cxrgen/rouge.hpp"

namespace cxrgen {

struct StageCounts {
  size_t reports = 0;
  size_t parsed = 0;
  size_t filtered = 0;
  size_t detection_sets = 0;
  size_t prompts = 0;
  size_t generations = 0;
  size_t scored = 0;
  size_t empty_references = 0;
  size_t record_errors = 0;
};

struct RunManifest {
  std::string tool_version;
  std::string status;        // "ok" or "failed"
  std::string failed_stage;  // empty when ok
  json config_snapshot;
  std::string rule_set_version;
  std::string prompt_options_version;
  StageCounts counts;
  std::map<std::string, size_t> split_counts;  // present when split_seed is set
  std::string started_at;  // ISO 8601 UTC
  std::string finished_at;
};

// Record shapes shared by `run` and the stage subcommands, so piping the
// subcommands reproduces `run` byte for byte.
json parsed_record(const RadiologyReport& report);
RadiologyReport report_from_parsed_record(size_t line, const json& record);
json filtered_record(const std::string& study_id, const std::string& text);
json decision_record(const std::string& study_id, const FilterDecision& decision);
json prompt_record(const Prompt& prompt);
json generation_record(const GeneratedFindings& findings);
json score_record(const std::string& study_id, const RougeScore& score);
json summary_json(const CorpusScore& corpus, double beta);

// Runs parse -> filter -> (ingest | mock) -> prompt -> generate -> evaluate,
// writing every stage output plus manifest.json into output_dir. Malformed
// records fail individually (logged to errors.jsonl and counted) unless
// config.strict; infrastructure errors abort with the failing stage recorded
// in the manifest before the error is rethrown.
RunManifest run_pipeline(const PipelineConfig& config);

json manifest_to_json(const RunManifest& manifest);

}  // namespace cxrgen
