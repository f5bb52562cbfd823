#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cxrgen/jsonl.hpp"
#include "cxrgen/taxonomy.hpp"

namespace cxrgen {

struct BoundingBox {
  double x = 0, y = 0, w = 0, h = 0;  // normalized to [0, 1], w and h positive
  bool operator==(const BoundingBox&) const = default;
};

struct Detection {
  int class_id = 0;  // 1..19; Background never appears in a detection
  double probability = 0.0;
  std::optional<BoundingBox> bbox;
  bool operator==(const Detection&) const = default;
};

struct DetectionSet {
  std::string study_id;
  std::vector<Detection> detections;  // ascending class_id, one per class
  bool operator==(const DetectionSet&) const = default;
};

// Wire format: one record per detection with fields study_id, class_id,
// probability and optional bbox [x, y, w, h]. Rows for one study may be
// interleaved; sets come back in first-appearance order with duplicates
// collapsed to the maximum probability and detections sorted by class_id.
// Throws MalformedDetection / ProbabilityOutOfRange / UnknownClass with the
// offending line.
std::vector<DetectionSet> ingest_detections(const std::string& path);
std::vector<DetectionSet> ingest_detections(std::istream& in);

void write_detections(const std::vector<DetectionSet>& sets, const std::string& path);
void write_detections(const std::vector<DetectionSet>& sets, std::ostream& out);

// Row codec shared with the lenient CLI reader.
Detection detection_from_json(size_t line, const json& record, std::string* study_id);
json detection_to_json(const std::string& study_id, const Detection& detection);

// Collapses duplicate classes (max probability, first seen wins ties) and
// sorts by class_id.
std::vector<Detection> normalize_detections(std::vector<Detection> rows);

// Deterministic stand-in for the detection network: a pure function of
// (study_id, seed) emitting 0..4 distinct non-Background detections with
// two-decimal probabilities and occasional bounding boxes.
DetectionSet mock_detect(const std::string& study_id, uint64_t seed);

}  // namespace cxrgen
