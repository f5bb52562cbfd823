#include "cxrgen/detect.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

#include "cxrgen/errors.hpp"
#include "cxrgen/hashing.hpp"

namespace cxrgen {

Detection detection_from_json(size_t line, const json& record, std::string* study_id) {
  if (!record.is_object()) throw MalformedDetection(line, "record is not an object");
  auto id = record.find("study_id");
  if (id == record.end() || !id->is_string() || id->get<std::string>().empty()) {
    throw MalformedDetection(line, "missing or empty study_id");
  }
  *study_id = id->get<std::string>();

  auto cls = record.find("class_id");
  if (cls == record.end() || !cls->is_number_integer()) {
    throw MalformedDetection(line, "missing or non-integer class_id");
  }
  int class_id = cls->get<int>();
  if (class_id < 0 || class_id >= kNumAbnormalityClasses) throw UnknownClass(class_id, line);
  if (class_id == kBackgroundClassId) {
    throw MalformedDetection(line, "Background is not a detectable class");
  }

  auto prob = record.find("probability");
  if (prob == record.end() || !prob->is_number()) {
    throw MalformedDetection(line, "missing or non-numeric probability");
  }
  double probability = prob->get<double>();
  if (probability < 0.0 || probability > 1.0) throw ProbabilityOutOfRange(line, probability);

  Detection detection{class_id, probability, std::nullopt};
  auto bbox = record.find("bbox");
  if (bbox != record.end() && !bbox->is_null()) {
    if (!bbox->is_array() || bbox->size() != 4 || !std::all_of(bbox->begin(), bbox->end(), [](const json& v) { return v.is_number(); })) {
      throw MalformedDetection(line, "bbox must be an array of four numbers");
    }
    BoundingBox box{(*bbox)[0].get<double>(), (*bbox)[1].get<double>(), (*bbox)[2].get<double>(),
                    (*bbox)[3].get<double>()};
    bool in_range = box.x >= 0 && box.x <= 1 && box.y >= 0 && box.y <= 1 && box.w > 0 &&
                    box.w <= 1 && box.h > 0 && box.h <= 1;
    if (!in_range) throw MalformedDetection(line, "bbox coordinates outside [0, 1] or empty box");
    detection.bbox = box;
  }
  return detection;
}

json detection_to_json(const std::string& study_id, const Detection& detection) {
  json record = {{"study_id", study_id},
                 {"class_id", detection.class_id},
                 {"probability", detection.probability}};
  if (detection.bbox) {
    record["bbox"] = {detection.bbox->x, detection.bbox->y, detection.bbox->w, detection.bbox->h};
  }
  return record;
}

std::vector<Detection> normalize_detections(std::vector<Detection> rows) {
  std::map<int, Detection> by_class;
  for (Detection& row : rows) {
    auto [it, inserted] = by_class.try_emplace(row.class_id, row);
    if (!inserted && row.probability > it->second.probability) it->second = row;
  }
  std::vector<Detection> out;
  out.reserve(by_class.size());
  for (auto& [class_id, detection] : by_class) out.push_back(std::move(detection));
  return out;
}

std::vector<DetectionSet> ingest_detections(std::istream& in) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<Detection>> rows;
  for_each_jsonl(in, [&](size_t line, const json& record) {
    std::string study_id;
    Detection detection = detection_from_json(line, record, &study_id);
    auto [it, inserted] = rows.try_emplace(study_id);
    if (inserted) order.push_back(study_id);
    it->second.push_back(detection);
  });
  std::vector<DetectionSet> sets;
  sets.reserve(order.size());
  for (const std::string& study_id : order) {
    sets.push_back({study_id, normalize_detections(std::move(rows[study_id]))});
  }
  return sets;
}

std::vector<DetectionSet> ingest_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");
  return ingest_detections(in);
}

void write_detections(const std::vector<DetectionSet>& sets, std::ostream& out) {
  for (const DetectionSet& set : sets) {
    for (const Detection& detection : set.detections) {
      write_jsonl_line(out, detection_to_json(set.study_id, detection));
    }
  }
}

void write_detections(const std::vector<DetectionSet>& sets, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open '" + path + "' for writing");
  write_detections(sets, out);
  if (!out) throw IoFailure("write failed for '" + path + "'");
}

DetectionSet mock_detect(const std::string& study_id, uint64_t seed) {
  HashStream stream(study_id, seed);
  size_t count = stream.next_below(5);

  // Partial Fisher-Yates over class ids 1..19 for distinct picks.
  std::array<int, kNumAbnormalityClasses - 1> pool;
  std::iota(pool.begin(), pool.end(), 1);
  for (size_t k = 0; k < count; ++k) {
    size_t j = k + stream.next_below(pool.size() - k);
    std::swap(pool[k], pool[j]);
  }
  std::vector<int> classes(pool.begin(), pool.begin() + count);
  std::sort(classes.begin(), classes.end());

  DetectionSet set;
  set.study_id = study_id;
  for (int class_id : classes) {
    Detection detection;
    detection.class_id = class_id;
    detection.probability = static_cast<double>(1 + stream.next_below(99)) / 100.0;
    if (stream.next_below(2) == 1) {
      BoundingBox box;
      box.x = static_cast<double>(stream.next_below(50)) / 100.0;
      box.y = static_cast<double>(stream.next_below(50)) / 100.0;
      box.w = static_cast<double>(1 + stream.next_below(50)) / 100.0;
      box.h = static_cast<double>(1 + stream.next_below(50)) / 100.0;
      detection.bbox = box;
    }
    set.detections.push_back(detection);
  }
  return set;
}

}  // namespace cxrgen
