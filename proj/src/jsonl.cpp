#include "cxrgen/jsonl.hpp"

#include <fstream>
#include <sstream>

namespace cxrgen {

void for_each_jsonl(std::istream& in, const RecordFn& fn, const ParseErrorFn& on_parse_error) {
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      MalformedRecord error(line_number, e.what());
      if (!on_parse_error) throw error;
      on_parse_error(line_number, error);
      continue;
    }
    fn(line_number, record);
  }
}

void for_each_jsonl(const std::string& path, const RecordFn& fn,
                    const ParseErrorFn& on_parse_error) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");
  for_each_jsonl(in, fn, on_parse_error);
}

std::vector<json> read_jsonl(const std::string& path) {
  std::vector<json> records;
  for_each_jsonl(path, [&](size_t, const json& record) { records.push_back(record); });
  return records;
}

void write_jsonl_line(std::ostream& out, const json& record) {
  out << record.dump() << '\n';
}

void write_jsonl(const std::string& path, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open '" + path + "' for writing");
  for (const json& record : records) write_jsonl_line(out, record);
  if (!out) throw IoFailure("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoFailure("write failed for '" + path + "'");
}

}  // namespace cxrgen
