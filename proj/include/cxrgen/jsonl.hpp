#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "cxrgen/errors.hpp"

namespace cxrgen {

using json = nlohmann::json;

// Line-delimited JSON records, UTF-8, '\n' terminators. Blank lines are
// skipped; line numbers are 1-based. A line that fails to parse raises
// MalformedRecord, or is routed to on_parse_error when one is supplied.

using RecordFn = std::function<void(size_t line, const json& record)>;
using ParseErrorFn = std::function<void(size_t line, const MalformedRecord& error)>;

void for_each_jsonl(std::istream& in, const RecordFn& fn,
                    const ParseErrorFn& on_parse_error = {});
void for_each_jsonl(const std::string& path, const RecordFn& fn,
                    const ParseErrorFn& on_parse_error = {});

std::vector<json> read_jsonl(const std::string& path);

// Serializes one record per line in nlohmann's canonical compact form
// (object keys sorted); this is the byte format golden files pin.
void write_jsonl_line(std::ostream& out, const json& record);
void write_jsonl(const std::string& path, const std::vector<json>& records);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace cxrgen
