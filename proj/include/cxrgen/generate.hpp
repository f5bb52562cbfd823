#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cxrgen/prompt.hpp"

namespace cxrgen {

struct GenerationRequest {
  std::string prompt;
  int max_new_tokens = 128;
  std::string request_id;
};

struct GeneratedFindings {
  std::string study_id;
  std::string text;
  std::string backend;
  int token_count = 0;
};

// Whitespace token count; runs of whitespace collapse.
int count_tokens(std::string_view text);

// First max_tokens whitespace tokens. Text already within the limit is
// returned verbatim.
std::string truncate_tokens(std::string_view text, int max_tokens);

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual std::string name() const = 0;
  // Raw completion; the caller applies the token cap.
  virtual std::string complete(const GenerationRequest& req) = 0;
};

// Runs the backend and enforces the request contract: the result is
// truncated to max_new_tokens under the toolkit tokenizer and stamped with
// the backend name. study_id is taken from request_id.
GeneratedFindings generate(const GenerationRequest& req, GenerationBackend& backend);

// Bounded worker pool; results keep request order. The first error aborts
// the batch.
std::vector<GeneratedFindings> generate_batch(const std::vector<GenerationRequest>& requests,
                                              GenerationBackend& backend, int workers = 4);

// One sentence per entry, hedged by probability: >= 0.75 "There is a X.",
// [0.5, 0.75) "There is likely a X.", < 0.5 "There may be a X.". No entries
// yields "The lungs are clear.".
std::string template_generate(const std::vector<PromptEntry>& entries);

// GPU-free stand-in for the fine-tuned LLM: parses the prompt back into
// entries and verbalizes them deterministically.
class TemplateBackend : public GenerationBackend {
 public:
  explicit TemplateBackend(std::string terminator = "TL;DR")
      : terminator_(std::move(terminator)) {}
  std::string name() const override { return "template"; }
  std::string complete(const GenerationRequest& req) override;

 private:
  std::string terminator_;
};

struct RemoteBackendOptions {
  std::string endpoint;  // http://host[:port][/path]
  double timeout_seconds = 60.0;
  int retries = 2;  // extra attempts after the first, transport errors only
  int initial_backoff_ms = 500;
};

// Client for a single-endpoint inference service. POST body
// {"prompt", "max_new_tokens", "request_id"}, response {"text"}; non-2xx
// responses raise BackendProtocolError. Safe for concurrent use.
class RemoteBackend : public GenerationBackend {
 public:
  explicit RemoteBackend(RemoteBackendOptions options);  // throws ConfigError on a bad endpoint
  std::string name() const override { return "remote"; }
  std::string complete(const GenerationRequest& req) override;

 private:
  RemoteBackendOptions options_;
  std::string base_;  // scheme://host:port
  std::string path_;
};

// kind is "template" or "remote".
std::unique_ptr<GenerationBackend> make_backend(const std::string& kind,
                                                const RemoteBackendOptions& remote = {},
                                                const std::string& terminator = "TL;DR");

}  // namespace cxrgen
