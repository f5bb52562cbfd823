#include "cxrgen/generate.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "cxrgen/errors.hpp"
#include "cxrgen/jsonl.hpp"

namespace cxrgen {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

int count_tokens(std::string_view text) {
  int count = 0;
  bool in_token = false;
  for (char c : text) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

std::string truncate_tokens(std::string_view text, int max_tokens) {
  if (count_tokens(text) <= max_tokens) return std::string(text);
  std::string out;
  int taken = 0;
  size_t i = 0;
  while (i < text.size() && taken < max_tokens) {
    while (i < text.size() && is_space(text[i])) ++i;
    size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i == start) break;
    if (taken > 0) out += ' ';
    out += text.substr(start, i - start);
    ++taken;
  }
  return out;
}

GeneratedFindings generate(const GenerationRequest& req, GenerationBackend& backend) {
  if (req.max_new_tokens < 1) throw ConfigError("max_new_tokens must be >= 1");
  if (req.prompt.empty()) throw ConfigError("prompt must be non-empty");
  std::string text = truncate_tokens(backend.complete(req), req.max_new_tokens);
  GeneratedFindings out;
  out.study_id = req.request_id;
  out.token_count = count_tokens(text);
  out.text = std::move(text);
  out.backend = backend.name();
  return out;
}

std::vector<GeneratedFindings> generate_batch(const std::vector<GenerationRequest>& requests,
                                              GenerationBackend& backend, int workers) {
  std::vector<GeneratedFindings> results(requests.size());
  if (requests.empty()) return results;
  size_t pool = std::min<size_t>(std::max(workers, 1), requests.size());
  if (pool == 1) {
    for (size_t i = 0; i < requests.size(); ++i) results[i] = generate(requests[i], backend);
    return results;
  }

  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed.load()) {
      size_t i = next.fetch_add(1);
      if (i >= requests.size()) return;
      try {
        results[i] = generate(requests[i], backend);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  for (size_t t = 0; t < pool; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

std::string template_generate(const std::vector<PromptEntry>& entries) {
  if (entries.empty()) return "The lungs are clear.";
  std::string text;
  for (const PromptEntry& entry : entries) {
    if (!text.empty()) text += ' ';
    if (entry.probability >= 0.75) {
      text += "There is a " + entry.label + ".";
    } else if (entry.probability >= 0.5) {
      text += "There is likely a " + entry.label + ".";
    } else {
      text += "There may be a " + entry.label + ".";
    }
  }
  return text;
}

std::string TemplateBackend::complete(const GenerationRequest& req) {
  return template_generate(parse_prompt(req.prompt, terminator_));
}

RemoteBackend::RemoteBackend(RemoteBackendOptions options) : options_(std::move(options)) {
  const std::string& url = options_.endpoint;
  if (url.empty()) throw ConfigError("remote backend requires an endpoint");
  if (url.starts_with("https://")) {
    throw ConfigError("only http:// endpoints are supported");
  }
  if (!url.starts_with("http://")) throw ConfigError("endpoint must start with http://");
  size_t authority = std::string("http://").size();
  size_t slash = url.find('/', authority);
  if (slash == std::string::npos) {
    base_ = url;
    path_ = "/";
  } else {
    base_ = url.substr(0, slash);
    path_ = url.substr(slash);
  }
  if (base_.size() == authority) throw ConfigError("endpoint is missing a host");
}

std::string RemoteBackend::complete(const GenerationRequest& req) {
  json body = {{"prompt", req.prompt},
               {"max_new_tokens", req.max_new_tokens},
               {"request_id", req.request_id}};
  const std::string payload = body.dump();

  int backoff_ms = options_.initial_backoff_ms;
  std::string last_transport_error;
  bool last_was_timeout = false;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms *= 2;
    }
    httplib::Client client(base_);
    auto timeout = std::chrono::duration<double>(options_.timeout_seconds);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Result result = client.Post(path_, payload, "application/json");
    if (result) {
      if (result->status < 200 || result->status >= 300) {
        throw BackendProtocolError("endpoint returned status " + std::to_string(result->status));
      }
      try {
        json response = json::parse(result->body);
        if (!response.contains("text") || !response["text"].is_string()) {
          throw BackendProtocolError("response is missing a string 'text' field");
        }
        return response["text"].get<std::string>();
      } catch (const json::parse_error& e) {
        throw BackendProtocolError(std::string("response is not JSON: ") + e.what());
      }
    }
    last_was_timeout = result.error() == httplib::Error::ConnectionTimeout ||
                       result.error() == httplib::Error::Read ||
                       result.error() == httplib::Error::Write;
    last_transport_error = httplib::to_string(result.error());
  }
  if (last_was_timeout) throw Timeout(options_.timeout_seconds);
  throw BackendUnreachable("cannot reach " + options_.endpoint + " (" + last_transport_error +
                           ") after " + std::to_string(options_.retries + 1) + " attempts");
}

std::unique_ptr<GenerationBackend> make_backend(const std::string& kind,
                                                const RemoteBackendOptions& remote,
                                                const std::string& terminator) {
  if (kind == "template") return std::make_unique<TemplateBackend>(terminator);
  if (kind == "remote") return std::make_unique<RemoteBackend>(remote);
  throw ConfigError("unknown backend '" + kind + "' (expected template or remote)");
}

}  // namespace cxrgen
