#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "memejudge/llm/chat.hpp"

namespace memejudge::llm {

class Backend {
 public:
  virtual ~Backend() = default;
  // Raw completion text. Throws TransportError for retryable failures, BackendError otherwise.
  virtual std::string complete(const ChatRequest& request) = 0;
  virtual std::string name() const = 0;
};

// Deterministic stand-in for a chat LLM. Output is a pure function of
// (system, user, image digest):
//   - a debater prompt ending "reasoned as [harmful]" / "[harmless]" yields a templated
//     rationale containing that stance word;
//   - a prompt asking "is this meme harmless or harmful?" yields a one-sentence verdict;
//   - an explanation-scoring prompt yields "1) a 2) b ..." with one score per numbered slot;
//   - a captioning prompt yields a caption derived from the image digest.
// Scripted rules (needle -> canned response) take precedence, first match wins.
class MockBackend : public Backend {
 public:
  MockBackend() = default;

  void script(std::string needle, std::string response);
  void clear_script();

  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "mock"; }

  std::size_t calls() const noexcept { return calls_.load(); }

  // The unscripted response, exposed for tests.
  static std::string templated_response(const ChatRequest& request);

 private:
  std::vector<std::pair<std::string, std::string>> script_;
  std::atomic<std::size_t> calls_{0};
};

struct HttpBackendOptions {
  std::string endpoint;  // full URL of the chat-completions route
  std::string token;
  std::chrono::seconds timeout{60};
};

// OpenAI-compatible chat completions over HTTP(S). Images travel as base64 data URLs.
class HttpChatBackend : public Backend {
 public:
  explicit HttpChatBackend(HttpBackendOptions options);

  std::string complete(const ChatRequest& request) override;
  std::string name() const override { return "http"; }

  // Request body for `request`; exposed so the wire format can be tested.
  static std::string encode_request(const ChatRequest& request);
  static std::string decode_response(const std::string& body);

 private:
  HttpBackendOptions options_;
  std::string scheme_host_port_;
  std::string path_;
};

// Reads MEMEJUDGE_LLM_ENDPOINT and MEMEJUDGE_LLM_TOKEN.
HttpBackendOptions http_options_from_env();

}  // namespace memejudge::llm
