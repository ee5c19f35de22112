#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "memejudge/llm/backend.hpp"
#include "memejudge/llm/cache.hpp"
#include "memejudge/llm/chat.hpp"

namespace memejudge::llm {

struct GatewayOptions {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{250};
  double backoff_multiplier = 2.0;
  int max_in_flight = 4;
  // Enforces temperature 0 / max_tokens 256 on every request.
  bool pipeline_mode = true;
  // Case-insensitive substrings that mark a safety refusal.
  std::vector<std::string> refusal_markers = default_refusal_markers();

  static std::vector<std::string> default_refusal_markers();
};

class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, std::optional<ResponseCache> cache, GatewayOptions options = {});

  // Cache, then backend with bounded retries on TransportError. Throws ValidationError for
  // requests violating pipeline settings and RefusalError when a refusal marker matches.
  ChatResponse complete(const ChatRequest& request);

  std::optional<ChatResponse> cache_lookup(const CacheKey& key) const;

  std::size_t backend_calls() const noexcept { return backend_calls_.load(); }
  const GatewayOptions& options() const noexcept { return options_; }
  const Backend& backend() const noexcept { return *backend_; }

  // Test hook: replaces std::this_thread::sleep_for between retries.
  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleeper_ = std::move(sleeper); }

 private:
  void validate(const ChatRequest& request) const;
  bool is_refusal(const std::string& text) const;

  std::shared_ptr<Backend> backend_;
  std::optional<ResponseCache> cache_;
  GatewayOptions options_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::size_t> backend_calls_{0};
  std::function<void(std::chrono::milliseconds)> sleeper_;
};

}  // namespace memejudge::llm
