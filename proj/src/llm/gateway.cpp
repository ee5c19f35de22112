#include "memejudge/llm/gateway.hpp"

#include <algorithm>
#include <thread>

#include <spdlog/spdlog.h>

#include "memejudge/common/io.hpp"

namespace memejudge::llm {

std::vector<std::string> GatewayOptions::default_refusal_markers() {
  return {"i'm sorry, but i can't", "i am sorry, but i cannot", "i cannot assist with",
          "i can't assist with", "i can't help with", "as an ai language model, i cannot"};
}

Gateway::Gateway(std::shared_ptr<Backend> backend, std::optional<ResponseCache> cache, GatewayOptions options)
    : backend_(std::move(backend)),
      cache_(std::move(cache)),
      options_(std::move(options)),
      in_flight_(std::clamp(options_.max_in_flight, 1, 1024)),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (!backend_) throw ValidationError("gateway requires a backend");
}

void Gateway::validate(const ChatRequest& request) const {
  if (request.prompt_version.empty()) throw ValidationError("chat request: prompt_version must be non-empty");
  if (request.model_id.empty()) throw ValidationError("chat request: model_id must be non-empty");
  if (options_.pipeline_mode) {
    if (request.temperature != kPipelineTemperature) {
      throw ValidationError("chat request: temperature must be 0 in pipeline mode, got " +
                            std::to_string(request.temperature));
    }
    if (request.max_tokens != kPipelineMaxTokens) {
      throw ValidationError("chat request: max_tokens must be 256 in pipeline mode, got " +
                            std::to_string(request.max_tokens));
    }
  }
}

bool Gateway::is_refusal(const std::string& text) const {
  const std::string lower = to_lower(text);
  for (const auto& marker : options_.refusal_markers) {
    if (!marker.empty() && lower.find(to_lower(marker)) != std::string::npos) return true;
  }
  return false;
}

std::optional<ChatResponse> Gateway::cache_lookup(const CacheKey& key) const {
  if (!cache_) return std::nullopt;
  return cache_->lookup(key);
}

ChatResponse Gateway::complete(const ChatRequest& request) {
  validate(request);
  const CacheKey key = CacheKey::of(request);
  if (auto hit = cache_lookup(key)) return *hit;

  std::string raw;
  const auto start = std::chrono::steady_clock::now();
  {
    in_flight_.acquire();
    struct Release {
      std::counting_semaphore<1024>& s;
      ~Release() { s.release(); }
    } release{in_flight_};

    auto backoff = options_.initial_backoff;
    for (int attempt = 0;; ++attempt) {
      try {
        ++backend_calls_;
        raw = backend_->complete(request);
        break;
      } catch (const TransportError& e) {
        if (attempt >= options_.max_retries) {
          throw TransportError("exhausted " + std::to_string(options_.max_retries) + " retries: " + e.what());
        }
        spdlog::warn("llm gateway: transient failure (attempt {}): {}", attempt + 1, e.what());
        sleeper_(backoff);
        backoff = std::chrono::milliseconds(
            static_cast<long long>(static_cast<double>(backoff.count()) * options_.backoff_multiplier));
      }
    }
  }

  ChatResponse response;
  response.text = rtrim(raw);
  response.model_id = request.model_id;
  response.latency_ms = static_cast<long>(
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count());
  if (is_refusal(response.text)) throw RefusalError(response.text);
  if (cache_) cache_->store(key, request, response);
  return response;
}

}  // namespace memejudge::llm
