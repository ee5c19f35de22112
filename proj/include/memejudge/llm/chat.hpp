#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "memejudge/common/errors.hpp"

namespace memejudge::llm {

inline constexpr double kPipelineTemperature = 0.0;
inline constexpr int kPipelineMaxTokens = 256;

class ImagePayload {
 public:
  ImagePayload(std::vector<std::uint8_t> bytes, std::string media_type);

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  const std::string& media_type() const noexcept { return media_type_; }
  // Content hash; cache keys use this rather than any file path.
  const std::string& digest() const noexcept { return digest_; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::string media_type_;
  std::string digest_;
};

struct ChatRequest {
  std::optional<std::string> system;
  std::string user;
  std::optional<ImagePayload> image;
  std::string model_id;
  double temperature = kPipelineTemperature;
  int max_tokens = kPipelineMaxTokens;
  std::string prompt_version;
};

struct ChatResponse {
  std::string text;
  std::string model_id;
  bool from_cache = false;
  long latency_ms = 0;
};

struct CacheKey {
  std::string digest;

  static CacheKey of(const ChatRequest& request);
  bool operator==(const CacheKey&) const = default;
};

// Connection failures and retryable HTTP statuses.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Non-retryable backend rejection (bad request, auth).
class BackendError : public Error {
 public:
  using Error::Error;
};

class RefusalError : public Error {
 public:
  explicit RefusalError(std::string raw)
      : Error("backend refused the request: " + raw.substr(0, 120)), raw_(std::move(raw)) {}
  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

}  // namespace memejudge::llm
