#include "memejudge/llm/cache.hpp"

#include <spdlog/spdlog.h>

#include "memejudge/common/hashing.hpp"
#include "memejudge/common/io.hpp"

namespace memejudge::llm {

ImagePayload::ImagePayload(std::vector<std::uint8_t> bytes, std::string media_type)
    : bytes_(std::move(bytes)), media_type_(std::move(media_type)), digest_(sha256_hex(bytes_)) {}

CacheKey CacheKey::of(const ChatRequest& request) {
  Sha256 h;
  h.field("memejudge-chat-v1");
  h.field(request.model_id);
  h.field(request.prompt_version);
  h.field(request.system ? "1" + *request.system : "0");
  h.field(request.user);
  h.field(request.image ? "1" + request.image->digest() : "0");
  return CacheKey{h.hex_digest()};
}

ResponseCache::ResponseCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

fs::path ResponseCache::entry_path(const CacheKey& key) const { return dir_ / (key.digest + ".json"); }

std::optional<ChatResponse> ResponseCache::lookup(const CacheKey& key) const {
  const fs::path path = entry_path(key);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return std::nullopt;
  try {
    const json entry = json::parse(read_text_file(path));
    if (entry.at("key").get<std::string>() != key.digest) throw std::runtime_error("key mismatch");
    ChatResponse r;
    r.text = entry.at("text").get<std::string>();
    r.model_id = entry.at("model_id").get<std::string>();
    r.from_cache = true;
    r.latency_ms = 0;
    return r;
  } catch (const std::exception& e) {
    fs::path quarantine = path;
    quarantine += ".corrupt";
    fs::rename(path, quarantine, ec);
    spdlog::warn("llm cache: corrupted entry {} quarantined ({})", path.filename().string(), e.what());
    return std::nullopt;
  }
}

void ResponseCache::store(const CacheKey& key, const ChatRequest& request, const ChatResponse& response) const {
  json entry = {
      {"key", key.digest},
      {"model_id", response.model_id},
      {"prompt_version", request.prompt_version},
      {"system", request.system ? json(*request.system) : json(nullptr)},
      {"user", request.user},
      {"image_digest", request.image ? json(request.image->digest()) : json(nullptr)},
      {"text", response.text},
  };
  write_file_atomic(entry_path(key), canonical_dump(entry, 2) + "\n");
}

}  // namespace memejudge::llm
