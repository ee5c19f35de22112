#pragma once

#include <filesystem>
#include <optional>

#include "memejudge/llm/chat.hpp"

namespace memejudge::llm {

// Directory of <digest>.json entries. Writes go through temp-file + rename, so
// concurrent readers only ever see complete entries.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  // A corrupted entry is moved aside to <digest>.json.corrupt and reported as a miss.
  std::optional<ChatResponse> lookup(const CacheKey& key) const;
  void store(const CacheKey& key, const ChatRequest& request, const ChatResponse& response) const;

  const std::filesystem::path& dir() const noexcept { return dir_; }
  std::filesystem::path entry_path(const CacheKey& key) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace memejudge::llm
