#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace memejudge {

// Incremental SHA-256. Fields fed through `field()` are length-prefixed so that
// ("ab","c") and ("a","bc") hash differently.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const std::uint8_t> bytes);
  Sha256& update(std::string_view text);
  Sha256& field(std::string_view text);
  std::string hex_digest();

 private:
  void* ctx_;
};

std::string sha256_hex(std::string_view data);
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_file(const std::filesystem::path& path);

// 64-bit FNV-1a; used where a cheap stable hash is enough (tokenizer buckets, mock templates).
std::uint64_t fnv1a64(std::string_view data) noexcept;

std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace memejudge
