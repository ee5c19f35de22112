#include "memejudge/fusion/tokenizer.hpp"

#include <array>
#include <cctype>

#include "memejudge/common/errors.hpp"
#include "memejudge/common/hashing.hpp"
#include "memejudge/common/io.hpp"

namespace memejudge::fusion {

namespace {

constexpr std::array<std::string_view, 12> kReserved = {
    "<pad>", "</s>", "<unk>", "<sep>", "harmful", "harmless", "text", ":", "rationale", "a", "b", "caption"};

}  // namespace

WordHashTokenizer::WordHashTokenizer(int vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size < static_cast<int>(kReserved.size()) + 16) {
    throw ValidationError("tokenizer vocab_size must be at least " + std::to_string(kReserved.size() + 16));
  }
}

int WordHashTokenizer::reserved_count() const noexcept { return static_cast<int>(kReserved.size()); }

std::string WordHashTokenizer::id() const { return "word-hash-v1/" + std::to_string(vocab_size_); }

std::vector<std::string> WordHashTokenizer::split(std::string_view text) const {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (ch == '\n') {
      flush();
      out.emplace_back("<sep>");
    } else if (std::isspace(c)) {
      flush();
    } else if (std::isalnum(c) || c >= 0x80 || ch == '\'') {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
      out.emplace_back(1, ch);
    }
  }
  flush();
  return out;
}

int WordHashTokenizer::token_id(std::string_view word) const {
  for (std::size_t i = 0; i < kReserved.size(); ++i) {
    if (kReserved[i] == word) return static_cast<int>(i);
  }
  if (word.empty()) return kUnk;
  const auto r = static_cast<std::uint64_t>(kReserved.size());
  return static_cast<int>(r + fnv1a64(word) % (static_cast<std::uint64_t>(vocab_size_) - r));
}

std::vector<int> WordHashTokenizer::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& w : split(text)) ids.push_back(token_id(w));
  return ids;
}

}  // namespace memejudge::fusion
