#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace memejudge::fusion {

// Word-level tokenizer for the toy backbone. Lowercased words and punctuation marks map to a
// fixed set of reserved ids or hash into the remaining range, so no vocabulary file is needed.
class WordHashTokenizer {
 public:
  static constexpr int kPad = 0;
  static constexpr int kEos = 1;
  static constexpr int kUnk = 2;
  static constexpr int kSep = 3;

  explicit WordHashTokenizer(int vocab_size);

  int vocab_size() const noexcept { return vocab_size_; }
  int reserved_count() const noexcept;
  std::string id() const;

  // Newlines become kSep. No EOS is appended.
  std::vector<int> encode(std::string_view text) const;
  std::vector<std::string> split(std::string_view text) const;
  int token_id(std::string_view word) const;

 private:
  int vocab_size_;
};

}  // namespace memejudge::fusion
