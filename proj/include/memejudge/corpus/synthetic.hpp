#pragma once

#include <cstdint>
#include <filesystem>

#include "memejudge/corpus/types.hpp"

namespace memejudge::corpus {

// Deterministic colored-patch memes: a red square marks harmful, a blue square harmless,
// on a noisy gray background at a random position. Texts come from a template pool.
struct SyntheticSpec {
  std::size_t train_harmful = 16;
  std::size_t train_harmless = 16;
  std::size_t test_harmful = 8;
  std::size_t test_harmless = 8;
  std::size_t image_size = 32;
  std::uint64_t seed = 7;
  // Probability that a meme's text is drawn from its label's leaning pool instead of the
  // shared neutral pool. 0 keeps the label signal in the image only.
  double text_signal = 0.0;
};

// Writes images/<id>.png, corpus.jsonl (canonical) and synthetic_manifest.json
// (expected class counts) under `dir`, and returns the canonical file path.
std::filesystem::path write_synthetic_corpus(const std::filesystem::path& dir,
                                             const SyntheticSpec& spec);

// Reads the expected counts written by write_synthetic_corpus.
SplitStats read_synthetic_manifest(const std::filesystem::path& manifest);

}  // namespace memejudge::corpus
