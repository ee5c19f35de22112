#include "memejudge/corpus/synthetic.hpp"

#include <array>
#include <fmt/format.h>

#include "memejudge/common/errors.hpp"
#include "memejudge/common/hashing.hpp"
#include "memejudge/common/io.hpp"
#include "memejudge/common/random.hpp"
#include "memejudge/corpus/image.hpp"
#include "memejudge/corpus/ingest.hpp"

namespace memejudge::corpus {

namespace {

constexpr std::array kSubjects = {"my neighbor", "the office", "every gamer", "the new mayor",
                                  "this cat",    "our team",   "the weekend", "grandma"};
constexpr std::array kNeutral = {"when {} finally shows up on time",
                                 "nobody: absolutely nobody: {}",
                                 "{} after one cup of coffee",
                                 "me explaining {} to my friends",
                                 "{} trying to read the instructions"};
constexpr std::array kHarmfulLean = {"{} should be thrown out of the country",
                                     "{} deserves everything coming to them",
                                     "keep {} away from decent people"};
constexpr std::array kHarmlessLean = {"{} makes every day better",
                                      "wholesome moment with {}",
                                      "{} is just having fun"};

std::vector<std::uint8_t> render(Rng& rng, std::size_t size, Label label) {
  std::vector<std::uint8_t> rgb(3 * size * size);
  for (std::size_t i = 0; i < size * size; ++i) {
    const auto g = static_cast<std::uint8_t>(110 + rng.below(40));
    rgb[3 * i] = g;
    rgb[3 * i + 1] = g;
    rgb[3 * i + 2] = g;
  }
  const std::size_t patch = std::max<std::size_t>(2, size / 3);
  const std::size_t y0 = rng.below(size - patch + 1);
  const std::size_t x0 = rng.below(size - patch + 1);
  const std::array<std::uint8_t, 3> color =
      label == Label::harmful ? std::array<std::uint8_t, 3>{220, 30, 30} : std::array<std::uint8_t, 3>{30, 60, 220};
  for (std::size_t y = y0; y < y0 + patch; ++y) {
    for (std::size_t x = x0; x < x0 + patch; ++x) {
      for (int c = 0; c < 3; ++c) rgb[3 * (y * size + x) + c] = color[c];
    }
  }
  return rgb;
}

std::string make_text(Rng& rng, Label label, double text_signal) {
  const char* subject = kSubjects[rng.below(kSubjects.size())];
  const bool leaning = rng.uniform() < text_signal;
  if (leaning && label == Label::harmful) {
    return fmt::format(fmt::runtime(kHarmfulLean[rng.below(kHarmfulLean.size())]), subject);
  }
  if (leaning) return fmt::format(fmt::runtime(kHarmlessLean[rng.below(kHarmlessLean.size())]), subject);
  return fmt::format(fmt::runtime(kNeutral[rng.below(kNeutral.size())]), subject);
}

}  // namespace

fs::path write_synthetic_corpus(const fs::path& dir, const SyntheticSpec& spec) {
  if (spec.image_size < 4) throw ValidationError("synthetic image_size must be at least 4");
  fs::create_directories(dir / "images");
  Rng rng(spec.seed);

  struct Slot {
    Split split;
    Label label;
  };
  std::vector<Slot> slots;
  auto push = [&](Split s, Label l, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) slots.push_back({s, l});
  };
  push(Split::train, Label::harmful, spec.train_harmful);
  push(Split::train, Label::harmless, spec.train_harmless);
  push(Split::test, Label::harmful, spec.test_harmful);
  push(Split::test, Label::harmless, spec.test_harmless);
  rng.shuffle(std::span<Slot>(slots));

  std::vector<json> rows;
  std::size_t train_idx = 0;
  std::size_t test_idx = 0;
  for (const auto& slot : slots) {
    const std::string id = slot.split == Split::train ? fmt::format("syn-train-{:04d}", train_idx++)
                                                      : fmt::format("syn-test-{:04d}", test_idx++);
    const std::string img = "images/" + id + ".png";
    write_png_rgb(dir / img, render(rng, spec.image_size, slot.label), spec.image_size, spec.image_size);
    rows.push_back({{"id", id},
                    {"img", img},
                    {"text", make_text(rng, slot.label, spec.text_signal)},
                    {"label", to_string(slot.label)},
                    {"split", to_string(slot.split)}});
  }
  const fs::path corpus_file = dir / "corpus.jsonl";
  write_jsonl_atomic(corpus_file, rows);

  json manifest = {
      {"seed", spec.seed},
      {"image_size", spec.image_size},
      {"text_signal", spec.text_signal},
      {"expected",
       {{"train", {{"harmful", spec.train_harmful}, {"harmless", spec.train_harmless}}},
        {"test", {{"harmful", spec.test_harmful}, {"harmless", spec.test_harmless}}}}},
      {"corpus_sha256", sha256_file(corpus_file)},
  };
  write_file_atomic(dir / "synthetic_manifest.json", canonical_dump(manifest, 2) + "\n");
  return corpus_file;
}

SplitStats read_synthetic_manifest(const fs::path& manifest) {
  const json m = json::parse(read_text_file(manifest));
  const auto& e = m.at("expected");
  SplitStats s;
  s.train.harmful = e.at("train").at("harmful").get<std::size_t>();
  s.train.harmless = e.at("train").at("harmless").get<std::size_t>();
  s.test.harmful = e.at("test").at("harmful").get<std::size_t>();
  s.test.harmless = e.at("test").at("harmless").get<std::size_t>();
  return s;
}

}  // namespace memejudge::corpus
