#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace memejudge::corpus {

enum class Label { harmful, harmless };

std::string_view to_string(Label label) noexcept;
// Strict parse of the canonical lowercase serialization.
Label parse_label(std::string_view text);
Label opposite(Label label) noexcept;

// Maps a raw dataset label onto the binary label set. Case-insensitive, whitespace-trimmed.
// Throws ValidationError naming the value when it is not a known raw label.
Label merge_labels(std::string_view raw);

enum class DatasetKind { harm_c, harm_p, fhm, synthetic, custom };
std::string_view to_string(DatasetKind kind) noexcept;
DatasetKind parse_dataset_kind(std::string_view text);

enum class Split { train, test };
std::string_view to_string(Split split) noexcept;
Split parse_split(std::string_view text);

struct MemeRecord {
  std::string id;
  std::string image_ref;  // relative to the corpus image root
  std::string text;
  std::optional<Label> label;
  DatasetKind dataset = DatasetKind::custom;
  Split split = Split::train;
  // Pre-supplied extra input text (e.g. entity/demographic tags); appended to the meme text.
  std::optional<std::string> annotation;

  bool operator==(const MemeRecord&) const = default;
};

struct LabelCounts {
  std::size_t harmful = 0;
  std::size_t harmless = 0;
  std::size_t unlabeled = 0;

  std::size_t total() const noexcept { return harmful + harmless + unlabeled; }
  bool operator==(const LabelCounts&) const = default;
};

struct SplitStats {
  LabelCounts train;
  LabelCounts test;

  const LabelCounts& of(Split s) const noexcept { return s == Split::train ? train : test; }
  bool operator==(const SplitStats&) const = default;
};

// Ordered, validated, immutable collection of memes sharing one image root.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::string name, std::vector<MemeRecord> records, std::filesystem::path image_root);

  const std::string& name() const noexcept { return name_; }
  const std::vector<MemeRecord>& records() const noexcept { return records_; }
  const std::filesystem::path& image_root() const noexcept { return image_root_; }
  const SplitStats& class_counts() const noexcept { return counts_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const MemeRecord* find(std::string_view id) const noexcept;
  const MemeRecord& at(std::string_view id) const;
  std::filesystem::path image_path(const MemeRecord& record) const;
  std::vector<const MemeRecord*> split(Split s) const;

  bool operator==(const Corpus& other) const {
    return name_ == other.name_ && records_ == other.records_;
  }

 private:
  std::string name_;
  std::vector<MemeRecord> records_;
  std::filesystem::path image_root_;
  SplitStats counts_;
};

}  // namespace memejudge::corpus
