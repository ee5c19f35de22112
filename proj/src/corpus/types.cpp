#include "memejudge/corpus/types.hpp"

#include <unordered_set>

#include "memejudge/common/errors.hpp"
#include "memejudge/common/io.hpp"

namespace memejudge::corpus {

std::string_view to_string(Label label) noexcept {
  return label == Label::harmful ? "harmful" : "harmless";
}

Label parse_label(std::string_view text) {
  if (text == "harmful") return Label::harmful;
  if (text == "harmless") return Label::harmless;
  throw ValidationError("unknown label '" + std::string(text) + "'");
}

Label opposite(Label label) noexcept {
  return label == Label::harmful ? Label::harmless : Label::harmful;
}

Label merge_labels(std::string_view raw) {
  const std::string key = to_lower(trim(raw));
  // Harm-C/Harm-P ship "somewhat harmful" for what the published description calls
  // partially harmful; both map the same way.
  if (key == "very harmful" || key == "partially harmful" || key == "somewhat harmful" ||
      key == "harmful") {
    return Label::harmful;
  }
  if (key == "harmless" || key == "not harmful") return Label::harmless;
  throw ValidationError("unknown raw label '" + std::string(raw) + "'");
}

std::string_view to_string(DatasetKind kind) noexcept {
  switch (kind) {
    case DatasetKind::harm_c: return "harm-c";
    case DatasetKind::harm_p: return "harm-p";
    case DatasetKind::fhm: return "fhm";
    case DatasetKind::synthetic: return "synthetic";
    case DatasetKind::custom: return "custom";
  }
  return "custom";
}

DatasetKind parse_dataset_kind(std::string_view text) {
  if (text == "harm-c") return DatasetKind::harm_c;
  if (text == "harm-p") return DatasetKind::harm_p;
  if (text == "fhm") return DatasetKind::fhm;
  if (text == "synthetic") return DatasetKind::synthetic;
  if (text == "custom") return DatasetKind::custom;
  throw ValidationError("unknown dataset '" + std::string(text) + "'");
}

std::string_view to_string(Split split) noexcept { return split == Split::train ? "train" : "test"; }

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "test") return Split::test;
  throw ValidationError("unknown split '" + std::string(text) + "'");
}

Corpus::Corpus(std::string name, std::vector<MemeRecord> records, std::filesystem::path image_root)
    : name_(std::move(name)), records_(std::move(records)), image_root_(std::move(image_root)) {
  std::unordered_set<std::string_view> seen;
  for (const auto& r : records_) {
    if (r.id.empty()) throw ValidationError("corpus '" + name_ + "': record with empty id");
    if (!seen.insert(r.id).second) {
      throw ValidationError("corpus '" + name_ + "': duplicate id '" + r.id + "'");
    }
    auto& counts = r.split == Split::train ? counts_.train : counts_.test;
    if (!r.label) {
      ++counts.unlabeled;
    } else if (*r.label == Label::harmful) {
      ++counts.harmful;
    } else {
      ++counts.harmless;
    }
  }
}

const MemeRecord* Corpus::find(std::string_view id) const noexcept {
  for (const auto& r : records_) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

const MemeRecord& Corpus::at(std::string_view id) const {
  if (const auto* r = find(id)) return *r;
  throw NotFoundError("unknown meme id '" + std::string(id) + "'");
}

std::filesystem::path Corpus::image_path(const MemeRecord& record) const {
  return image_root_ / record.image_ref;
}

std::vector<const MemeRecord*> Corpus::split(Split s) const {
  std::vector<const MemeRecord*> out;
  for (const auto& r : records_) {
    if (r.split == s) out.push_back(&r);
  }
  return out;
}

}  // namespace memejudge::corpus
