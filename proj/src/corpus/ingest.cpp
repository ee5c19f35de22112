#include "memejudge/corpus/ingest.hpp"

#include <spdlog/spdlog.h>

#include "memejudge/common/errors.hpp"
#include "memejudge/common/io.hpp"

namespace memejudge::corpus {

namespace {

std::string id_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ValidationError("record id must be a string or integer, got " + v.dump());
}

std::string string_field(const json& row, const char* key, const std::string& id) {
  auto it = row.find(key);
  if (it == row.end() || !it->is_string()) {
    throw IngestError(std::string("record '") + id + "': missing string field '" + key + "'", {id});
  }
  return it->get<std::string>();
}

Label label_or_throw(std::string_view raw, const std::string& id) {
  try {
    return merge_labels(raw);
  } catch (const ValidationError& e) {
    throw IngestError("record '" + id + "': " + e.what(), {id});
  }
}

struct RowSource {
  fs::path file;
  Split split;
};

struct Builder {
  const IngestOptions& options;
  fs::path image_root;
  std::vector<MemeRecord> records;
  std::vector<std::string> missing;

  void add(MemeRecord r) {
    if (!fs::is_regular_file(image_root / r.image_ref)) {
      missing.push_back(r.id);
      return;
    }
    records.push_back(std::move(r));
  }

  IngestResult finish(const std::string& default_name, std::string test_source) {
    if (!missing.empty()) {
      if (options.missing_images == MissingImagePolicy::fail) {
        std::string msg = "missing image files for " + std::to_string(missing.size()) + " record(s):";
        for (const auto& id : missing) msg += " " + id;
        throw IngestError(msg, missing);
      }
      spdlog::warn("ingest: skipped {} record(s) with missing images", missing.size());
    }
    IngestResult out;
    out.corpus = Corpus(options.name.empty() ? default_name : options.name, std::move(records),
                        image_root);
    out.skipped_ids = std::move(missing);
    out.test_split_source = std::move(test_source);
    return out;
  }
};

IngestResult ingest_canonical(const fs::path& file, const IngestOptions& options) {
  if (!fs::is_regular_file(file)) throw NotFoundError("canonical dataset file not found: " + file.string());
  Builder b{options, options.image_root.value_or(file.parent_path()), {}, {}};
  const DatasetKind kind = options.dataset.value_or(DatasetKind::custom);
  for (const auto& row : read_jsonl(file)) {
    MemeRecord r;
    r.id = id_string(row.at("id"));
    r.image_ref = string_field(row, "img", r.id);
    r.text = string_field(row, "text", r.id);
    if (auto it = row.find("label"); it != row.end() && !it->is_null()) {
      if (!it->is_string()) throw IngestError("record '" + r.id + "': label must be a string", {r.id});
      r.label = label_or_throw(it->get<std::string>(), r.id);
    }
    try {
      r.split = parse_split(string_field(row, "split", r.id));
    } catch (const ValidationError& e) {
      throw IngestError("record '" + r.id + "': " + e.what(), {r.id});
    }
    if (auto it = row.find("annotation"); it != row.end() && it->is_string()) {
      r.annotation = it->get<std::string>();
    }
    r.dataset = kind;
    b.add(std::move(r));
  }
  return b.finish(file.stem().string(), file.filename().string());
}

IngestResult ingest_harm(const fs::path& dir, const IngestOptions& options) {
  const DatasetKind kind = options.dataset.value_or(DatasetKind::harm_c);
  Builder b{options, options.image_root.value_or(dir / "images"), {}, {}};
  for (const RowSource& src : {RowSource{dir / "train.jsonl", Split::train},
                               RowSource{dir / "test.jsonl", Split::test}}) {
    if (!fs::is_regular_file(src.file)) throw NotFoundError("harm-native file not found: " + src.file.string());
    for (const auto& row : read_jsonl(src.file)) {
      MemeRecord r;
      r.id = id_string(row.at("id"));
      r.image_ref = string_field(row, "image", r.id);
      r.text = string_field(row, "text", r.id);
      if (auto it = row.find("labels"); it != row.end()) {
        if (!it->is_array() || it->empty() || !(*it)[0].is_string()) {
          throw IngestError("record '" + r.id + "': 'labels' must be a non-empty string array", {r.id});
        }
        r.label = label_or_throw((*it)[0].get<std::string>(), r.id);
      } else if (auto lt = row.find("label"); lt != row.end() && lt->is_string()) {
        r.label = label_or_throw(lt->get<std::string>(), r.id);
      }
      r.dataset = kind;
      r.split = src.split;
      b.add(std::move(r));
    }
  }
  return b.finish(std::string(to_string(kind)), "test.jsonl");
}

IngestResult ingest_fhm(const fs::path& dir, const IngestOptions& options) {
  const DatasetKind kind = options.dataset.value_or(DatasetKind::fhm);
  Builder b{options, options.image_root.value_or(dir), {}, {}};
  const std::string test_file = options.fhm_test_split + ".jsonl";
  for (const RowSource& src : {RowSource{dir / "train.jsonl", Split::train},
                               RowSource{dir / test_file, Split::test}}) {
    if (!fs::is_regular_file(src.file)) throw NotFoundError("fhm-native file not found: " + src.file.string());
    for (const auto& row : read_jsonl(src.file)) {
      MemeRecord r;
      r.id = id_string(row.at("id"));
      r.image_ref = string_field(row, "img", r.id);
      r.text = string_field(row, "text", r.id);
      if (auto it = row.find("label"); it != row.end() && !it->is_null()) {
        if (it->is_number_integer()) {
          const auto v = it->get<long long>();
          if (v != 0 && v != 1) throw IngestError("record '" + r.id + "': unknown raw label '" + it->dump() + "'", {r.id});
          r.label = v == 1 ? Label::harmful : Label::harmless;
        } else if (it->is_string()) {
          r.label = label_or_throw(it->get<std::string>(), r.id);
        } else {
          throw IngestError("record '" + r.id + "': unknown raw label '" + it->dump() + "'", {r.id});
        }
      }
      r.dataset = kind;
      r.split = src.split;
      b.add(std::move(r));
    }
  }
  return b.finish("fhm", test_file);
}

}  // namespace

SchemaKind parse_schema_kind(std::string_view text) {
  if (text == "harm-native") return SchemaKind::harm_native;
  if (text == "fhm-native") return SchemaKind::fhm_native;
  if (text == "canonical") return SchemaKind::canonical;
  throw ValidationError("unknown schema kind '" + std::string(text) + "'");
}

std::string_view to_string(SchemaKind kind) noexcept {
  switch (kind) {
    case SchemaKind::harm_native: return "harm-native";
    case SchemaKind::fhm_native: return "fhm-native";
    case SchemaKind::canonical: return "canonical";
  }
  return "canonical";
}

IngestResult ingest_dataset(const fs::path& path, SchemaKind schema, const IngestOptions& options) {
  if (!fs::exists(path)) throw NotFoundError("dataset path does not exist: " + path.string());
  switch (schema) {
    case SchemaKind::canonical: return ingest_canonical(path, options);
    case SchemaKind::harm_native: return ingest_harm(path, options);
    case SchemaKind::fhm_native: return ingest_fhm(path, options);
  }
  throw ValidationError("unsupported schema kind");
}

void write_canonical(const Corpus& corpus, const fs::path& path) {
  std::vector<json> rows;
  rows.reserve(corpus.size());
  for (const auto& r : corpus.records()) {
    json row = {{"id", r.id}, {"img", r.image_ref}, {"text", r.text}, {"split", to_string(r.split)}};
    if (r.label) row["label"] = to_string(*r.label);
    if (r.annotation) row["annotation"] = *r.annotation;
    rows.push_back(std::move(row));
  }
  write_jsonl_atomic(path, rows);
}

SplitStats split_stats(const Corpus& corpus) {
  SplitStats s;
  for (const auto& r : corpus.records()) {
    auto& c = r.split == Split::train ? s.train : s.test;
    if (!r.label) {
      ++c.unlabeled;
    } else if (*r.label == Label::harmful) {
      ++c.harmful;
    } else {
      ++c.harmless;
    }
  }
  return s;
}

std::optional<SplitStats> reference_stats(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::harm_c: return SplitStats{{1064, 1949, 0}, {124, 230, 0}};
    case DatasetKind::harm_p: return SplitStats{{1486, 1534, 0}, {173, 182, 0}};
    case DatasetKind::fhm: return SplitStats{{3050, 5450, 0}, {250, 250, 0}};
    default: return std::nullopt;
  }
}

std::vector<std::string> check_stats(const SplitStats& actual, const SplitStats& expected) {
  std::vector<std::string> out;
  auto cmp = [&](const char* cell, std::size_t a, std::size_t e) {
    if (a != e) out.push_back(std::string(cell) + ": expected " + std::to_string(e) + ", got " + std::to_string(a));
  };
  cmp("train.harmful", actual.train.harmful, expected.train.harmful);
  cmp("train.harmless", actual.train.harmless, expected.train.harmless);
  cmp("test.harmful", actual.test.harmful, expected.test.harmful);
  cmp("test.harmless", actual.test.harmless, expected.test.harmless);
  return out;
}

}  // namespace memejudge::corpus
