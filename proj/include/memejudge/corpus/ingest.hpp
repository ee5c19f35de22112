#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "memejudge/corpus/types.hpp"

namespace memejudge::corpus {

enum class SchemaKind { harm_native, fhm_native, canonical };
SchemaKind parse_schema_kind(std::string_view text);
std::string_view to_string(SchemaKind kind) noexcept;

enum class MissingImagePolicy { skip, fail };

struct IngestOptions {
  // Dataset tag for the records; harm-native defaults to harm-c, fhm-native to fhm.
  std::optional<DatasetKind> dataset;
  // FHM ships several held-out files; which one plays the role of "test".
  std::string fhm_test_split = "dev_seen";
  MissingImagePolicy missing_images = MissingImagePolicy::skip;
  // Overrides the directory image refs are resolved against.
  std::optional<std::filesystem::path> image_root;
  std::string name;
};

struct IngestResult {
  Corpus corpus;
  std::vector<std::string> skipped_ids;  // records dropped because their image was missing
  std::string test_split_source;         // file the test split was read from
};

// Layouts:
//   canonical   - a JSONL file {"id","img","text","label","split"}; images relative to its directory.
//   harm-native - a directory with train.jsonl / test.jsonl rows {"id","image","labels":[raw,...],"text"},
//                 images under images/.
//   fhm-native  - a directory with train.jsonl and <fhm_test_split>.jsonl rows
//                 {"id","img","label":0|1,"text"}, image refs relative to the directory.
IngestResult ingest_dataset(const std::filesystem::path& path, SchemaKind schema,
                            const IngestOptions& options = {});

void write_canonical(const Corpus& corpus, const std::filesystem::path& path);

SplitStats split_stats(const Corpus& corpus);

// Published train/test class counts for the three benchmark datasets.
std::optional<SplitStats> reference_stats(DatasetKind kind);

// Empty when `actual` matches `expected`; otherwise one line per mismatching cell.
std::vector<std::string> check_stats(const SplitStats& actual, const SplitStats& expected);

}  // namespace memejudge::corpus
