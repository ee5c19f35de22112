#include "memejudge/pipeline/artifacts.hpp"

#include "memejudge/common/io.hpp"
#include "memejudge/corpus/ingest.hpp"
#include "memejudge/pipeline/layout.hpp"

namespace memejudge::pipeline {

namespace {

template <typename T, typename Parse, typename Key>
std::map<std::string, T> read_keyed(const fs::path& path, const char* what, Parse parse, Key key) {
  if (!fs::is_regular_file(path)) throw NotFoundError(std::string(what) + " artifact not found: " + path.string());
  std::map<std::string, T> out;
  std::size_t line = 0;
  for (const auto& row : read_jsonl(path)) {
    ++line;
    try {
      T rec = parse(row);
      std::string id = key(rec);
      if (!out.emplace(id, std::move(rec)).second) throw ValidationError("duplicate meme id '" + id + "'");
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ": record " + std::to_string(line) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ": record " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

bool inside(const fs::path& child, const fs::path& parent) {
  const auto c = fs::weakly_canonical(child), p = fs::weakly_canonical(parent);
  auto [pe, ce] = std::mismatch(p.begin(), p.end(), c.begin(), c.end());
  return pe == p.end();
}

}  // namespace

json to_json(const CorpusMeta& m) {
  return {{"name", m.name}, {"dataset", corpus::to_string(m.dataset)}, {"image_root", m.image_root.generic_string()}};
}

CorpusMeta corpus_meta_from_json(const json& j) {
  return {j.at("name").get<std::string>(), corpus::parse_dataset_kind(j.at("dataset").get<std::string>()),
          fs::path(j.at("image_root").get<std::string>())};
}

void write_run_corpus(const fs::path& run_dir, const corpus::Corpus& corpus, corpus::DatasetKind kind) {
  corpus::write_canonical(corpus, run_dir / layout::corpus);
  fs::path root = corpus.image_root();
  if (inside(root, run_dir)) {
    root = fs::relative(fs::weakly_canonical(root), fs::weakly_canonical(run_dir));
  } else {
    root = fs::absolute(root);
  }
  write_file_atomic(run_dir / layout::corpus_meta, canonical_dump(to_json(CorpusMeta{corpus.name(), kind, root}), 2) + "\n");
}

corpus::Corpus read_run_corpus(const fs::path& run_dir) {
  const auto file = run_dir / layout::corpus;
  const auto meta_file = run_dir / layout::corpus_meta;
  if (!fs::is_regular_file(file) || !fs::is_regular_file(meta_file)) {
    throw NotFoundError("corpus artifact not found under " + run_dir.string());
  }
  const auto meta = corpus_meta_from_json(json::parse(read_text_file(meta_file)));
  corpus::IngestOptions opts;
  opts.dataset = meta.dataset;
  opts.name = meta.name;
  opts.image_root = meta.image_root.is_relative() ? run_dir / meta.image_root : meta.image_root;
  opts.missing_images = corpus::MissingImagePolicy::fail;
  return corpus::ingest_dataset(file, corpus::SchemaKind::canonical, opts).corpus;
}

std::map<std::string, debate::DebateRecord> read_debates(const fs::path& path) {
  return read_keyed<debate::DebateRecord>(path, "debate", debate::debate_from_json,
                                          [](const debate::DebateRecord& d) { return d.meme_id(); });
}

std::map<std::string, debate::CaptionRecord> read_captions(const fs::path& path) {
  return read_keyed<debate::CaptionRecord>(path, "caption", debate::caption_from_json,
                                           [](const debate::CaptionRecord& c) { return c.meme_id; });
}

std::map<std::string, judge::JudgePreference> read_preferences(const fs::path& path) {
  return read_keyed<judge::JudgePreference>(path, "preference", judge::preference_from_json,
                                            [](const judge::JudgePreference& p) { return p.meme_id; });
}

std::map<std::string, fusion::Prediction> read_predictions(const fs::path& path) {
  return read_keyed<fusion::Prediction>(path, "prediction", fusion::prediction_from_json,
                                        [](const fusion::Prediction& p) { return p.meme_id; });
}

}  // namespace memejudge::pipeline
