#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memejudge/corpus/types.hpp"
#include "memejudge/debate/debate.hpp"
#include "memejudge/fusion/predict.hpp"
#include "memejudge/judge/judge.hpp"

namespace memejudge::pipeline {

struct CorpusMeta {
  std::string name;
  corpus::DatasetKind dataset = corpus::DatasetKind::custom;
  // Relative paths resolve against the run directory.
  std::filesystem::path image_root;
};

nlohmann::json to_json(const CorpusMeta& m);
CorpusMeta corpus_meta_from_json(const nlohmann::json& j);

// Writes corpus/corpus.jsonl and corpus/meta.json. Image roots inside the run directory are
// stored relative to it.
void write_run_corpus(const std::filesystem::path& run_dir, const corpus::Corpus& corpus, corpus::DatasetKind kind);
corpus::Corpus read_run_corpus(const std::filesystem::path& run_dir);

std::map<std::string, debate::DebateRecord> read_debates(const std::filesystem::path& path);
std::map<std::string, debate::CaptionRecord> read_captions(const std::filesystem::path& path);
std::map<std::string, judge::JudgePreference> read_preferences(const std::filesystem::path& path);
std::map<std::string, fusion::Prediction> read_predictions(const std::filesystem::path& path);

}  // namespace memejudge::pipeline
