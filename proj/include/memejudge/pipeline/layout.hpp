#pragma once

#include <string_view>

// Relative artifact paths inside a run directory.
namespace memejudge::pipeline::layout {

inline constexpr std::string_view manifest = "manifest.json";
inline constexpr std::string_view config = "config.json";
inline constexpr std::string_view corpus = "corpus/corpus.jsonl";
inline constexpr std::string_view corpus_meta = "corpus/meta.json";
inline constexpr std::string_view synthetic_dir = "synthetic";
inline constexpr std::string_view debates = "debate/debates.jsonl";
inline constexpr std::string_view captions = "debate/captions.jsonl";
inline constexpr std::string_view debate_prompts = "debate/prompts.jsonl";
inline constexpr std::string_view preferences = "judge/preferences.jsonl";
inline constexpr std::string_view direct_preferences = "judge/direct.jsonl";
inline constexpr std::string_view judge_prompts = "judge/prompts.jsonl";
inline constexpr std::string_view checkpoint = "train/model.ckpt";
inline constexpr std::string_view train_log = "train/train_log.jsonl";
inline constexpr std::string_view predictions = "predict/predictions.jsonl";
inline constexpr std::string_view metrics = "eval/metrics.json";
inline constexpr std::string_view ablation_dir = "ablate";
inline constexpr std::string_view quality_scores = "quality/scores.jsonl";
inline constexpr std::string_view quality_summary = "quality/summary.json";
inline constexpr std::string_view decisions = "serve/decisions.jsonl";
inline constexpr std::string_view llm_cache = "llm_cache";

}  // namespace memejudge::pipeline::layout
