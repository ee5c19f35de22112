#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "memejudge/fusion/checkpoint.hpp"

namespace memejudge::fusion {

struct Prediction {
  std::string meme_id;
  Label label = Label::harmful;
  LabelScores scores;
  std::optional<debate::Rationale> explanation;  // absent when the context had no debate
};

struct PredictOptions {
  ContextLayout layout = ContextLayout::judge_ordered;
  const debate::CaptionRecord* caption = nullptr;
  bool zero_image = false;
};

Prediction predict(const FusionJudgeModel& model, const corpus::Corpus& corpus, const corpus::MemeRecord& meme,
                   const debate::DebateRecord* debate, const judge::JudgePreference* preference,
                   const PredictOptions& options = {});

// Same, after checking that the checkpoint matches the runtime config.
Prediction predict(const LoadedCheckpoint& checkpoint, const FusionConfig& runtime, const corpus::Corpus& corpus,
                   const corpus::MemeRecord& meme, const debate::DebateRecord* debate,
                   const judge::JudgePreference* preference, const PredictOptions& options = {});

nlohmann::json to_json(const Prediction& p);
Prediction prediction_from_json(const nlohmann::json& j);

}  // namespace memejudge::fusion
