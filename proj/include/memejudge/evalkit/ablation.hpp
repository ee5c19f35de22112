#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memejudge/evalkit/metrics.hpp"
#include "memejudge/fusion/predict.hpp"
#include "memejudge/fusion/trainer.hpp"

namespace memejudge::evalkit {

enum class AblationVariant {
  full,
  wo_MD,
  wo_LLMJ,
  wo_SLMJ,
  wo_HlD,
  wo_HfD,
  wo_MF,
  wo_UR,
  llm_direct,
  llm_md_cot
};

inline constexpr std::array<AblationVariant, 10> kAllVariants = {
    AblationVariant::full,   AblationVariant::wo_MD, AblationVariant::wo_LLMJ,    AblationVariant::wo_SLMJ,
    AblationVariant::wo_HlD, AblationVariant::wo_HfD, AblationVariant::wo_MF,     AblationVariant::wo_UR,
    AblationVariant::llm_direct, AblationVariant::llm_md_cot};

std::string_view to_string(AblationVariant v) noexcept;
AblationVariant parse_variant(std::string_view text);

// True for the variants that train the small fusion judge.
bool trains_fusion_judge(AblationVariant v) noexcept;
fusion::ContextLayout layout_for(AblationVariant v) noexcept;

struct AblationInputs {
  const corpus::Corpus* corpus = nullptr;
  const std::map<std::string, debate::DebateRecord>* debates = nullptr;
  const std::map<std::string, judge::JudgePreference>* preferences = nullptr;
  const std::map<std::string, debate::CaptionRecord>* captions = nullptr;
  const std::map<std::string, judge::JudgePreference>* direct_preferences = nullptr;
  fusion::FusionConfig fusion;
  fusion::TrainConfig train;
};

struct AblationResult {
  AblationVariant variant = AblationVariant::full;
  MetricsReport metrics;
  std::vector<fusion::Prediction> predictions;  // test split, corpus order
  std::vector<fusion::EpochRecord> train_log;
};

class MissingArtifact : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Label read off an LLM preference; unparsed verdicts count as harmful (the moderation tie-break).
corpus::Label preference_label(const judge::JudgePreference* preference) noexcept;

// Trains on the train split (fusion variants) and evaluates on labeled test memes.
// Throws MissingArtifact naming the artifact a variant needs but was not given.
AblationResult run_ablation(AblationVariant variant, const AblationInputs& inputs);

nlohmann::json to_json(const AblationResult& r);

}  // namespace memejudge::evalkit
