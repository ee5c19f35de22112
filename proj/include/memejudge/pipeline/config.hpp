#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memejudge/corpus/ingest.hpp"
#include "memejudge/corpus/synthetic.hpp"
#include "memejudge/debate/debate.hpp"
#include "memejudge/evalkit/ablation.hpp"
#include "memejudge/fusion/model.hpp"
#include "memejudge/fusion/trainer.hpp"

namespace memejudge::pipeline {

struct DatasetConfig {
  corpus::DatasetKind kind = corpus::DatasetKind::synthetic;
  // Unset for synthetic data, which is generated inside the run directory.
  std::optional<std::filesystem::path> path;
  corpus::SchemaKind schema = corpus::SchemaKind::canonical;
  std::string fhm_test_split = "dev_seen";
  corpus::MissingImagePolicy missing_images = corpus::MissingImagePolicy::skip;
  // Compare split statistics against the published (or synthetic manifest) counts.
  bool gate = true;
  corpus::SyntheticSpec synthetic;
};

struct GatewayConfig {
  std::string backend = "mock";  // mock | http
  std::string debater_model = "mock-vlm";
  std::string judge_model = "mock-vlm";
  std::string quality_model = "mock-judge";
  debate::DebateMode mode = debate::DebateMode::vision;
  std::string prompt_set = "v1";
  int max_retries = 3;
  int max_in_flight = 4;
  int workers = 1;
  bool cache = true;
};

struct AblationConfig {
  std::vector<evalkit::AblationVariant> variants{evalkit::kAllVariants.begin(), evalkit::kAllVariants.end()};
};

struct QualityConfig {
  std::optional<int> max_memes;
  // JSON Lines {"meme_id", "text"}: a third, human-written candidate.
  std::optional<std::filesystem::path> human_explanations;
  bool strict = false;
};

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> static_dir;
};

struct RunConfig {
  DatasetConfig dataset;
  GatewayConfig gateway;
  std::string model_size = "desk";  // desk | paper
  fusion::FusionConfig fusion;
  fusion::TrainConfig train;
  AblationConfig ablation;
  QualityConfig quality;
  ServeConfig serve;
  std::optional<std::filesystem::path> output_dir;
  std::uint64_t seed = 13;
};

// Fusion shape for a model_size: "paper" keeps the published dimensions, "desk" is a small
// backbone that trains on a CPU.
fusion::FusionConfig base_fusion_config(std::string_view model_size);

// Learning rate applied when the config does not set one.
double preset_learning_rate(corpus::DatasetKind kind) noexcept;

// Strict parse. Every problem is collected as "<field.path>: message" and reported at once
// through ConfigError. Relative paths resolve against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& c);

// Stable digest of everything except output_dir and serve settings.
std::string config_fingerprint(const RunConfig& c);

}  // namespace memejudge::pipeline
