#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memejudge/common/errors.hpp"
#include "memejudge/llm/backend.hpp"
#include "memejudge/pipeline/config.hpp"

namespace memejudge::pipeline {

enum class Stage { ingest, debate, judge, train, predict, eval, ablate, score_explanations };
inline constexpr Stage kAllStages[] = {Stage::ingest,  Stage::debate, Stage::judge,  Stage::train,
                                       Stage::predict, Stage::eval,   Stage::ablate, Stage::score_explanations};

std::string_view to_string(Stage s) noexcept;
Stage parse_stage(std::string_view text);
// Noun used in "requires <artifact> artifact" messages.
std::string_view artifact_name(Stage s) noexcept;
std::vector<Stage> upstream(Stage s);

// An upstream stage has not produced its artifact yet.
class MissingStageArtifact : public Error {
 public:
  MissingStageArtifact(Stage stage, Stage missing);
  Stage missing() const noexcept { return missing_; }

 private:
  Stage missing_;
};

// An upstream artifact exists but was produced under a different configuration.
class StaleArtifact : public Error {
 public:
  using Error::Error;
};

struct StageResult {
  std::string name;  // "ablate:wo_MD" for per-variant entries
  bool skipped = false;
  std::vector<std::string> outputs;  // relative to the run directory
};

struct PipelineOptions {
  // Replaces the backend named in the config (tests inject scripted mocks).
  std::shared_ptr<llm::Backend> backend;
};

class Pipeline {
 public:
  Pipeline(RunConfig config, std::filesystem::path run_dir, PipelineOptions options = {});

  // Runs one stage. Skips when the manifest records the same fingerprint and every output
  // file still hashes to its recorded digest. For ablate, `variant` narrows the run to one.
  std::vector<StageResult> run_stage(Stage stage, std::optional<evalkit::AblationVariant> variant = std::nullopt);
  // Every stage in order.
  std::vector<StageResult> run_all();

  const RunConfig& config() const noexcept { return config_; }
  const std::filesystem::path& run_dir() const noexcept { return run_dir_; }
  // Expected fingerprint of a stage entry under the current config.
  std::string stage_fingerprint(const std::string& entry) const;
  nlohmann::json manifest() const;

 private:
  RunConfig config_;
  std::filesystem::path run_dir_;
  PipelineOptions options_;
};

// Default configuration of the `demo` subcommand: generated synthetic corpus, mock backend.
RunConfig demo_config(std::uint64_t seed = 13);

}  // namespace memejudge::pipeline
