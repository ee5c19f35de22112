#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "memejudge/common/errors.hpp"
#include "memejudge/fusion/context.hpp"
#include "memejudge/fusion/model.hpp"
#include "memejudge/fusion/trainer.hpp"

namespace memejudge::fusion {

std::string_view to_string(ContextLayout layout) noexcept;
ContextLayout parse_context_layout(std::string_view text);

struct CheckpointMeta {
  FusionConfig fusion;
  TrainConfig train;
  ContextLayout layout = ContextLayout::judge_ordered;
  bool caption_appended = false;
  nlohmann::json data_fingerprints = nlohmann::json::object();
  std::string tokenizer_id;
  std::string verbalizer_id;
  std::string config_fingerprint;
  std::string extractor_digest;
};

class FingerprintMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Single-file archive: magic line, 8-byte little-endian header length, JSON header
// (configs, fingerprints, tensor index), then float64 tensor data. Written atomically.
void save_checkpoint(const std::filesystem::path& path, const FusionJudgeModel& model, CheckpointMeta meta);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  std::unique_ptr<FusionJudgeModel> model;
};

// Throws ValidationError on a malformed file or when tensors do not match the stored config.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

// Throws FingerprintMismatch when `runtime` differs from the checkpoint's architecture config.
void check_fingerprint(const CheckpointMeta& meta, const FusionConfig& runtime);

}  // namespace memejudge::fusion
