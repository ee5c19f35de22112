#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memejudge/fusion/context.hpp"
#include "memejudge/fusion/model.hpp"

namespace memejudge::fusion {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;
  double learning_rate = 1e-4;
  double warmup_fraction = 0.1;
  std::uint64_t seed = 13;
  std::optional<int> max_steps;  // caps the schedule length when set
  double weight_decay = 0.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 0.0;  // global norm; 0 disables
  LossMode loss = LossMode::verbalizer;

  std::vector<std::string> problems() const;
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base = {});

int steps_per_epoch(const TrainConfig& c, std::size_t examples);
int total_steps(const TrainConfig& c, std::size_t examples);
// Linear warmup over round(warmup_fraction * total) steps, then linear decay to zero. `step` is 1-based.
double learning_rate_at(const TrainConfig& c, int step, int total);

struct TrainingExample {
  std::string meme_id;
  std::vector<int> tokens;
  std::shared_ptr<const Matrix> image;  // H_img, may be shared between examples
  Label gold = Label::harmless;
};

struct EpochRecord {
  int epoch = 0;
  int step = 0;
  double loss = 0.0;
  double train_acc = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

nlohmann::json to_json(const EpochRecord& r);

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  std::function<void(int step, double batch_loss)> on_step;
};

// Sequential mini-batch AdamW. Batches are drawn from a seeded shuffle per epoch; the
// per-epoch loss and accuracy are measured on the forward passes that produced the updates.
std::vector<EpochRecord> train_model(FusionJudgeModel& model, std::span<const TrainingExample> examples,
                                     const TrainConfig& config, const TrainHooks& hooks = {});

// Fraction of examples whose decided label equals gold. `zero_image` replaces H_img by zeros.
double accuracy(const FusionJudgeModel& model, std::span<const TrainingExample> examples, bool zero_image = false);

struct ExampleSource {
  const corpus::Corpus* corpus = nullptr;
  const std::map<std::string, debate::DebateRecord>* debates = nullptr;
  const std::map<std::string, judge::JudgePreference>* preferences = nullptr;
  const std::map<std::string, debate::CaptionRecord>* captions = nullptr;  // appended to the text when set
  ContextLayout layout = ContextLayout::judge_ordered;
};

// Tokenizes each meme's context and extracts its image features (one extraction per distinct
// image file). Throws ValidationError listing memes without a debate record (when the layout
// needs one) or without a label (when `require_labels`).
std::vector<TrainingExample> build_examples(const FusionJudgeModel& model, std::span<const corpus::MemeRecord* const> memes,
                                            const ExampleSource& source, bool require_labels);

}  // namespace memejudge::fusion
