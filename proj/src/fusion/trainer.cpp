#include "memejudge/fusion/trainer.hpp"

#include <cmath>
#include <numeric>

#include <spdlog/spdlog.h>

#include "memejudge/common/errors.hpp"
#include "memejudge/common/random.hpp"
#include "memejudge/corpus/image.hpp"

namespace memejudge::fusion {

std::vector<std::string> TrainConfig::problems() const {
  std::vector<std::string> out;
  if (epochs <= 0) out.push_back("epochs: must be a positive integer");
  if (batch_size <= 0) out.push_back("batch_size: must be a positive integer");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) out.push_back("learning_rate: must be positive");
  if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) out.push_back("warmup_fraction: must be in [0, 1)");
  if (max_steps && *max_steps <= 0) out.push_back("max_steps: must be a positive integer");
  if (weight_decay < 0.0) out.push_back("weight_decay: must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) out.push_back("beta1: must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) out.push_back("beta2: must be in [0, 1)");
  if (!(adam_eps > 0.0)) out.push_back("adam_eps: must be positive");
  if (grad_clip < 0.0) out.push_back("grad_clip: must be non-negative");
  return out;
}

void TrainConfig::validate() const {
  auto p = problems();
  if (!p.empty()) throw ConfigError(std::move(p));
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"warmup_fraction", c.warmup_fraction},
          {"seed", c.seed},
          {"max_steps", c.max_steps ? nlohmann::json(*c.max_steps) : nlohmann::json(nullptr)},
          {"weight_decay", c.weight_decay},
          {"beta1", c.beta1},
          {"beta2", c.beta2},
          {"adam_eps", c.adam_eps},
          {"grad_clip", c.grad_clip},
          {"loss", to_string(c.loss)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& base) {
  if (!j.is_object()) throw ConfigError({"train: must be an object"});
  TrainConfig c = base;
  std::vector<std::string> problems;
  auto number = [&](const std::string& key, const nlohmann::json& v, double& dst) {
    if (!v.is_number()) problems.push_back(key + ": must be a number");
    else dst = v.get<double>();
  };
  auto integer = [&](const std::string& key, const nlohmann::json& v, int& dst) {
    if (!v.is_number_integer()) problems.push_back(key + ": must be an integer");
    else dst = v.get<int>();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "epochs") integer(key, v, c.epochs);
    else if (key == "batch_size") integer(key, v, c.batch_size);
    else if (key == "learning_rate") number(key, v, c.learning_rate);
    else if (key == "warmup_fraction") number(key, v, c.warmup_fraction);
    else if (key == "seed") {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        problems.push_back("seed: must be a non-negative integer");
      } else {
        c.seed = v.get<std::uint64_t>();
      }
    } else if (key == "max_steps") {
      if (v.is_null()) c.max_steps.reset();
      else if (!v.is_number_integer()) problems.push_back("max_steps: must be an integer or null");
      else c.max_steps = v.get<int>();
    } else if (key == "weight_decay") number(key, v, c.weight_decay);
    else if (key == "beta1") number(key, v, c.beta1);
    else if (key == "beta2") number(key, v, c.beta2);
    else if (key == "adam_eps") number(key, v, c.adam_eps);
    else if (key == "grad_clip") number(key, v, c.grad_clip);
    else if (key == "loss") {
      if (!v.is_string() || (v != "verbalizer" && v != "vocabulary")) {
        problems.push_back("loss: must be \"verbalizer\" or \"vocabulary\"");
      } else {
        c.loss = parse_loss_mode(v.get<std::string>());
      }
    } else {
      problems.push_back(key + ": unknown field");
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

int steps_per_epoch(const TrainConfig& c, std::size_t examples) {
  return static_cast<int>((examples + static_cast<std::size_t>(c.batch_size) - 1) / static_cast<std::size_t>(c.batch_size));
}

int total_steps(const TrainConfig& c, std::size_t examples) {
  const int full = c.epochs * steps_per_epoch(c, examples);
  return c.max_steps ? std::min(full, *c.max_steps) : full;
}

double learning_rate_at(const TrainConfig& c, int step, int total) {
  const int warmup = static_cast<int>(std::lround(c.warmup_fraction * total));
  if (warmup > 0 && step <= warmup) return c.learning_rate * step / warmup;
  return c.learning_rate * static_cast<double>(std::max(0, total - step + 1)) / static_cast<double>(total - warmup + 1);
}

nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch}, {"step", r.step}, {"loss", r.loss}, {"train_acc", r.train_acc}};
}

namespace {

struct AdamState {
  Matrix m;
  Matrix v;
};

}  // namespace

std::vector<EpochRecord> train_model(FusionJudgeModel& model, std::span<const TrainingExample> examples,
                                     const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (examples.empty()) throw ValidationError("train: no training examples");
  auto params = model.parameters();
  std::vector<AdamState> state;
  for (Parameter* p : params) {
    state.push_back({Matrix::Zero(p->value.rows(), p->value.cols()), Matrix::Zero(p->value.rows(), p->value.cols())});
  }
  const int total = total_steps(config, examples.size());
  Rng rng(config.seed ^ 0x7261696eULL);
  std::vector<std::size_t> order(examples.size());
  std::vector<EpochRecord> log;
  int step = 0;
  for (int epoch = 1; epoch <= config.epochs && step < total; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span(order));
    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size() && step < total;
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double inv = 1.0 / static_cast<double>(end - start);
      model.zero_grad();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const TrainingExample& ex = examples[order[k]];
        Tape tape;
        LabelScores sc;
        Tape::Var l = model.loss(tape, ex.tokens, ex.image.get(), ex.gold, config.loss, &sc);
        Tape::Var scaled = tape.scale(l, inv);
        tape.backward(scaled);
        for (Parameter* p : params) tape.accumulate(*p);
        batch_loss += tape.scalar(l);
        correct += decide(sc) == ex.gold ? 1 : 0;
      }
      ++step;
      loss_sum += batch_loss;
      seen += end - start;
      if (config.grad_clip > 0.0) {
        double sq = 0.0;
        for (Parameter* p : params) sq += p->grad.squaredNorm();
        const double norm = std::sqrt(sq);
        if (norm > config.grad_clip) {
          for (Parameter* p : params) p->grad *= config.grad_clip / norm;
        }
      }
      const double lr = learning_rate_at(config, step, total);
      const double bc1 = 1.0 - std::pow(config.beta1, step);
      const double bc2 = 1.0 - std::pow(config.beta2, step);
      for (std::size_t i = 0; i < params.size(); ++i) {
        Parameter& p = *params[i];
        if (p.frozen) continue;
        AdamState& s = state[i];
        s.m = config.beta1 * s.m + (1.0 - config.beta1) * p.grad;
        s.v = config.beta2 * s.v + (1.0 - config.beta2) * p.grad.cwiseProduct(p.grad);
        if (config.weight_decay > 0.0) p.value *= 1.0 - lr * config.weight_decay;
        p.value.array() -= lr * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + config.adam_eps);
      }
      if (hooks.on_step) hooks.on_step(step, batch_loss * inv);
    }
    EpochRecord rec{epoch, step, loss_sum / static_cast<double>(seen),
                    static_cast<double>(correct) / static_cast<double>(seen)};
    spdlog::debug("train: epoch {} step {} loss {:.6f} acc {:.4f}", rec.epoch, rec.step, rec.loss, rec.train_acc);
    log.push_back(rec);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  model.zero_grad();
  return log;
}

double accuracy(const FusionJudgeModel& model, std::span<const TrainingExample> examples, bool zero_image) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    std::optional<Matrix> zeros;
    const Matrix* img = ex.image.get();
    if (zero_image && img != nullptr) {
      zeros = Matrix::Zero(img->rows(), img->cols());
      img = &*zeros;
    }
    correct += decide(model.scores(ex.tokens, img)) == ex.gold ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::vector<TrainingExample> build_examples(const FusionJudgeModel& model,
                                            std::span<const corpus::MemeRecord* const> memes,
                                            const ExampleSource& source, bool require_labels) {
  if (source.corpus == nullptr) throw ValidationError("build_examples: corpus is required");
  const bool needs_debate = source.layout != ContextLayout::meme_only;
  std::vector<std::string> missing_debate;
  std::vector<std::string> missing_label;
  std::vector<std::string> missing_caption;
  for (const auto* m : memes) {
    if (needs_debate && (source.debates == nullptr || !source.debates->contains(m->id))) missing_debate.push_back(m->id);
    if (require_labels && !m->label) missing_label.push_back(m->id);
    if (source.captions != nullptr && !source.captions->contains(m->id)) missing_caption.push_back(m->id);
  }
  auto fail = [](const std::string& what, const std::vector<std::string>& ids) {
    std::string msg = what + " (" + std::to_string(ids.size()) + "):";
    for (std::size_t i = 0; i < ids.size() && i < 20; ++i) msg += " " + ids[i];
    if (ids.size() > 20) msg += " ...";
    throw ValidationError(msg);
  };
  if (!missing_debate.empty()) fail("memes without a debate record", missing_debate);
  if (!missing_label.empty()) fail("memes without a label", missing_label);
  if (!missing_caption.empty()) fail("memes without a caption", missing_caption);

  const auto& cfg = model.config();
  std::map<std::string, std::shared_ptr<const Matrix>> features;
  std::vector<TrainingExample> out;
  out.reserve(memes.size());
  for (const auto* m : memes) {
    const debate::DebateRecord* d = needs_debate ? &source.debates->at(m->id) : nullptr;
    const judge::JudgePreference* pref = nullptr;
    if (source.preferences != nullptr) {
      if (auto it = source.preferences->find(m->id); it != source.preferences->end()) pref = &it->second;
    }
    const debate::CaptionRecord* cap = source.captions != nullptr ? &source.captions->at(m->id) : nullptr;
    TrainingExample ex;
    ex.meme_id = m->id;
    ex.tokens = tokenize_input(build_model_input(*m, d, pref, source.layout, cap), model.tokenizer(), cfg.max_text_tokens);
    if (m->label) ex.gold = *m->label;
    const std::string path = source.corpus->image_path(*m).string();
    auto it = features.find(path);
    if (it == features.end()) {
      auto image = corpus::load_image(path, static_cast<std::size_t>(cfg.image_size));
      it = features.emplace(path, std::make_shared<const Matrix>(model.image_features(image))).first;
    }
    ex.image = it->second;
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace memejudge::fusion
