#include "memejudge/fusion/predict.hpp"

#include "memejudge/corpus/image.hpp"
#include "memejudge/evalkit/metrics.hpp"

namespace memejudge::fusion {

Prediction predict(const FusionJudgeModel& model, const corpus::Corpus& corpus, const corpus::MemeRecord& meme,
                   const debate::DebateRecord* debate, const judge::JudgePreference* preference,
                   const PredictOptions& options) {
  const auto& cfg = model.config();
  const auto ids = tokenize_input(build_model_input(meme, debate, preference, options.layout, options.caption),
                                  model.tokenizer(), cfg.max_text_tokens);
  Matrix features = model.image_features(corpus::load_image(corpus.image_path(meme), static_cast<std::size_t>(cfg.image_size)));
  if (options.zero_image) features.setZero();
  Prediction p;
  p.meme_id = meme.id;
  p.scores = model.scores(ids, &features);
  p.label = decide(p.scores);
  if (debate != nullptr) p.explanation = evalkit::select_explanation(p.label, *debate);
  return p;
}

Prediction predict(const LoadedCheckpoint& checkpoint, const FusionConfig& runtime, const corpus::Corpus& corpus,
                   const corpus::MemeRecord& meme, const debate::DebateRecord* debate,
                   const judge::JudgePreference* preference, const PredictOptions& options) {
  check_fingerprint(checkpoint.meta, runtime);
  return predict(*checkpoint.model, corpus, meme, debate, preference, options);
}

nlohmann::json to_json(const Prediction& p) {
  return {{"meme_id", p.meme_id},
          {"label", corpus::to_string(p.label)},
          {"label_scores", {{"harmful", p.scores.harmful}, {"harmless", p.scores.harmless}}},
          {"explanation", p.explanation ? debate::to_json(*p.explanation) : nlohmann::json(nullptr)}};
}

Prediction prediction_from_json(const nlohmann::json& j) {
  Prediction p;
  p.meme_id = j.at("meme_id").get<std::string>();
  p.label = corpus::parse_label(j.at("label").get<std::string>());
  p.scores.harmful = j.at("label_scores").at("harmful").get<double>();
  p.scores.harmless = j.at("label_scores").at("harmless").get<double>();
  if (!j.at("explanation").is_null()) p.explanation = debate::rationale_from_json(j.at("explanation"));
  return p;
}

}  // namespace memejudge::fusion
