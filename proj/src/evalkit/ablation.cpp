#include "memejudge/evalkit/ablation.hpp"

#include <spdlog/spdlog.h>

#include "memejudge/corpus/image.hpp"

namespace memejudge::evalkit {

using fusion::ContextLayout;

namespace {

struct VariantName {
  AblationVariant v;
  std::string_view name;
};

constexpr VariantName kVariantNames[] = {
    {AblationVariant::full, "full"},         {AblationVariant::wo_MD, "wo_MD"},
    {AblationVariant::wo_LLMJ, "wo_LLMJ"},   {AblationVariant::wo_SLMJ, "wo_SLMJ"},
    {AblationVariant::wo_HlD, "wo_HlD"},     {AblationVariant::wo_HfD, "wo_HfD"},
    {AblationVariant::wo_MF, "wo_MF"},       {AblationVariant::wo_UR, "wo_UR"},
    {AblationVariant::llm_direct, "llm_direct"}, {AblationVariant::llm_md_cot, "llm_md_cot"}};

void require(bool present, AblationVariant v, const char* artifact) {
  if (!present) {
    throw MissingArtifact("ablation " + std::string(to_string(v)) + " requires the " + artifact + " artifact");
  }
}

template <typename Map>
const typename Map::mapped_type* lookup(const Map* m, const std::string& id) {
  if (m == nullptr) return nullptr;
  auto it = m->find(id);
  return it == m->end() ? nullptr : &it->second;
}

}  // namespace

std::string_view to_string(AblationVariant v) noexcept {
  for (const auto& n : kVariantNames) {
    if (n.v == v) return n.name;
  }
  return "full";
}

AblationVariant parse_variant(std::string_view text) {
  for (const auto& n : kVariantNames) {
    if (n.name == text) return n.v;
  }
  std::string known;
  for (const auto& n : kVariantNames) known += (known.empty() ? "" : ", ") + std::string(n.name);
  throw ValidationError("unknown ablation variant '" + std::string(text) + "' (known: " + known + ")");
}

bool trains_fusion_judge(AblationVariant v) noexcept {
  return v != AblationVariant::wo_SLMJ && v != AblationVariant::llm_direct && v != AblationVariant::llm_md_cot;
}

ContextLayout layout_for(AblationVariant v) noexcept {
  switch (v) {
    case AblationVariant::wo_MD: return ContextLayout::meme_only;
    case AblationVariant::wo_LLMJ: return ContextLayout::fixed_order;
    case AblationVariant::wo_HlD: return ContextLayout::harmful_only;
    case AblationVariant::wo_HfD: return ContextLayout::harmless_only;
    case AblationVariant::wo_UR: return ContextLayout::preferred_only;
    default: return ContextLayout::judge_ordered;
  }
}

corpus::Label preference_label(const judge::JudgePreference* preference) noexcept {
  if (preference != nullptr && preference->status == judge::ParseStatus::parsed && preference->preferred) {
    return *preference->preferred;
  }
  return corpus::Label::harmful;
}

AblationResult run_ablation(AblationVariant variant, const AblationInputs& in) {
  require(in.corpus != nullptr, variant, "corpus");
  const corpus::Corpus& corpus = *in.corpus;
  AblationResult result;
  result.variant = variant;
  std::vector<const corpus::MemeRecord*> test;
  for (const auto* m : corpus.split(corpus::Split::test)) {
    if (m->label) test.push_back(m);
  }
  if (test.empty()) throw ValidationError("ablation " + std::string(to_string(variant)) + ": no labeled test memes");

  const ContextLayout layout = layout_for(variant);
  if (layout != ContextLayout::meme_only) require(in.debates != nullptr, variant, "debates");

  if (!trains_fusion_judge(variant)) {
    const bool direct = variant == AblationVariant::llm_direct;
    require(direct ? in.direct_preferences != nullptr : in.preferences != nullptr, variant,
            direct ? "direct-preferences" : "preferences");
    const auto* source = direct ? in.direct_preferences : in.preferences;
    for (const auto* m : test) {
      fusion::Prediction p;
      p.meme_id = m->id;
      p.label = preference_label(lookup(source, m->id));
      p.scores = p.label == corpus::Label::harmful ? fusion::LabelScores{0.0, -1.0} : fusion::LabelScores{-1.0, 0.0};
      if (const auto* d = lookup(in.debates, m->id)) p.explanation = select_explanation(p.label, *d);
      result.predictions.push_back(std::move(p));
    }
  } else {
    if (layout == ContextLayout::judge_ordered || layout == ContextLayout::preferred_only) {
      require(in.preferences != nullptr, variant, "preferences");
    }
    fusion::FusionConfig fcfg = in.fusion;
    const std::map<std::string, debate::CaptionRecord>* captions = nullptr;
    if (variant == AblationVariant::wo_MF) {
      require(in.captions != nullptr, variant, "captions");
      fcfg.fusion_enabled = false;
      captions = in.captions;
    }
    fusion::FusionJudgeModel model(fcfg, in.train.seed);
    const auto train_memes = corpus.split(corpus::Split::train);
    fusion::ExampleSource src{&corpus, in.debates, in.preferences, captions, layout};
    const auto examples = fusion::build_examples(model, train_memes, src, true);
    result.train_log = fusion::train_model(model, examples, in.train);
    fusion::PredictOptions opts;
    opts.layout = layout;
    for (const auto* m : test) {
      opts.caption = captions != nullptr ? &captions->at(m->id) : nullptr;
      result.predictions.push_back(
          fusion::predict(model, corpus, *m, lookup(in.debates, m->id), lookup(in.preferences, m->id), opts));
    }
  }

  std::vector<corpus::Label> golds, preds;
  for (std::size_t i = 0; i < test.size(); ++i) {
    golds.push_back(*test[i]->label);
    preds.push_back(result.predictions[i].label);
  }
  result.metrics = compute_metrics(golds, preds);
  spdlog::info("ablation {}: accuracy {:.4f} macro-F1 {:.4f} on {} memes", to_string(variant), result.metrics.accuracy,
               result.metrics.macro_f1, result.metrics.n);
  return result;
}

nlohmann::json to_json(const AblationResult& r) {
  nlohmann::json preds = nlohmann::json::array();
  for (const auto& p : r.predictions) preds.push_back(fusion::to_json(p));
  nlohmann::json log = nlohmann::json::array();
  for (const auto& e : r.train_log) log.push_back(fusion::to_json(e));
  return {{"variant", to_string(r.variant)},
          {"metrics", to_json(r.metrics)},
          {"predictions", preds},
          {"train_log", log}};
}

}  // namespace memejudge::evalkit
