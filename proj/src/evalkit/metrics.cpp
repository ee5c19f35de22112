#include "memejudge/evalkit/metrics.hpp"

#include "memejudge/common/errors.hpp"

namespace memejudge::evalkit {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ClassMetrics class_metrics(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassMetrics m;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
  m.support = tp + fn;
  return m;
}

nlohmann::json to_json(const ClassMetrics& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
}

}  // namespace

MetricsReport compute_metrics(std::span<const Label> golds, std::span<const Label> preds) {
  if (golds.empty()) throw ValidationError("compute_metrics: no labels");
  if (golds.size() != preds.size()) {
    throw ValidationError("compute_metrics: " + std::to_string(golds.size()) + " golds but " +
                          std::to_string(preds.size()) + " predictions");
  }
  std::size_t hf_hf = 0, hf_hl = 0, hl_hf = 0, hl_hl = 0;  // gold_pred
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const bool g = golds[i] == Label::harmful;
    const bool p = preds[i] == Label::harmful;
    if (g && p) ++hf_hf;
    else if (g) ++hf_hl;
    else if (p) ++hl_hf;
    else ++hl_hl;
  }
  MetricsReport r;
  r.n = golds.size();
  r.accuracy = ratio(hf_hf + hl_hl, r.n);
  r.harmful = class_metrics(hf_hf, hl_hf, hf_hl);
  r.harmless = class_metrics(hl_hl, hf_hl, hl_hf);
  r.macro_f1 = (r.harmful.f1 + r.harmless.f1) / 2.0;
  return r;
}

nlohmann::json to_json(const MetricsReport& r) {
  return {{"accuracy", r.accuracy},
          {"macro_f1", r.macro_f1},
          {"n", r.n},
          {"per_class", {{"harmful", to_json(r.harmful)}, {"harmless", to_json(r.harmless)}}}};
}

const debate::Rationale& select_explanation(Label prediction, const debate::DebateRecord& debate) noexcept {
  return debate.of(prediction);
}

}  // namespace memejudge::evalkit
