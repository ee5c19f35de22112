#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "memejudge/corpus/types.hpp"
#include "memejudge/debate/debate.hpp"

namespace memejudge::evalkit {

using corpus::Label;

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  ClassMetrics harmful;
  ClassMetrics harmless;
  std::size_t n = 0;

  const ClassMetrics& of(Label l) const noexcept { return l == Label::harmful ? harmful : harmless; }
};

// Per-class precision/recall/F1 with 0 for any 0/0 ratio. Throws ValidationError on empty or
// mismatched inputs.
MetricsReport compute_metrics(std::span<const Label> golds, std::span<const Label> preds);

nlohmann::json to_json(const MetricsReport& r);

// The rationale arguing for the predicted label.
const debate::Rationale& select_explanation(Label prediction, const debate::DebateRecord& debate) noexcept;

}  // namespace memejudge::evalkit
