#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "memejudge/debate/debate.hpp"
#include "memejudge/fusion/tokenizer.hpp"
#include "memejudge/judge/judge.hpp"

namespace memejudge::fusion {

using debate::Stance;

enum class OrderSource { fixed, judge };
std::string_view to_string(OrderSource source) noexcept;

struct OrderedContext {
  std::string meme_id;
  std::vector<std::string> segments;  // [meme text, first rationale, second rationale]
  Stance first_stance = Stance::harmless;
  OrderSource order_source = OrderSource::fixed;
};

// Fixed order [T, r_hl, r_hf] unless the preference parsed, in which case the preferred
// rationale goes first.
OrderedContext order_context(std::string_view meme_text, const debate::DebateRecord& debate,
                             const judge::JudgePreference* preference);

// Meme text plus its optional annotation, as fed to the model.
std::string model_text(const corpus::MemeRecord& meme);

struct Segment {
  std::string prefix;  // e.g. "Text:"
  std::string text;
};

// Segments in model order. The first segment is never truncated.
struct ModelInput {
  std::string meme_id;
  std::vector<Segment> segments;
};

inline constexpr std::string_view kSegmentSeparator = " \n ";

ModelInput to_model_input(const OrderedContext& ctx);

// Which pieces of the debate reach the small model.
enum class ContextLayout { judge_ordered, fixed_order, meme_only, harmful_only, harmless_only, preferred_only };

// `caption` (may be null) is appended as a "Caption:" segment right after the meme text.
// preferred_only falls back to the harmless rationale when the preference did not parse.
ModelInput build_model_input(const corpus::MemeRecord& meme, const debate::DebateRecord* debate,
                             const judge::JudgePreference* preference, ContextLayout layout,
                             const debate::CaptionRecord* caption = nullptr);

// Segments are joined with kSegmentSeparator and terminated with EOS. When the result exceeds
// `max_tokens`, text tokens are removed from the tail of the last segment, then the one before
// it, never from the first. Throws ValidationError when the first segment alone does not fit.
std::vector<int> tokenize_input(const ModelInput& input, const WordHashTokenizer& tokenizer, int max_tokens);

std::vector<int> tokenize_context(const OrderedContext& ctx, const WordHashTokenizer& tokenizer, int max_tokens);

}  // namespace memejudge::fusion
