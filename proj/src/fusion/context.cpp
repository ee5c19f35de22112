#include "memejudge/fusion/context.hpp"

#include <numeric>

#include "memejudge/common/errors.hpp"

namespace memejudge::fusion {

std::string_view to_string(OrderSource source) noexcept { return source == OrderSource::fixed ? "fixed" : "judge"; }

OrderedContext order_context(std::string_view meme_text, const debate::DebateRecord& debate,
                             const judge::JudgePreference* preference) {
  OrderedContext ctx;
  ctx.meme_id = debate.meme_id();
  Stance first = Stance::harmless;
  if (preference != nullptr && preference->status == judge::ParseStatus::parsed && preference->preferred) {
    first = *preference->preferred;
    ctx.order_source = OrderSource::judge;
  }
  ctx.first_stance = first;
  ctx.segments = {std::string(meme_text), debate.of(first).text, debate.of(corpus::opposite(first)).text};
  return ctx;
}

std::string model_text(const corpus::MemeRecord& meme) {
  if (meme.annotation && !meme.annotation->empty()) return meme.text + " " + *meme.annotation;
  return meme.text;
}

ModelInput to_model_input(const OrderedContext& ctx) {
  if (ctx.segments.size() != 3) throw ValidationError("ordered context must have exactly three segments");
  return ModelInput{ctx.meme_id,
                    {{"Text:", ctx.segments[0]}, {"Rationale A:", ctx.segments[1]}, {"Rationale B:", ctx.segments[2]}}};
}

ModelInput build_model_input(const corpus::MemeRecord& meme, const debate::DebateRecord* debate,
                             const judge::JudgePreference* preference, ContextLayout layout,
                             const debate::CaptionRecord* caption) {
  ModelInput in{meme.id, {{"Text:", model_text(meme)}}};
  if (caption != nullptr) in.segments.push_back({"Caption:", caption->caption});
  if (layout == ContextLayout::meme_only) return in;
  if (debate == nullptr) throw ValidationError("meme '" + meme.id + "': context layout requires a debate record");
  switch (layout) {
    case ContextLayout::judge_ordered:
    case ContextLayout::fixed_order: {
      auto ctx = order_context(in.segments[0].text, *debate,
                               layout == ContextLayout::judge_ordered ? preference : nullptr);
      in.segments.push_back({"Rationale A:", ctx.segments[1]});
      in.segments.push_back({"Rationale B:", ctx.segments[2]});
      break;
    }
    case ContextLayout::harmful_only:
      in.segments.push_back({"Rationale A:", debate->harmful().text});
      break;
    case ContextLayout::harmless_only:
      in.segments.push_back({"Rationale A:", debate->harmless().text});
      break;
    case ContextLayout::preferred_only: {
      Stance s = Stance::harmless;
      if (preference != nullptr && preference->status == judge::ParseStatus::parsed && preference->preferred) {
        s = *preference->preferred;
      }
      in.segments.push_back({"Rationale A:", debate->of(s).text});
      break;
    }
    case ContextLayout::meme_only: break;
  }
  return in;
}

std::vector<int> tokenize_input(const ModelInput& input, const WordHashTokenizer& tokenizer, int max_tokens) {
  if (input.segments.empty()) throw ValidationError("model input for '" + input.meme_id + "' has no segments");
  const std::vector<int> sep = tokenizer.encode(kSegmentSeparator);
  std::vector<std::vector<int>> prefixes;
  std::vector<std::vector<int>> bodies;
  for (const auto& s : input.segments) {
    prefixes.push_back(tokenizer.encode(s.prefix));
    bodies.push_back(tokenizer.encode(s.text));
  }
  auto total = [&] {
    std::size_t n = 1;  // EOS
    for (std::size_t i = 0; i < bodies.size(); ++i) n += prefixes[i].size() + bodies[i].size();
    return n + sep.size() * (bodies.size() - 1);
  };
  const auto limit = static_cast<std::size_t>(max_tokens);
  for (std::size_t i = bodies.size(); i-- > 1 && total() > limit;) {
    const std::size_t excess = total() - limit;
    bodies[i].resize(bodies[i].size() - std::min(excess, bodies[i].size()));
  }
  if (total() > limit) {
    throw ValidationError("meme '" + input.meme_id + "': meme text needs " + std::to_string(total()) +
                          " tokens, over the limit of " + std::to_string(max_tokens));
  }
  std::vector<int> ids;
  ids.reserve(total());
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    if (i > 0) ids.insert(ids.end(), sep.begin(), sep.end());
    ids.insert(ids.end(), prefixes[i].begin(), prefixes[i].end());
    ids.insert(ids.end(), bodies[i].begin(), bodies[i].end());
  }
  ids.push_back(WordHashTokenizer::kEos);
  return ids;
}

std::vector<int> tokenize_context(const OrderedContext& ctx, const WordHashTokenizer& tokenizer, int max_tokens) {
  return tokenize_input(to_model_input(ctx), tokenizer, max_tokens);
}

}  // namespace memejudge::fusion
