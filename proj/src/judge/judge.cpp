#include "memejudge/judge/judge.hpp"

#include <cctype>
#include <vector>

#include "memejudge/common/io.hpp"

namespace memejudge::judge {

using corpus::MemeRecord;

std::string_view to_string(ParseStatus status) noexcept {
  switch (status) {
    case ParseStatus::parsed: return "parsed";
    case ParseStatus::ambiguous: return "ambiguous";
    case ParseStatus::failed: return "failed";
  }
  return "failed";
}

ParseStatus parse_status_from_string(std::string_view text) {
  if (text == "parsed") return ParseStatus::parsed;
  if (text == "ambiguous") return ParseStatus::ambiguous;
  if (text == "failed") return ParseStatus::failed;
  throw ValidationError("unknown parse status '" + std::string(text) + "'");
}

std::string build_judge_prompt(const MemeRecord& meme, const debate::DebateRecord& record, std::string_view version) {
  return prompts::render(prompts::template_text(prompts::names::judge, version),
                         {{"text", meme.text}, {"harmless", record.harmless().text}, {"harmful", record.harmful().text}});
}

prompts::SystemUser build_text_judge_prompt(const MemeRecord& meme, const debate::CaptionRecord* caption,
                                            const debate::DebateRecord& record, std::string_view version) {
  if (caption == nullptr) throw ValidationError("text judge prompt for '" + meme.id + "' requires a caption");
  return {std::string(prompts::template_text(prompts::names::text_judge_system, version)),
          prompts::render(prompts::template_text(prompts::names::text_judge_user, version),
                          {{"text", meme.text},
                           {"caption", caption->caption},
                           {"harmless", record.harmless().text},
                           {"harmful", record.harmful().text}})};
}

namespace {

struct Mention {
  Stance stance;
  std::size_t begin;
  std::size_t end;
};

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

std::vector<Mention> mentions(const std::string& lower, std::size_t begin, std::size_t end) {
  std::vector<Mention> out;
  for (std::size_t i = begin; i + 7 <= end; ++i) {
    if (lower.compare(i, 4, "harm") != 0) continue;
    std::optional<Stance> s;
    std::size_t len = 0;
    if (lower.compare(i, 7, "harmful") == 0) {
      s = Stance::harmful;
      len = 7;
    } else if (i + 8 <= end && lower.compare(i, 8, "harmless") == 0) {
      s = Stance::harmless;
      len = 8;
    }
    if (!s) continue;
    const bool left_ok = i == begin || !is_word_char(lower[i - 1]);
    const bool right_ok = i + len == end || !is_word_char(lower[i + len]);
    if (!left_ok || !right_ok) continue;
    Stance stance = *s;
    // "not harmful" reads as a harmless verdict, and vice versa.
    if (i >= begin + 4 && lower.compare(i - 4, 4, "not ") == 0 && (i - 4 == begin || !is_word_char(lower[i - 5]))) {
      stance = corpus::opposite(stance);
    }
    out.push_back({stance, i, i + len});
    i += len - 1;
  }
  return out;
}

bool is_alternative(const std::string& lower, const std::vector<Mention>& ms) {
  if (ms.size() != 2 || ms[0].stance == ms[1].stance) return false;
  const std::string between = trim(std::string_view(lower).substr(ms[0].end, ms[1].begin - ms[0].end));
  return between == "or";
}

}  // namespace

PreferenceParse parse_preference(std::string_view raw) {
  const std::string lower = to_lower(raw);
  std::vector<std::pair<std::size_t, std::size_t>> sentences;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= lower.size(); ++i) {
    if (i == lower.size() || lower[i] == '.' || lower[i] == '!' || lower[i] == '?' || lower[i] == '\n') {
      if (i > start) sentences.emplace_back(start, i);
      start = i + 1;
    }
  }
  for (auto it = sentences.rbegin(); it != sentences.rend(); ++it) {
    const auto ms = mentions(lower, it->first, it->second);
    if (ms.empty()) continue;
    if (is_alternative(lower, ms)) return {std::nullopt, ParseStatus::ambiguous};
    return {ms.back().stance, ParseStatus::parsed};
  }
  return {std::nullopt, ParseStatus::failed};
}

namespace {

JudgePreference run_judge(const MemeRecord& meme, llm::Gateway& gateway, llm::ChatRequest req) {
  JudgePreference pref;
  pref.meme_id = meme.id;
  pref.model_id = req.model_id;
  try {
    pref.raw = gateway.complete(req).text;
  } catch (const llm::RefusalError& e) {
    pref.raw = e.raw();
    pref.status = ParseStatus::failed;
    return pref;
  }
  const auto parsed = parse_preference(pref.raw);
  pref.status = parsed.status;
  pref.preferred = parsed.status == ParseStatus::parsed ? parsed.stance : std::nullopt;
  return pref;
}

}  // namespace

JudgePreference adjudicate(const corpus::Corpus& corpus, const MemeRecord& meme, const debate::DebateRecord& record,
                           llm::Gateway& gateway, const debate::DebateSettings& settings,
                           const debate::CaptionRecord* caption) {
  if (record.meme_id() != meme.id) {
    throw ValidationError("adjudicate: debate for '" + record.meme_id() + "' passed for meme '" + meme.id + "'");
  }
  llm::ChatRequest req;
  req.model_id = settings.model_id;
  if (settings.mode == debate::DebateMode::vision) {
    req.user = build_judge_prompt(meme, record, settings.prompt_set);
    req.image = debate::image_payload(corpus, meme);
    req.prompt_version = prompts::prompt_version(prompts::names::judge, settings.prompt_set);
  } else {
    auto p = build_text_judge_prompt(meme, caption, record, settings.prompt_set);
    req.system = std::move(p.system);
    req.user = std::move(p.user);
    req.prompt_version = prompts::prompt_version(prompts::names::text_judge_user, settings.prompt_set);
  }
  return run_judge(meme, gateway, std::move(req));
}

JudgePreference ask_directly(const corpus::Corpus& corpus, const MemeRecord& meme, llm::Gateway& gateway,
                             const debate::DebateSettings& settings, const debate::CaptionRecord* caption) {
  llm::ChatRequest req;
  req.model_id = settings.model_id;
  if (settings.mode == debate::DebateMode::vision) {
    req.user = std::string(prompts::template_text(prompts::names::direct, settings.prompt_set));
    req.image = debate::image_payload(corpus, meme);
    req.prompt_version = prompts::prompt_version(prompts::names::direct, settings.prompt_set);
  } else {
    if (caption == nullptr) throw ValidationError("direct text prompt for '" + meme.id + "' requires a caption");
    req.user = prompts::render(prompts::template_text(prompts::names::direct_text, settings.prompt_set),
                               {{"text", meme.text}, {"caption", caption->caption}});
    req.prompt_version = prompts::prompt_version(prompts::names::direct_text, settings.prompt_set);
  }
  return run_judge(meme, gateway, std::move(req));
}

nlohmann::json to_json(const JudgePreference& p) {
  return {{"meme_id", p.meme_id},
          {"preferred", p.preferred ? nlohmann::json(corpus::to_string(*p.preferred)) : nlohmann::json(nullptr)},
          {"raw", p.raw},
          {"parse_status", to_string(p.status)},
          {"model_id", p.model_id}};
}

JudgePreference preference_from_json(const nlohmann::json& j) {
  JudgePreference p;
  p.meme_id = j.at("meme_id").get<std::string>();
  if (!j.at("preferred").is_null()) p.preferred = corpus::parse_label(j.at("preferred").get<std::string>());
  p.raw = j.at("raw").get<std::string>();
  p.status = parse_status_from_string(j.at("parse_status").get<std::string>());
  p.model_id = j.at("model_id").get<std::string>();
  if (p.preferred.has_value() != (p.status == ParseStatus::parsed)) {
    throw ValidationError("preference for '" + p.meme_id + "': preferred must be present iff parse_status is parsed");
  }
  return p;
}

}  // namespace memejudge::judge
