#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "memejudge/debate/debate.hpp"

namespace memejudge::judge {

using debate::Stance;

enum class ParseStatus { parsed, ambiguous, failed };
std::string_view to_string(ParseStatus status) noexcept;
ParseStatus parse_status_from_string(std::string_view text);

struct JudgePreference {
  std::string meme_id;
  std::optional<Stance> preferred;  // present iff status == parsed
  std::string raw;
  ParseStatus status = ParseStatus::failed;
  std::string model_id;

  bool operator==(const JudgePreference&) const = default;
};

struct PreferenceParse {
  std::optional<Stance> stance;
  ParseStatus status = ParseStatus::failed;
};

std::string build_judge_prompt(const corpus::MemeRecord& meme, const debate::DebateRecord& record,
                               std::string_view version = prompts::kDefaultVersion);

// Throws ValidationError when `caption` is null.
prompts::SystemUser build_text_judge_prompt(const corpus::MemeRecord& meme, const debate::CaptionRecord* caption,
                                            const debate::DebateRecord& record,
                                            std::string_view version = prompts::kDefaultVersion);

// Verdict extraction. Sentences end at '.', '!', '?' or a newline. Within the last sentence
// that mentions a label word (whole word, case-insensitive) the verdict is the last label
// occurrence. "not harmful"/"not harmless" count as the opposite label. A final sentence
// whose only label mentions are an "X or Y" alternative (a restated question) is ambiguous.
// No label word anywhere: failed.
PreferenceParse parse_preference(std::string_view raw);

// One judge completion; refusals become a failed preference carrying the refusal text.
JudgePreference adjudicate(const corpus::Corpus& corpus, const corpus::MemeRecord& meme,
                           const debate::DebateRecord& record, llm::Gateway& gateway,
                           const debate::DebateSettings& settings, const debate::CaptionRecord* caption = nullptr);

// Direct question without debate rationales (the LLM-only baseline).
JudgePreference ask_directly(const corpus::Corpus& corpus, const corpus::MemeRecord& meme, llm::Gateway& gateway,
                             const debate::DebateSettings& settings, const debate::CaptionRecord* caption = nullptr);

nlohmann::json to_json(const JudgePreference& p);
JudgePreference preference_from_json(const nlohmann::json& j);

}  // namespace memejudge::judge
