#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace memejudge::prompts {

inline constexpr std::string_view kDefaultVersion = "v1";

// Template names shipped under resources/prompts/<version>/.
namespace names {
inline constexpr std::string_view debater = "debater";
inline constexpr std::string_view judge = "judge";
inline constexpr std::string_view text_debater_system = "text_debater_system";
inline constexpr std::string_view text_debater_user = "text_debater_user";
inline constexpr std::string_view text_judge_system = "text_judge_system";
inline constexpr std::string_view text_judge_user = "text_judge_user";
inline constexpr std::string_view quality_system = "quality_system";
inline constexpr std::string_view quality_user = "quality_user";
inline constexpr std::string_view caption = "caption";
inline constexpr std::string_view direct = "direct";
inline constexpr std::string_view direct_text = "direct_text";
}  // namespace names

struct SystemUser {
  std::string system;
  std::string user;
};

using Slots = std::vector<std::pair<std::string_view, std::string_view>>;

// Raw template text. Throws NotFoundError for unknown name/version.
std::string_view template_text(std::string_view name, std::string_view version = kDefaultVersion);

// "<version>/<name>": the prompt_version recorded on requests and cache keys.
std::string prompt_version(std::string_view name, std::string_view version = kDefaultVersion);

// Replaces every {{slot}} in one left-to-right pass; substituted text is never rescanned.
// Throws ValidationError when the template references a slot not supplied.
std::string render(std::string_view tmpl, const Slots& slots);

std::vector<std::string> available_templates();

namespace detail {
const std::vector<std::pair<std::string_view, std::string_view>>& embedded_templates();
}

}  // namespace memejudge::prompts
