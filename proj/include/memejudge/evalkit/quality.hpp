#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memejudge/debate/debate.hpp"
#include "memejudge/llm/gateway.hpp"
#include "memejudge/prompts/templates.hpp"

namespace memejudge::evalkit {

enum class Criterion { informativeness, readability, soundness, conciseness, persuasiveness };
inline constexpr std::array<Criterion, 5> kCriteria = {Criterion::informativeness, Criterion::readability,
                                                       Criterion::soundness, Criterion::conciseness,
                                                       Criterion::persuasiveness};
std::string_view to_string(Criterion c) noexcept;  // lowercase key
std::string_view display_name(Criterion c) noexcept;  // as written in the prompt
Criterion parse_criterion(std::string_view text);

enum class Rater { llm, human };
std::string_view to_string(Rater r) noexcept;
Rater parse_rater(std::string_view text);

struct ExplanationScores {
  std::string explanation_id;
  std::string meme_id;
  std::string source;  // which generator produced the explanation
  std::map<Criterion, int> scores;
  Rater rater = Rater::llm;
  std::string rater_id;

  // Every criterion present with an integer in 1..5.
  std::vector<std::string> problems() const;
  bool operator==(const ExplanationScores&) const = default;
};

nlohmann::json to_json(const ExplanationScores& s);
ExplanationScores explanation_scores_from_json(const nlohmann::json& j);

// Candidate explanations are numbered "1) [..]; 2) [..]" in the order given. Requires 2 or 3.
prompts::SystemUser build_quality_prompt(const corpus::MemeRecord& meme, const debate::CaptionRecord& caption,
                                         std::span<const std::string> explanations, Criterion criterion,
                                         corpus::Label label = corpus::Label::harmful,
                                         std::string_view version = prompts::kDefaultVersion);

// With numbered markers ("1)", "2)", ...) the score for slot j is the first integer after marker j;
// without markers the first k integers in the text are taken. Strict mode accepts only
// "1) a 2) b ..." with optional ';' or ',' separators. Throws ParseError (raw retained) on fewer
// than k scores or any score outside 1..5.
std::vector<int> parse_quality_scores(std::string_view raw, std::size_t k, bool strict = false);

struct QualityCandidate {
  std::string source;
  std::string text;
};

// One completion per criterion; returns one record per candidate.
std::vector<ExplanationScores> score_explanations(const corpus::MemeRecord& meme, const debate::CaptionRecord& caption,
                                                  std::span<const QualityCandidate> candidates, llm::Gateway& gateway,
                                                  const std::string& model_id, corpus::Label label,
                                                  bool strict = false);

struct ScoreSummary {
  Rater rater = Rater::llm;
  std::string source;
  std::size_t n = 0;
  std::map<Criterion, double> means;
};

// Arithmetic means per (rater class, source), ordered by rater then source.
std::vector<ScoreSummary> aggregate_scores(std::span<const ExplanationScores> scores);
nlohmann::json to_json(const ScoreSummary& s);

// JSON Lines of ExplanationScores with rater "human". Throws ValidationError naming the line.
std::vector<ExplanationScores> read_human_ratings(const std::filesystem::path& path);

}  // namespace memejudge::evalkit
