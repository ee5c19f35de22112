#include "memejudge/evalkit/quality.hpp"

#include <cctype>
#include <regex>

#include "memejudge/common/errors.hpp"
#include "memejudge/common/io.hpp"

namespace memejudge::evalkit {

namespace {

struct CriterionName {
  Criterion c;
  std::string_view key;
  std::string_view display;
};

constexpr CriterionName kNames[] = {{Criterion::informativeness, "informativeness", "Informativeness"},
                                    {Criterion::readability, "readability", "Readability"},
                                    {Criterion::soundness, "soundness", "Soundness"},
                                    {Criterion::conciseness, "conciseness", "Conciseness"},
                                    {Criterion::persuasiveness, "persuasiveness", "Persuasiveness"}};

constexpr std::string_view kCountWords[] = {"zero", "one", "two", "three"};

struct IntToken {
  long value;
  bool marker;  // followed by ')'
};

std::vector<IntToken> integers(std::string_view raw) {
  std::vector<IntToken> out;
  for (std::size_t i = 0; i < raw.size();) {
    if (!std::isdigit(static_cast<unsigned char>(raw[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    long v = 0;
    while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) {
      v = std::min(v * 10 + (raw[j] - '0'), 1000000L);
      ++j;
    }
    out.push_back({v, j < raw.size() && raw[j] == ')'});
    i = j;
  }
  return out;
}

}  // namespace

std::string_view to_string(Criterion c) noexcept {
  for (const auto& n : kNames) {
    if (n.c == c) return n.key;
  }
  return "informativeness";
}

std::string_view display_name(Criterion c) noexcept {
  for (const auto& n : kNames) {
    if (n.c == c) return n.display;
  }
  return "Informativeness";
}

Criterion parse_criterion(std::string_view text) {
  const std::string lower = to_lower(text);
  for (const auto& n : kNames) {
    if (n.key == lower) return n.c;
  }
  throw ValidationError("unknown criterion '" + std::string(text) + "'");
}

std::string_view to_string(Rater r) noexcept { return r == Rater::llm ? "llm" : "human"; }

Rater parse_rater(std::string_view text) {
  if (text == "llm") return Rater::llm;
  if (text == "human") return Rater::human;
  throw ValidationError("unknown rater '" + std::string(text) + "'");
}

std::vector<std::string> ExplanationScores::problems() const {
  std::vector<std::string> out;
  if (explanation_id.empty()) out.push_back("explanation_id: must be non-empty");
  for (Criterion c : kCriteria) {
    auto it = scores.find(c);
    if (it == scores.end()) out.push_back("scores." + std::string(to_string(c)) + ": missing");
    else if (it->second < 1 || it->second > 5) out.push_back("scores." + std::string(to_string(c)) + ": must be 1..5");
  }
  return out;
}

nlohmann::json to_json(const ExplanationScores& s) {
  nlohmann::json scores = nlohmann::json::object();
  for (const auto& [c, v] : s.scores) scores[std::string(to_string(c))] = v;
  return {{"explanation_id", s.explanation_id}, {"meme_id", s.meme_id},          {"source", s.source},
          {"scores", scores},                   {"rater", to_string(s.rater)},  {"rater_id", s.rater_id}};
}

ExplanationScores explanation_scores_from_json(const nlohmann::json& j) {
  ExplanationScores s;
  s.explanation_id = j.at("explanation_id").get<std::string>();
  s.meme_id = j.value("meme_id", std::string());
  s.source = j.value("source", std::string());
  s.rater = parse_rater(j.at("rater").get<std::string>());
  s.rater_id = j.value("rater_id", std::string());
  for (const auto& [key, v] : j.at("scores").items()) {
    if (!v.is_number_integer()) throw ValidationError("scores." + key + ": must be an integer");
    s.scores[parse_criterion(key)] = v.get<int>();
  }
  auto p = s.problems();
  if (!p.empty()) throw ValidationError("explanation scores '" + s.explanation_id + "': " + p.front());
  return s;
}

prompts::SystemUser build_quality_prompt(const corpus::MemeRecord& meme, const debate::CaptionRecord& caption,
                                         std::span<const std::string> explanations, Criterion criterion,
                                         corpus::Label label, std::string_view version) {
  if (explanations.size() < 2 || explanations.size() > 3) {
    throw ValidationError("quality prompt takes 2 or 3 explanations, got " + std::to_string(explanations.size()));
  }
  std::string listed;
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    if (i) listed += "; ";
    listed += std::to_string(i + 1) + ") [" + explanations[i] + "]";
  }
  const std::string count(kCountWords[explanations.size()]);
  return {std::string(prompts::template_text(prompts::names::quality_system, version)),
          prompts::render(prompts::template_text(prompts::names::quality_user, version),
                          {{"text", meme.text},
                           {"caption", caption.caption},
                           {"label", corpus::to_string(label)},
                           {"count", count},
                           {"criterion", display_name(criterion)},
                           {"explanations", listed}})};
}

std::vector<int> parse_quality_scores(std::string_view raw, std::size_t k, bool strict) {
  const std::string raw_s(raw);
  if (strict) {
    static const std::regex shape(R"(^\s*1\)\s*\d+(\s*[;,]?\s*\d+\)\s*\d+)*\s*\.?\s*$)");
    if (!std::regex_match(raw_s, shape)) throw ParseError("quality scores: unexpected response shape", raw_s);
  }
  const auto ints = integers(raw);
  std::vector<long> picked;
  bool has_markers = false;
  for (const auto& t : ints) has_markers = has_markers || (t.marker && t.value == 1);
  if (has_markers) {
    std::size_t pos = 0;
    for (long expect = 1; picked.size() < k; ++expect) {
      std::size_t i = pos;
      while (i < ints.size() && !(ints[i].marker && ints[i].value == expect)) ++i;
      if (i + 1 >= ints.size()) break;
      const IntToken& next = ints[i + 1];
      if (next.marker && next.value == expect + 1) break;
      picked.push_back(next.value);
      pos = i + 2;
    }
  } else {
    for (std::size_t i = 0; i < ints.size() && picked.size() < k; ++i) picked.push_back(ints[i].value);
  }
  if (picked.size() < k) {
    throw ParseError("quality scores: found " + std::to_string(picked.size()) + " of " + std::to_string(k) + " scores",
                     raw_s);
  }
  std::vector<int> out;
  for (long v : picked) {
    if (v < 1 || v > 5) throw ParseError("quality scores: " + std::to_string(v) + " is outside 1..5", raw_s);
    out.push_back(static_cast<int>(v));
  }
  return out;
}

std::vector<ExplanationScores> score_explanations(const corpus::MemeRecord& meme, const debate::CaptionRecord& caption,
                                                  std::span<const QualityCandidate> candidates, llm::Gateway& gateway,
                                                  const std::string& model_id, corpus::Label label, bool strict) {
  std::vector<std::string> texts;
  for (const auto& c : candidates) texts.push_back(c.text);
  std::vector<ExplanationScores> out;
  for (const auto& c : candidates) {
    ExplanationScores s;
    s.explanation_id = meme.id + ":" + c.source;
    s.meme_id = meme.id;
    s.source = c.source;
    s.rater = Rater::llm;
    s.rater_id = model_id;
    out.push_back(std::move(s));
  }
  for (Criterion crit : kCriteria) {
    auto prompt = build_quality_prompt(meme, caption, texts, crit, label);
    llm::ChatRequest req;
    req.system = std::move(prompt.system);
    req.user = std::move(prompt.user);
    req.model_id = model_id;
    req.prompt_version = prompts::prompt_version(prompts::names::quality_user);
    const auto res = gateway.complete(req);
    const auto scores = parse_quality_scores(res.text, candidates.size(), strict);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].scores[crit] = scores[i];
  }
  return out;
}

std::vector<ScoreSummary> aggregate_scores(std::span<const ExplanationScores> scores) {
  std::map<std::pair<Rater, std::string>, std::pair<std::size_t, std::map<Criterion, double>>> acc;
  for (const auto& s : scores) {
    auto& [n, sums] = acc[{s.rater, s.source}];
    ++n;
    for (const auto& [c, v] : s.scores) sums[c] += v;
  }
  std::vector<ScoreSummary> out;
  for (const auto& [key, val] : acc) {
    ScoreSummary row{key.first, key.second, val.first, {}};
    for (const auto& [c, sum] : val.second) row.means[c] = sum / static_cast<double>(val.first);
    out.push_back(std::move(row));
  }
  return out;
}

nlohmann::json to_json(const ScoreSummary& s) {
  nlohmann::json means = nlohmann::json::object();
  for (const auto& [c, v] : s.means) means[std::string(to_string(c))] = v;
  return {{"rater", to_string(s.rater)}, {"source", s.source}, {"n", s.n}, {"means", means}};
}

std::vector<ExplanationScores> read_human_ratings(const std::filesystem::path& path) {
  std::vector<ExplanationScores> out;
  std::size_t line = 0;
  for (const auto& row : read_jsonl(path)) {
    ++line;
    try {
      auto s = explanation_scores_from_json(row);
      if (s.rater != Rater::human) throw ValidationError("rater must be \"human\"");
      out.push_back(std::move(s));
    } catch (const std::exception& e) {
      throw ValidationError(path.string() + ": record " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace memejudge::evalkit
