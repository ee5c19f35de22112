#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memejudge/common/errors.hpp"
#include "memejudge/corpus/types.hpp"
#include "memejudge/llm/gateway.hpp"
#include "memejudge/prompts/templates.hpp"

namespace memejudge::debate {

// The two argued positions share the label vocabulary one-to-one.
using Stance = corpus::Label;

enum class DebateMode { vision, text_via_caption };
std::string_view to_string(DebateMode mode) noexcept;
DebateMode parse_debate_mode(std::string_view text);

struct Rationale {
  Stance stance = Stance::harmless;
  std::string text;
  std::string model_id;
  std::string prompt_version;
  std::string meme_id;

  bool operator==(const Rationale&) const = default;
};

// Always carries both positions for one meme.
class DebateRecord {
 public:
  DebateRecord(Rationale harmless, Rationale harmful);

  const std::string& meme_id() const noexcept { return harmless_.meme_id; }
  const Rationale& harmless() const noexcept { return harmless_; }
  const Rationale& harmful() const noexcept { return harmful_; }
  const Rationale& of(Stance stance) const noexcept { return stance == Stance::harmful ? harmful_ : harmless_; }

  bool operator==(const DebateRecord&) const = default;

 private:
  Rationale harmless_;
  Rationale harmful_;
};

struct CaptionRecord {
  std::string meme_id;
  std::string caption;
  std::string model_id;

  bool operator==(const CaptionRecord&) const = default;
};

class DebateError : public Error {
 public:
  DebateError(const std::string& what, std::string meme_id, std::optional<Stance> stance)
      : Error(what), meme_id_(std::move(meme_id)), stance_(stance) {}
  const std::string& meme_id() const noexcept { return meme_id_; }
  const std::optional<Stance>& stance() const noexcept { return stance_; }

 private:
  std::string meme_id_;
  std::optional<Stance> stance_;
};

std::string build_debater_prompt(const corpus::MemeRecord& meme, Stance stance,
                                 std::string_view version = prompts::kDefaultVersion);

prompts::SystemUser build_text_debater_prompt(const corpus::MemeRecord& meme, const CaptionRecord& caption,
                                              Stance stance, std::string_view version = prompts::kDefaultVersion);

// Reads the meme's image file; media type from the extension.
llm::ImagePayload image_payload(const corpus::Corpus& corpus, const corpus::MemeRecord& meme);

struct DebateSettings {
  std::string model_id = "mock-vlm";
  DebateMode mode = DebateMode::vision;
  std::string prompt_set = std::string(prompts::kDefaultVersion);
};

CaptionRecord caption_image(const corpus::Corpus& corpus, const corpus::MemeRecord& meme, llm::Gateway& gateway,
                            const DebateSettings& settings);

// Two completions, harmless first. In text mode `caption` is required.
DebateRecord run_debate(const corpus::Corpus& corpus, const corpus::MemeRecord& meme, llm::Gateway& gateway,
                        const DebateSettings& settings, const CaptionRecord* caption = nullptr);

struct DebateFailure {
  std::string meme_id;
  std::optional<Stance> stance;
  std::string message;
};

struct DebateBatch {
  std::vector<DebateRecord> records;  // input order, failed memes omitted
  std::vector<DebateFailure> failures;
};

// Debates memes concurrently on up to `workers` threads; output order follows input order.
DebateBatch run_debates(const corpus::Corpus& corpus, const std::vector<const corpus::MemeRecord*>& memes,
                        llm::Gateway& gateway, const DebateSettings& settings,
                        const std::map<std::string, CaptionRecord>& captions = {}, int workers = 1);

nlohmann::json to_json(const Rationale& r);
Rationale rationale_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DebateRecord& d);
DebateRecord debate_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CaptionRecord& c);
CaptionRecord caption_from_json(const nlohmann::json& j);

}  // namespace memejudge::debate
