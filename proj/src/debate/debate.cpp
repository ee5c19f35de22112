#include "memejudge/debate/debate.hpp"

#include <spdlog/spdlog.h>

#include "memejudge/common/io.hpp"
#include "memejudge/common/parallel.hpp"

namespace memejudge::debate {

using corpus::MemeRecord;

std::string_view to_string(DebateMode mode) noexcept {
  return mode == DebateMode::vision ? "vision" : "text-via-caption";
}

DebateMode parse_debate_mode(std::string_view text) {
  if (text == "vision") return DebateMode::vision;
  if (text == "text-via-caption") return DebateMode::text_via_caption;
  throw ValidationError("unknown debate mode '" + std::string(text) + "'");
}

DebateRecord::DebateRecord(Rationale harmless, Rationale harmful)
    : harmless_(std::move(harmless)), harmful_(std::move(harmful)) {
  if (harmless_.stance != Stance::harmless || harmful_.stance != Stance::harmful) {
    throw ValidationError("debate record: rationale stances are swapped");
  }
  if (harmless_.meme_id != harmful_.meme_id) {
    throw ValidationError("debate record: rationales reference different memes ('" + harmless_.meme_id +
                          "' vs '" + harmful_.meme_id + "')");
  }
  if (harmless_.text.empty() || harmful_.text.empty()) {
    throw ValidationError("debate record for '" + harmless_.meme_id + "': empty rationale text");
  }
}

std::string build_debater_prompt(const MemeRecord& meme, Stance stance, std::string_view version) {
  if (meme.text.empty()) spdlog::warn("debate: meme '{}' has empty text", meme.id);
  return prompts::render(prompts::template_text(prompts::names::debater, version),
                         {{"text", meme.text}, {"stance", corpus::to_string(stance)}});
}

prompts::SystemUser build_text_debater_prompt(const MemeRecord& meme, const CaptionRecord& caption, Stance stance,
                                              std::string_view version) {
  return {std::string(prompts::template_text(prompts::names::text_debater_system, version)),
          prompts::render(prompts::template_text(prompts::names::text_debater_user, version),
                          {{"text", meme.text}, {"caption", caption.caption}, {"stance", corpus::to_string(stance)}})};
}

llm::ImagePayload image_payload(const corpus::Corpus& corpus, const MemeRecord& meme) {
  const fs::path path = corpus.image_path(meme);
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_binary_file(path);
  } catch (const NotFoundError&) {
    throw DebateError("meme '" + meme.id + "': cannot read image " + path.string(), meme.id, std::nullopt);
  }
  if (bytes.empty()) throw DebateError("meme '" + meme.id + "': empty image file", meme.id, std::nullopt);
  const std::string ext = to_lower(path.extension().string());
  std::string media = "image/png";
  if (ext == ".jpg" || ext == ".jpeg") media = "image/jpeg";
  else if (ext == ".webp") media = "image/webp";
  else if (ext == ".gif") media = "image/gif";
  return llm::ImagePayload(std::move(bytes), std::move(media));
}

CaptionRecord caption_image(const corpus::Corpus& corpus, const MemeRecord& meme, llm::Gateway& gateway,
                            const DebateSettings& settings) {
  llm::ChatRequest req;
  req.user = std::string(prompts::template_text(prompts::names::caption, settings.prompt_set));
  req.image = image_payload(corpus, meme);
  req.model_id = settings.model_id;
  req.prompt_version = prompts::prompt_version(prompts::names::caption, settings.prompt_set);
  llm::ChatResponse res;
  try {
    res = gateway.complete(req);
  } catch (const llm::RefusalError& e) {
    throw DebateError("meme '" + meme.id + "': captioning refused: " + e.raw(), meme.id, std::nullopt);
  }
  if (res.text.empty()) throw DebateError("meme '" + meme.id + "': empty caption", meme.id, std::nullopt);
  return CaptionRecord{meme.id, res.text, res.model_id};
}

namespace {

Rationale argue(const corpus::Corpus& corpus, const MemeRecord& meme, llm::Gateway& gateway,
                const DebateSettings& settings, const CaptionRecord* caption, Stance stance) {
  llm::ChatRequest req;
  req.model_id = settings.model_id;
  if (settings.mode == DebateMode::vision) {
    req.user = build_debater_prompt(meme, stance, settings.prompt_set);
    req.image = image_payload(corpus, meme);
    req.prompt_version = prompts::prompt_version(prompts::names::debater, settings.prompt_set);
  } else {
    if (caption == nullptr) {
      throw DebateError("meme '" + meme.id + "': text-via-caption debate requires a caption", meme.id, stance);
    }
    auto p = build_text_debater_prompt(meme, *caption, stance, settings.prompt_set);
    req.system = std::move(p.system);
    req.user = std::move(p.user);
    req.prompt_version = prompts::prompt_version(prompts::names::text_debater_user, settings.prompt_set);
  }
  llm::ChatResponse res;
  try {
    res = gateway.complete(req);
  } catch (const llm::RefusalError& e) {
    throw DebateError("meme '" + meme.id + "': " + std::string(corpus::to_string(stance)) +
                          " debater refused: " + e.raw(),
                      meme.id, stance);
  }
  if (res.text.empty()) {
    throw DebateError("meme '" + meme.id + "': " + std::string(corpus::to_string(stance)) +
                          " debater returned empty output",
                      meme.id, stance);
  }
  return Rationale{stance, res.text, res.model_id, req.prompt_version, meme.id};
}

}  // namespace

DebateRecord run_debate(const corpus::Corpus& corpus, const MemeRecord& meme, llm::Gateway& gateway,
                        const DebateSettings& settings, const CaptionRecord* caption) {
  Rationale harmless = argue(corpus, meme, gateway, settings, caption, Stance::harmless);
  Rationale harmful = argue(corpus, meme, gateway, settings, caption, Stance::harmful);
  return DebateRecord(std::move(harmless), std::move(harmful));
}

DebateBatch run_debates(const corpus::Corpus& corpus, const std::vector<const MemeRecord*>& memes,
                        llm::Gateway& gateway, const DebateSettings& settings,
                        const std::map<std::string, CaptionRecord>& captions, int workers) {
  std::vector<std::optional<DebateRecord>> slots(memes.size());
  std::vector<std::optional<DebateFailure>> failed(memes.size());
  parallel_for(memes.size(), workers, [&](std::size_t i) {
    const MemeRecord& meme = *memes[i];
    const CaptionRecord* caption = nullptr;
    if (auto it = captions.find(meme.id); it != captions.end()) caption = &it->second;
    try {
      slots[i] = run_debate(corpus, meme, gateway, settings, caption);
    } catch (const DebateError& e) {
      failed[i] = DebateFailure{meme.id, e.stance(), e.what()};
    }
  });
  DebateBatch out;
  for (std::size_t i = 0; i < memes.size(); ++i) {
    if (slots[i]) out.records.push_back(std::move(*slots[i]));
    if (failed[i]) out.failures.push_back(std::move(*failed[i]));
  }
  return out;
}

nlohmann::json to_json(const Rationale& r) {
  return {{"stance", corpus::to_string(r.stance)},
          {"text", r.text},
          {"model_id", r.model_id},
          {"prompt_version", r.prompt_version},
          {"meme_id", r.meme_id}};
}

Rationale rationale_from_json(const nlohmann::json& j) {
  return Rationale{corpus::parse_label(j.at("stance").get<std::string>()), j.at("text").get<std::string>(),
                   j.at("model_id").get<std::string>(), j.at("prompt_version").get<std::string>(),
                   j.at("meme_id").get<std::string>()};
}

nlohmann::json to_json(const DebateRecord& d) {
  return {{"meme_id", d.meme_id()}, {"harmless", to_json(d.harmless())}, {"harmful", to_json(d.harmful())}};
}

DebateRecord debate_from_json(const nlohmann::json& j) {
  return DebateRecord(rationale_from_json(j.at("harmless")), rationale_from_json(j.at("harmful")));
}

nlohmann::json to_json(const CaptionRecord& c) {
  return {{"meme_id", c.meme_id}, {"caption", c.caption}, {"model_id", c.model_id}};
}

CaptionRecord caption_from_json(const nlohmann::json& j) {
  CaptionRecord c{j.at("meme_id").get<std::string>(), j.at("caption").get<std::string>(),
                  j.at("model_id").get<std::string>()};
  if (c.caption.empty()) throw ValidationError("caption record for '" + c.meme_id + "' is empty");
  return c;
}

}  // namespace memejudge::debate
