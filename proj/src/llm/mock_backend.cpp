#include <algorithm>
#include <array>

#include <fmt/format.h>

#include "memejudge/common/hashing.hpp"
#include "memejudge/common/io.hpp"
#include "memejudge/llm/backend.hpp"

namespace memejudge::llm {

namespace {

constexpr std::array kHarmfulAngles = {
    "a mocking jab that singles out a group for ridicule",
    "a stereotype dressed up as a joke",
    "an insinuation that invites hostility toward its target",
    "a dismissive framing that trivializes real suffering"};
constexpr std::array kHarmfulEffects = {"contempt", "mistrust", "harassment", "division"};
constexpr std::array kHarmlessAngles = {
    "an everyday observation shared for a laugh",
    "light self-deprecating humor",
    "a playful exaggeration with no clear target",
    "a familiar situation most viewers relate to"};
constexpr std::array kHarmlessEffects = {"amusement", "recognition", "nostalgia", "friendly banter"};
constexpr std::array kObjects = {"a person at a desk", "a crowd outdoors", "a cartoon animal",
                                 "a city street", "a close-up face", "a screenshot of a chat",
                                 "a flag", "a plate of food"};
constexpr std::array kScenes = {"in bright daylight", "in a dim room", "against a plain backdrop",
                                "with bold overlaid letters"};

std::string slot_after(const std::string& user, std::string_view marker) {
  auto b = user.find(marker);
  if (b == std::string::npos) return {};
  b += marker.size();
  auto e = user.find(']', b);
  return user.substr(b, e == std::string::npos ? std::string::npos : e - b);
}

std::string snippet(const std::string& text) {
  std::string out;
  int words = 0;
  bool in_word = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\n' || c == '\t';
    if (!space && !in_word && ++words > 8) break;
    in_word = !space;
    out.push_back(space ? ' ' : c);
  }
  return trim(out);
}

std::size_t count_numbered_slots(const std::string& user) {
  std::size_t k = 0;
  while (user.find(std::to_string(k + 1) + ") [") != std::string::npos) ++k;
  return k;
}

}  // namespace

void MockBackend::script(std::string needle, std::string response) {
  script_.emplace_back(std::move(needle), std::move(response));
}

void MockBackend::clear_script() { script_.clear(); }

std::string MockBackend::complete(const ChatRequest& request) {
  ++calls_;
  for (const auto& [needle, response] : script_) {
    if (request.user.find(needle) != std::string::npos) return response;
  }
  return templated_response(request);
}

std::string MockBackend::templated_response(const ChatRequest& request) {
  Sha256 h;
  h.field(request.system.value_or(""));
  h.field(request.user);
  h.field(request.image ? request.image->digest() : "");
  const std::string digest = h.hex_digest();
  const std::uint64_t seed = fnv1a64(digest);
  auto pick = [&](std::size_t n, int salt) { return static_cast<std::size_t>((seed >> (salt * 7)) % n); };

  const std::string& user = request.user;
  std::string meme_text = slot_after(user, "Text: [");
  const std::string quoted = snippet(meme_text);

  if (user.find("reasoned as [harmful]") != std::string::npos) {
    return fmt::format(
        "Read from the harmful side, the words \"{}\" paired with the picture come across as {}. "
        "Placed together, text and image encourage {} toward the people it depicts, so the meme is "
        "reasoned as harmful.",
        quoted, kHarmfulAngles[pick(kHarmfulAngles.size(), 1)], kHarmfulEffects[pick(kHarmfulEffects.size(), 2)]);
  }
  if (user.find("reasoned as [harmless]") != std::string::npos) {
    return fmt::format(
        "Read from the harmless side, the words \"{}\" paired with the picture come across as {}. "
        "Taken as a whole the meme aims at {} rather than attacking anyone, so it is reasoned as harmless.",
        quoted, kHarmlessAngles[pick(kHarmlessAngles.size(), 1)], kHarmlessEffects[pick(kHarmlessEffects.size(), 2)]);
  }
  if (user.find("on a rating scale from 1 (worst) to 5 (best)") != std::string::npos) {
    const std::size_t k = std::max<std::size_t>(1, count_numbered_slots(user));
    std::string out;
    for (std::size_t i = 0; i < k; ++i) {
      if (i) out += ' ';
      out += fmt::format("{}) {}", i + 1, 2 + pick(4, static_cast<int>(i) + 1));
    }
    return out;
  }
  if (to_lower(user).find("is this meme harmless or harmful?") != std::string::npos) {
    const bool harmful = (seed >> 13) & 1U;
    return fmt::format("Weighing the two positions against the image, the meme is {}.",
                       harmful ? "harmful" : "harmless");
  }
  if (to_lower(user).find("describe the dominant objects") != std::string::npos) {
    const std::string image_ref = request.image ? request.image->digest().substr(0, 8) : "none";
    const std::uint64_t s = fnv1a64(image_ref);
    return fmt::format("The image shows {} {} (frame {}).", kObjects[s % kObjects.size()],
                       kScenes[(s >> 8) % kScenes.size()], image_ref);
  }
  return "Acknowledged (" + digest.substr(0, 12) + ").";
}

}  // namespace memejudge::llm
