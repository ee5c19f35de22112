#include "memejudge/prompts/templates.hpp"

#include "memejudge/common/errors.hpp"

namespace memejudge::prompts {

std::string_view template_text(std::string_view name, std::string_view version) {
  const std::string key = std::string(version) + "/" + std::string(name);
  for (const auto& [k, v] : detail::embedded_templates()) {
    if (k == key) return v;
  }
  throw NotFoundError("unknown prompt template '" + key + "'");
}

std::string prompt_version(std::string_view name, std::string_view version) {
  return std::string(version) + "/" + std::string(name);
}

std::string render(std::string_view tmpl, const Slots& slots) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) throw ValidationError("unterminated slot in prompt template");
    out.append(tmpl.substr(pos, open - pos));
    const std::string_view slot = tmpl.substr(open + 2, close - open - 2);
    bool found = false;
    for (const auto& [name, value] : slots) {
      if (name == slot) {
        out.append(value);
        found = true;
        break;
      }
    }
    if (!found) throw ValidationError("prompt template slot '" + std::string(slot) + "' was not supplied");
    pos = close + 2;
  }
  return out;
}

std::vector<std::string> available_templates() {
  std::vector<std::string> out;
  for (const auto& [k, v] : detail::embedded_templates()) out.emplace_back(k);
  return out;
}

}  // namespace memejudge::prompts
