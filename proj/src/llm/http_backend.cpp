#include <httplib.h>

#include <cstdlib>

#include "memejudge/common/hashing.hpp"
#include "memejudge/common/io.hpp"
#include "memejudge/llm/backend.hpp"

namespace memejudge::llm {

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("llm endpoint must be an absolute URL: " + url);
  const auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpBackendOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw ValidationError("llm endpoint is not configured");
  std::tie(scheme_host_port_, path_) = split_url(options_.endpoint);
}

std::string HttpChatBackend::encode_request(const ChatRequest& request) {
  json messages = json::array();
  if (request.system) messages.push_back({{"role", "system"}, {"content", *request.system}});
  if (request.image) {
    const std::string url =
        "data:" + request.image->media_type() + ";base64," + base64_encode(request.image->bytes());
    messages.push_back({{"role", "user"},
                        {"content", json::array({{{"type", "text"}, {"text", request.user}},
                                                 {{"type", "image_url"}, {"image_url", {{"url", url}}}}})}});
  } else {
    messages.push_back({{"role", "user"}, {"content", request.user}});
  }
  json body = {{"model", request.model_id},
               {"messages", messages},
               {"temperature", request.temperature},
               {"max_tokens", request.max_tokens},
               {"stream", false}};
  return canonical_dump(body);
}

std::string HttpChatBackend::decode_response(const std::string& body) {
  json parsed;
  try {
    parsed = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("malformed chat response: ") + e.what());
  }
  const auto choices = parsed.find("choices");
  if (choices == parsed.end() || !choices->is_array() || choices->empty()) {
    throw BackendError("chat response carries no choices");
  }
  const auto& content = (*choices)[0].at("message").at("content");
  if (content.is_string()) return content.get<std::string>();
  if (content.is_array()) {
    std::string out;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") out += part.value("text", "");
    }
    return out;
  }
  throw BackendError("chat response content has unexpected type");
}

std::string HttpChatBackend::complete(const ChatRequest& request) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(options_.timeout);
  client.set_read_timeout(options_.timeout);
  httplib::Headers headers;
  if (!options_.token.empty()) headers.emplace("Authorization", "Bearer " + options_.token);
  auto res = client.Post(path_, headers, encode_request(request), "application/json");
  if (!res) throw TransportError("POST " + options_.endpoint + " failed: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("POST " + options_.endpoint + " returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw BackendError("POST " + options_.endpoint + " returned HTTP " + std::to_string(res->status) + ": " +
                       res->body.substr(0, 200));
  }
  return decode_response(res->body);
}

HttpBackendOptions http_options_from_env() {
  HttpBackendOptions o;
  if (const char* v = std::getenv("MEMEJUDGE_LLM_ENDPOINT")) o.endpoint = v;
  if (const char* v = std::getenv("MEMEJUDGE_LLM_TOKEN")) o.token = v;
  return o;
}

}  // namespace memejudge::llm
