#include <httplib.h>
#include <doctest.h>

#include <thread>

#include "fixtures.hpp"
#include "memejudge/common/io.hpp"
#include "memejudge/llm/backend.hpp"
#include "memejudge/llm/cache.hpp"
#include "memejudge/llm/gateway.hpp"

using namespace memejudge;
using namespace memejudge::llm;
using nlohmann::json;

namespace {

ChatRequest debater_request(const std::string& stance, const std::string& text = "Surrender their firearms") {
  ChatRequest r;
  r.user = "Given the meme, with the Text: [" + text + "] embedded in the Image, ... reasoned as [" + stance + "].";
  r.model_id = "mock-vlm";
  r.prompt_version = "v1/debater";
  r.image.emplace(std::vector<std::uint8_t>{1, 2, 3, 4}, "image/png");
  return r;
}

// Fails with TransportError `failures` times, then answers.
class FlakyBackend : public Backend {
 public:
  explicit FlakyBackend(int failures) : failures_(failures) {}
  std::string complete(const ChatRequest&) override {
    ++calls;
    if (failures_-- > 0) throw TransportError("connection reset");
    return "fine  \n";
  }
  std::string name() const override { return "flaky"; }
  int calls = 0;

 private:
  int failures_;
};

class FixedBackend : public Backend {
 public:
  explicit FixedBackend(std::string text) : text_(std::move(text)) {}
  std::string complete(const ChatRequest&) override { return text_; }
  std::string name() const override { return "fixed"; }

 private:
  std::string text_;
};

class SlowBackend : public Backend {
 public:
  std::string complete(const ChatRequest&) override {
    const int now = ++active;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --active;
    return "ok";
  }
  std::string name() const override { return "slow"; }
  std::atomic<int> active{0}, peak{0};
};

}  // namespace

TEST_SUITE("llm") {
  TEST_CASE("mock debater output embeds the requested stance and is pure") {
    const auto hf = MockBackend::templated_response(debater_request("harmful"));
    const auto hl = MockBackend::templated_response(debater_request("harmless"));
    CHECK(hf.find("reasoned as harmful") != std::string::npos);
    CHECK(hl.find("reasoned as harmless") != std::string::npos);
    CHECK(hf != hl);
    CHECK(MockBackend::templated_response(debater_request("harmful")) == hf);
    auto other_image = debater_request("harmful");
    other_image.image.emplace(std::vector<std::uint8_t>{9, 9}, "image/png");
    // Pure in (system, user, image digest): model id and version do not matter.
    auto renamed = debater_request("harmful");
    renamed.model_id = "other";
    renamed.prompt_version = "v2/debater";
    CHECK(MockBackend::templated_response(renamed) == hf);
    CHECK(MockBackend::templated_response(other_image).find("reasoned as harmful") != std::string::npos);
  }

  TEST_CASE("mock scripted mode takes precedence") {
    auto mock = std::make_shared<MockBackend>();
    mock->script("Surrender", "canned");
    Gateway gw(mock, std::nullopt);
    CHECK(gw.complete(debater_request("harmful")).text == "canned");
    mock->clear_script();
    CHECK(gw.complete(debater_request("harmful")).text != "canned");
  }

  TEST_CASE("identical request twice is served from cache") {
    testing::TempDir dir("mj-cache");
    auto mock = std::make_shared<MockBackend>();
    Gateway gw(mock, ResponseCache(dir.path()));
    const auto a = gw.complete(debater_request("harmful"));
    const auto b = gw.complete(debater_request("harmful"));
    CHECK_FALSE(a.from_cache);
    CHECK(b.from_cache);
    CHECK(a.text == b.text);
    CHECK(mock->calls() == 1);

    // Warm and cold caches agree.
    Gateway cold(std::make_shared<MockBackend>(), std::nullopt);
    CHECK(cold.complete(debater_request("harmful")).text == b.text);
  }

  TEST_CASE("pipeline mode rejects non-zero temperature") {
    Gateway gw(std::make_shared<MockBackend>(), std::nullopt);
    auto r = debater_request("harmful");
    r.temperature = 0.7;
    CHECK_THROWS_AS(gw.complete(r), ValidationError);
    r = debater_request("harmful");
    r.max_tokens = 512;
    CHECK_THROWS_AS(gw.complete(r), ValidationError);
    r = debater_request("harmful");
    r.prompt_version.clear();
    CHECK_THROWS_AS(gw.complete(r), ValidationError);
    CHECK(gw.backend_calls() == 0);
  }

  TEST_CASE("cache key covers every field") {
    const auto base = debater_request("harmful");
    const auto k = CacheKey::of(base);
    CHECK(CacheKey::of(debater_request("harmful")) == k);
    auto v = base;
    v.prompt_version = "v2/debater";
    CHECK_FALSE(CacheKey::of(v) == k);
    v = base;
    v.model_id = "m2";
    CHECK_FALSE(CacheKey::of(v) == k);
    v = base;
    v.system = "";
    CHECK_FALSE(CacheKey::of(v) == k);
    v = base;
    v.image.reset();
    CHECK_FALSE(CacheKey::of(v) == k);
    v = base;
    v.image.emplace(std::vector<std::uint8_t>{1, 2, 3, 4}, "image/jpeg");
    // Content-addressed: the media type (and any path) is not part of the key.
    CHECK(CacheKey::of(v) == k);
  }

  TEST_CASE("cache lookup and round trip") {
    testing::TempDir dir("mj-cache");
    ResponseCache cache(dir.path());
    const auto req = debater_request("harmless");
    const auto key = CacheKey::of(req);
    CHECK_FALSE(cache.lookup(key).has_value());
    ChatResponse res{"exact \"bytes\"\nwith newline", "mock-vlm", false, 12};
    cache.store(key, req, res);
    const auto hit = cache.lookup(key);
    REQUIRE(hit);
    CHECK(hit->text == res.text);
    CHECK(hit->from_cache);
    auto v = req;
    v.prompt_version = "v2/debater";
    CHECK_FALSE(cache.lookup(CacheKey::of(v)).has_value());
  }

  TEST_CASE("corrupted cache entry is quarantined and treated as a miss") {
    testing::TempDir dir("mj-cache");
    ResponseCache cache(dir.path());
    const auto key = CacheKey::of(debater_request("harmful"));
    write_file_atomic(cache.entry_path(key), "{\"key\": truncated");
    CHECK_FALSE(cache.lookup(key).has_value());
    CHECK_FALSE(std::filesystem::exists(cache.entry_path(key)));
    CHECK(std::filesystem::exists(cache.entry_path(key).string() + ".corrupt"));
  }

  TEST_CASE("transient failures are retried with exponential backoff") {
    auto flaky = std::make_shared<FlakyBackend>(2);
    GatewayOptions opts;
    opts.max_retries = 3;
    Gateway gw(flaky, std::nullopt, opts);
    std::vector<long> sleeps;
    gw.set_sleeper([&](std::chrono::milliseconds d) { sleeps.push_back(d.count()); });
    const auto r = gw.complete(debater_request("harmful"));
    CHECK(r.text == "fine");
    CHECK(flaky->calls == 3);
    CHECK(sleeps == std::vector<long>{250, 500});
  }

  TEST_CASE("exhausted retries raise a transport error") {
    auto flaky = std::make_shared<FlakyBackend>(10);
    GatewayOptions opts;
    opts.max_retries = 2;
    Gateway gw(flaky, std::nullopt, opts);
    gw.set_sleeper([](std::chrono::milliseconds) {});
    CHECK_THROWS_AS(gw.complete(debater_request("harmful")), TransportError);
    CHECK(flaky->calls == 3);
  }

  TEST_CASE("refusals are detected by marker phrases and not cached") {
    testing::TempDir dir("mj-cache");
    Gateway gw(std::make_shared<FixedBackend>("I'm sorry, but I can't help with that meme."),
               ResponseCache(dir.path()));
    try {
      gw.complete(debater_request("harmful"));
      FAIL("expected RefusalError");
    } catch (const RefusalError& e) {
      CHECK(e.raw().find("I'm sorry") == 0);
    }
    CHECK(std::filesystem::is_empty(dir.path()));

    GatewayOptions custom;
    custom.refusal_markers = {"NOPE"};
    Gateway gw2(std::make_shared<FixedBackend>("nope, not this one"), std::nullopt, custom);
    CHECK_THROWS_AS(gw2.complete(debater_request("harmful")), RefusalError);
  }

  TEST_CASE("in-flight requests stay under the bound") {
    auto slow = std::make_shared<SlowBackend>();
    GatewayOptions opts;
    opts.max_in_flight = 2;
    Gateway gw(slow, std::nullopt, opts);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
      threads.emplace_back([&, i] { gw.complete(debater_request("harmful", "meme " + std::to_string(i))); });
    }
    for (auto& t : threads) t.join();
    CHECK(slow->peak.load() <= 2);
    CHECK(gw.backend_calls() == 8);
  }

  TEST_CASE("http backend wire format") {
    auto req = debater_request("harmful");
    req.system = "sys";
    const auto body = json::parse(HttpChatBackend::encode_request(req));
    CHECK(body.at("temperature") == 0.0);
    CHECK(body.at("max_tokens") == 256);
    CHECK(body.at("messages")[0].at("role") == "system");
    const auto& content = body.at("messages")[1].at("content");
    CHECK(content[1].at("image_url").at("url").get<std::string>().rfind("data:image/png;base64,AQIDBA==", 0) == 0);
    CHECK(HttpChatBackend::decode_response(R"({"choices":[{"message":{"content":"hi"}}]})") == "hi");
    CHECK(HttpChatBackend::decode_response(
              R"({"choices":[{"message":{"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}}]})") ==
          "ab");
    CHECK_THROWS_AS(HttpChatBackend::decode_response("{}"), BackendError);
    CHECK_THROWS_AS(HttpChatBackend::decode_response("not json"), BackendError);
  }

  TEST_CASE("http backend against a local endpoint") {
    httplib::Server srv;
    std::atomic<int> hits{0};
    std::string auth;
    srv.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      auth = req.get_header_value("Authorization");
      if (hits++ == 0) {
        res.status = 503;
        return;
      }
      const auto body = json::parse(req.body);
      res.set_content(json{{"choices", {{{"message", {{"content", "echo " + body.at("model").get<std::string>()}}}}}}}.dump(),
                      "application/json");
    });
    srv.Post("/bad", [](const httplib::Request&, httplib::Response& res) { res.status = 401; });
    const int port = srv.bind_to_any_port("127.0.0.1");
    std::thread t([&] { srv.listen_after_bind(); });
    srv.wait_until_ready();

    HttpBackendOptions o;
    o.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    o.token = "secret";
    Gateway gw(std::make_shared<HttpChatBackend>(o), std::nullopt);
    gw.set_sleeper([](std::chrono::milliseconds) {});
    CHECK(gw.complete(debater_request("harmful")).text == "echo mock-vlm");
    CHECK(hits.load() == 2);
    CHECK(auth == "Bearer secret");

    o.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/bad";
    Gateway bad(std::make_shared<HttpChatBackend>(o), std::nullopt);
    CHECK_THROWS_AS(bad.complete(debater_request("harmful")), BackendError);
    srv.stop();
    t.join();
    CHECK_THROWS_AS(HttpChatBackend(HttpBackendOptions{}), ValidationError);
  }
}
