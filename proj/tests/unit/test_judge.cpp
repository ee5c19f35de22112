#include "memejudge/judge/judge.hpp"

#include <doctest.h>

#include "fixtures.hpp"
#include "memejudge/common/random.hpp"
#include "memejudge/corpus/ingest.hpp"
#include "memejudge/corpus/synthetic.hpp"
#include "memejudge/llm/backend.hpp"

using namespace memejudge;
using namespace memejudge::judge;
using corpus::Label;

namespace {

struct Fixture {
  testing::TempDir dir{"mj-judge"};
  corpus::Corpus corpus;

  Fixture() {
    corpus::SyntheticSpec spec;
    spec.train_harmful = spec.train_harmless = 1;
    spec.test_harmful = spec.test_harmless = 1;
    corpus = corpus::ingest_dataset(corpus::write_synthetic_corpus(dir.path(), spec), corpus::SchemaKind::canonical)
                 .corpus;
  }
  const corpus::MemeRecord& m() const { return corpus.records().front(); }
};

void check_parse(std::string_view raw, std::optional<Label> stance, ParseStatus status) {
  const auto p = parse_preference(raw);
  CHECK_MESSAGE(p.status == status, raw);
  CHECK_MESSAGE(p.stance == stance, raw);
}

}  // namespace

TEST_SUITE("judge") {
  TEST_CASE("verdict parsing examples") {
    check_parse("The text is crude. Therefore, this meme is harmful.", Label::harmful, ParseStatus::parsed);
    check_parse("The first rationale is weak. Verdict: harmless.", Label::harmless, ParseStatus::parsed);
    // Last sentence with a label word: "while it could be harmless, I conclude it is harmful overall".
    // Its last label occurrence is "harmful".
    check_parse("Both readings have merit; while it could be harmless, I conclude it is harmful overall.",
                Label::harmful, ParseStatus::parsed);
    check_parse("I cannot decide.", std::nullopt, ParseStatus::failed);
    check_parse("", std::nullopt, ParseStatus::failed);
  }

  TEST_CASE("verdict parsing edge rules") {
    check_parse("HARMFUL", Label::harmful, ParseStatus::parsed);
    check_parse("It is harmful. Nothing more to add.", Label::harmful, ParseStatus::parsed);
    check_parse("The meme is not harmful.", Label::harmless, ParseStatus::parsed);
    check_parse("Is this meme harmless or harmful?", std::nullopt, ParseStatus::ambiguous);
    check_parse("harmfulness is discussed but unharmful things too", std::nullopt, ParseStatus::failed);
    check_parse("Line one says harmless\nline two says harmful", Label::harmful, ParseStatus::parsed);
  }

  TEST_CASE("parse_preference is total over random label-word interleavings") {
    const std::vector<std::string> words{"harmful", "harmless", "Harmful", "not", "or", "meme", ".", "!", "?",
                                         "\n", "harmfully", ",", "the", "HARMLESS"};
    Rng rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
      std::string s;
      const auto n = rng.below(12);
      for (std::uint64_t i = 0; i < n; ++i) s += words[rng.below(words.size())] + " ";
      PreferenceParse p;
      CHECK_NOTHROW(p = parse_preference(s));
      CHECK(p.stance.has_value() == (p.status == ParseStatus::parsed));
      CHECK(parse_preference(s).status == p.status);
      const bool any = s.find("armful ") != std::string::npos || s.find("armless ") != std::string::npos ||
                       s.find("ARMLESS ") != std::string::npos;
      if (!any) CHECK(p.status == ParseStatus::failed);
    }
  }

  TEST_CASE("adjudicate with scripted verdicts") {
    Fixture f;
    auto mock = std::make_shared<llm::MockBackend>();
    llm::Gateway gw(mock, llm::ResponseCache(f.dir / "cache"));
    const auto d = debate::run_debate(f.corpus, f.m(), gw, {});

    mock->script("(1) Harmless:", "After weighing both, the meme is harmless.");
    auto p = adjudicate(f.corpus, f.m(), d, gw, {});
    CHECK(p.preferred == Label::harmless);
    CHECK(p.status == ParseStatus::parsed);
    CHECK(p.raw == "After weighing both, the meme is harmless.");
    CHECK(p.meme_id == f.m().id);

    // Cached: the new script is never consulted.
    mock->clear_script();
    mock->script("(1) Harmless:", "No verdict here.");
    const auto calls = mock->calls();
    CHECK(adjudicate(f.corpus, f.m(), d, gw, {}) == p);
    CHECK(mock->calls() == calls);

    llm::Gateway cold(mock, std::nullopt);
    p = adjudicate(f.corpus, f.m(), d, cold, {});
    CHECK(p.status == ParseStatus::failed);
    CHECK_FALSE(p.preferred.has_value());
  }

  TEST_CASE("refusal becomes a failed preference with the refusal text") {
    Fixture f;
    auto mock = std::make_shared<llm::MockBackend>();
    llm::Gateway gw(mock, std::nullopt);
    const auto d = debate::run_debate(f.corpus, f.m(), gw, {});
    mock->script("(1) Harmless:", "I cannot assist with classifying this.");
    const auto p = adjudicate(f.corpus, f.m(), d, gw, {});
    CHECK(p.status == ParseStatus::failed);
    CHECK(p.raw == "I cannot assist with classifying this.");
  }

  TEST_CASE("direct question and text mode") {
    Fixture f;
    llm::Gateway gw(std::make_shared<llm::MockBackend>(), std::nullopt);
    const auto direct = ask_directly(f.corpus, f.m(), gw, {});
    CHECK(direct.status == ParseStatus::parsed);
    debate::DebateSettings text;
    text.mode = debate::DebateMode::text_via_caption;
    CHECK_THROWS_AS(ask_directly(f.corpus, f.m(), gw, text), ValidationError);
    const auto cap = debate::caption_image(f.corpus, f.m(), gw, {});
    const auto d = debate::run_debate(f.corpus, f.m(), gw, text, &cap);
    CHECK(adjudicate(f.corpus, f.m(), d, gw, text, &cap).status == ParseStatus::parsed);
    CHECK_THROWS_AS(adjudicate(f.corpus, f.m(), d, gw, text, nullptr), ValidationError);
  }

  TEST_CASE("judge prompt order is harmless then harmful") {
    Fixture f;
    llm::Gateway gw(std::make_shared<llm::MockBackend>(), std::nullopt);
    for (const auto& m : f.corpus.records()) {
      const auto d = debate::run_debate(f.corpus, m, gw, {});
      const auto p = build_judge_prompt(m, d);
      CHECK(p.find("(1) Harmless: [" + d.harmless().text + "]") < p.find("(2) Harmful: [" + d.harmful().text + "]"));
    }
  }

  TEST_CASE("preference json round trip and invariant") {
    JudgePreference p{"x", Label::harmful, "raw text", ParseStatus::parsed, "m"};
    CHECK(preference_from_json(to_json(p)) == p);
    auto j = to_json(p);
    j["parse_status"] = "failed";
    CHECK_THROWS_AS(preference_from_json(j), ValidationError);
    CHECK_THROWS_AS(parse_status_from_string("maybe"), ValidationError);
  }
}
