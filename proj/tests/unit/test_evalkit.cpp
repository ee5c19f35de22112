#include <doctest.h>

#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "metrics_oracle.hpp"
#include "memejudge/common/errors.hpp"
#include "memejudge/common/io.hpp"
#include "memejudge/common/random.hpp"
#include "memejudge/evalkit/ablation.hpp"
#include "memejudge/evalkit/metrics.hpp"
#include "memejudge/evalkit/quality.hpp"
#include "memejudge/llm/backend.hpp"
#include "synthetic_run.hpp"

using namespace memejudge;
using namespace memejudge::evalkit;
using corpus::Label;

namespace {

constexpr Label hf = Label::harmful;
constexpr Label hl = Label::harmless;

using testing::oracle_metrics;

std::vector<Label> random_labels(Rng& rng, std::size_t n, double p_harmful) {
  std::vector<Label> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(rng.uniform() < p_harmful ? hf : hl);
  return out;
}

debate::DebateRecord debate_for(const std::string& id) {
  return debate::DebateRecord(debate::Rationale{Label::harmless, "benign " + id, "m", "v1/debater", id},
                              debate::Rationale{Label::harmful, "hurtful " + id, "m", "v1/debater", id});
}

ExplanationScores record(const std::string& src, Rater rater, std::array<int, 5> v, const std::string& id) {
  ExplanationScores s;
  s.explanation_id = id;
  s.meme_id = id;
  s.source = src;
  s.rater = rater;
  for (std::size_t i = 0; i < kCriteria.size(); ++i) s.scores[kCriteria[i]] = v[i];
  return s;
}

}  // namespace

TEST_SUITE("evalkit") {
  TEST_CASE("perfect predictions") {
    std::vector<Label> g{hf, hl, hl, hf, hl};
    auto r = compute_metrics(g, g);
    CHECK(r.accuracy == 1.0);
    CHECK(r.macro_f1 == 1.0);
    CHECK(r.n == 5);
  }

  TEST_CASE("worked example") {
    std::vector<Label> g{hf, hf, hl, hl}, p{hf, hl, hl, hl};
    auto r = compute_metrics(g, p);
    CHECK(r.accuracy == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(r.harmful.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(r.harmless.f1 == doctest::Approx(0.8));
    CHECK(std::abs(r.macro_f1 - 0.7333) < 1e-4);
    CHECK(r.harmful.support == 2);
  }

  TEST_CASE("brute-force oracle over random vectors") {
    Rng rng(2024);
    for (int t = 0; t < 1000; ++t) {
      const std::size_t n = 1 + rng.below(500);
      const double bias = rng.uniform();
      auto g = random_labels(rng, n, bias);
      auto p = random_labels(rng, n, rng.uniform());
      auto r = compute_metrics(g, p);
      auto o = oracle_metrics(g, p);
      REQUIRE(std::abs(r.accuracy - o.accuracy) <= 1e-9);
      REQUIRE(std::abs(r.macro_f1 - o.macro_f1) <= 1e-9);
      REQUIRE(std::abs(r.harmful.f1 - o.f1[0]) <= 1e-9);
      REQUIRE(std::abs(r.harmless.f1 - o.f1[1]) <= 1e-9);
      REQUIRE(std::abs(r.harmful.precision - o.precision[0]) <= 1e-9);
      REQUIRE(std::abs(r.harmless.recall - o.recall[1]) <= 1e-9);
    }
  }

  TEST_CASE("label swap leaves accuracy and macro-F1 unchanged") {
    Rng rng(8);
    for (int t = 0; t < 200; ++t) {
      const std::size_t n = 1 + rng.below(60);
      auto g = random_labels(rng, n, 0.3);
      auto p = random_labels(rng, n, 0.6);
      std::vector<Label> gs, ps;
      for (auto l : g) gs.push_back(corpus::opposite(l));
      for (auto l : p) ps.push_back(corpus::opposite(l));
      auto a = compute_metrics(g, p), b = compute_metrics(gs, ps);
      CHECK(a.accuracy == doctest::Approx(b.accuracy).epsilon(1e-12));
      CHECK(a.macro_f1 == doctest::Approx(b.macro_f1).epsilon(1e-12));
    }
  }

  TEST_CASE("absent class has zero F1") {
    std::vector<Label> g{hl, hl}, p{hl, hl};
    auto r = compute_metrics(g, p);
    CHECK(r.harmful.f1 == 0.0);
    CHECK(r.harmless.f1 == 1.0);
    CHECK(r.macro_f1 == 0.5);
  }

  TEST_CASE("metrics reject empty and mismatched inputs") {
    std::vector<Label> e, one{hf}, two{hf, hl};
    CHECK_THROWS_AS(compute_metrics(e, e), ValidationError);
    CHECK_THROWS_AS(compute_metrics(one, two), ValidationError);
  }

  TEST_CASE("metrics json shape") {
    std::vector<Label> g{hf, hl}, p{hf, hf};
    auto j = to_json(compute_metrics(g, p));
    CHECK(j.at("n") == 2);
    CHECK(j.at("per_class").at("harmful").contains("precision"));
    CHECK(j.at("per_class").at("harmless").at("f1") == 0.0);
  }

  TEST_CASE("explanation stance equals the predicted label") {
    for (int i = 0; i < 20; ++i) {
      auto d = debate_for("m" + std::to_string(i));
      for (Label l : {hf, hl}) {
        const auto& r = select_explanation(l, d);
        CHECK(r.stance == l);
        CHECK(&r == &d.of(l));
      }
    }
    auto d = debate_for("x");
    CHECK(select_explanation(hf, d).text == "hurtful x");
    CHECK(select_explanation(hl, d).text == "benign x");
  }

  TEST_CASE("quality prompt wording and numbering") {
    corpus::MemeRecord m{"q1", "q1.png", "look at them", hf};
    debate::CaptionRecord cap{"q1", "a dog on a sofa", "mock"};
    std::vector<std::string> three{"first", "second", "third"};
    auto p = build_quality_prompt(m, cap, three, Criterion::informativeness);
    CHECK(p.user.find("on a rating scale from 1 (worst) to 5 (best)") != std::string::npos);
    CHECK(p.user.find("1) [first]; 2) [second]; 3) [third]") != std::string::npos);
    CHECK(p.user.find("three explanations") != std::string::npos);
    CHECK(p.user.find("[Informativeness]") != std::string::npos);
    std::vector<std::string> two{"a", "b"};
    auto q = build_quality_prompt(m, cap, two, Criterion::soundness);
    CHECK(q.user.find("1) [a]; 2) [b]") != std::string::npos);
    CHECK(q.user.find("3)") == std::string::npos);
    CHECK(q.user.find("two corresponding") != std::string::npos);
    std::vector<std::string> one{"a"};
    CHECK_THROWS_AS(build_quality_prompt(m, cap, one, Criterion::soundness), ValidationError);
  }

  TEST_CASE("quality score parsing") {
    CHECK(parse_quality_scores("1) 4 2) 5 3) 2", 3) == std::vector<int>{4, 5, 2});
    CHECK(parse_quality_scores("1) 4; 2) 5; 3) 2.", 3, true) == std::vector<int>{4, 5, 2});
    CHECK_THROWS_AS(parse_quality_scores("1) 6 2) 5 3) 2", 3), ParseError);
    CHECK(parse_quality_scores("Having read them, I give 3 to the first, then 4 to the second, finally 5.", 3) ==
          std::vector<int>{3, 4, 5});
    CHECK(parse_quality_scores("Scores:\n1) 3 (clear)\n2) 2 (vague)", 2) == std::vector<int>{3, 2});
    CHECK_THROWS_AS(parse_quality_scores("1) 4 2)", 2), ParseError);
    CHECK_THROWS_AS(parse_quality_scores("I give 3 then 4", 2, true), ParseError);
    try {
      parse_quality_scores("no numbers", 2);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.raw() == "no numbers");
    }
  }

  TEST_CASE("scoring issues one call per criterion") {
    auto backend = std::make_shared<llm::MockBackend>();
    llm::Gateway gw(backend, std::nullopt);
    corpus::MemeRecord m{"q2", "q2.png", "some text", hf};
    debate::CaptionRecord cap{"q2", "a crowd", "mock"};
    std::vector<QualityCandidate> cands{{"llava", "it mocks a group"}, {"human", "mocks"}};
    auto out = score_explanations(m, cap, cands, gw, "mock-judge", hf);
    CHECK(backend->calls() == 5);
    REQUIRE(out.size() == 2);
    CHECK(out[0].explanation_id == "q2:llava");
    for (const auto& s : out) {
      CHECK(s.problems().empty());
      CHECK(s.rater == Rater::llm);
    }
  }

  TEST_CASE("aggregate matches an independent mean") {
    Rng rng(99);
    std::vector<ExplanationScores> recs;
    const char* sources[] = {"llava", "chatgpt", "human"};
    for (int i = 0; i < 100; ++i) {
      std::array<int, 5> v{};
      for (auto& x : v) x = 1 + static_cast<int>(rng.below(5));
      recs.push_back(record(sources[rng.below(3)], rng.below(2) ? Rater::llm : Rater::human, v, std::to_string(i)));
    }
    auto summary = aggregate_scores(recs);
    std::size_t total = 0;
    for (const auto& row : summary) {
      total += row.n;
      for (Criterion c : kCriteria) {
        double sum = 0;
        std::size_t n = 0;
        for (const auto& r : recs) {
          if (r.rater == row.rater && r.source == row.source) {
            sum += r.scores.at(c);
            ++n;
          }
        }
        CHECK(n == row.n);
        CHECK(row.means.at(c) == doctest::Approx(sum / static_cast<double>(n)).epsilon(1e-12));
      }
    }
    CHECK(total == 100);
    auto single = aggregate_scores(std::vector<ExplanationScores>{record("x", Rater::llm, {1, 2, 3, 4, 5}, "a")});
    REQUIRE(single.size() == 1);
    CHECK(single[0].means.at(Criterion::conciseness) == 4.0);
  }

  TEST_CASE("human ratings reproduce the published means") {
    auto recs = read_human_ratings(std::filesystem::path(MEMEJUDGE_DATA_DIR) / "human_ratings.jsonl");
    CHECK(recs.size() == 300);
    auto summary = aggregate_scores(recs);
    bool found = false;
    for (const auto& row : summary) {
      if (row.source == "llava") {
        found = true;
        CHECK(row.rater == Rater::human);
        CHECK(row.means.at(Criterion::informativeness) == doctest::Approx(4.05).epsilon(1e-9));
        CHECK(row.means.at(Criterion::conciseness) == doctest::Approx(3.25).epsilon(1e-9));
      }
      if (row.source == "human") CHECK(row.means.at(Criterion::conciseness) == doctest::Approx(4.30).epsilon(1e-9));
    }
    CHECK(found);
  }

  TEST_CASE("human ratings reject out-of-range and llm rows") {
    testing::TempDir dir("mj-ratings");
    write_file_atomic(dir / "bad.jsonl",
                      R"({"explanation_id":"a","rater":"human","scores":{"informativeness":6,"readability":1,)"
                      R"("soundness":1,"conciseness":1,"persuasiveness":1}})"
                      "\n");
    CHECK_THROWS_AS(read_human_ratings(dir / "bad.jsonl"), ValidationError);
    write_file_atomic(dir / "llm.jsonl",
                      R"({"explanation_id":"a","rater":"llm","scores":{"informativeness":3,"readability":1,)"
                      R"("soundness":1,"conciseness":1,"persuasiveness":1}})"
                      "\n");
    CHECK_THROWS_AS(read_human_ratings(dir / "llm.jsonl"), ValidationError);
  }

  TEST_CASE("variant names round-trip") {
    std::set<std::string> seen;
    for (auto v : kAllVariants) {
      CHECK(parse_variant(to_string(v)) == v);
      seen.insert(std::string(to_string(v)));
    }
    CHECK(seen.size() == 10);
    CHECK_THROWS_AS(parse_variant("wo_everything"), ValidationError);
  }

  TEST_CASE("variant layouts") {
    using fusion::ContextLayout;
    CHECK(layout_for(AblationVariant::wo_MD) == ContextLayout::meme_only);
    CHECK(layout_for(AblationVariant::wo_LLMJ) == ContextLayout::fixed_order);
    CHECK(layout_for(AblationVariant::wo_HlD) == ContextLayout::harmful_only);
    CHECK(layout_for(AblationVariant::wo_HfD) == ContextLayout::harmless_only);
    CHECK(layout_for(AblationVariant::wo_UR) == ContextLayout::preferred_only);
    CHECK(layout_for(AblationVariant::full) == ContextLayout::judge_ordered);
    CHECK_FALSE(trains_fusion_judge(AblationVariant::wo_SLMJ));
    CHECK_FALSE(trains_fusion_judge(AblationVariant::llm_md_cot));
    CHECK_FALSE(trains_fusion_judge(AblationVariant::llm_direct));
    CHECK(trains_fusion_judge(AblationVariant::wo_MF));
  }

  TEST_CASE("ablation on the synthetic corpus") {
    corpus::SyntheticSpec spec;
    spec.train_harmful = spec.train_harmless = 6;
    spec.test_harmful = spec.test_harmless = 4;
    testing::SyntheticRun run(spec);
    AblationInputs in;
    in.corpus = &run.corpus;
    in.fusion = fusion::FusionConfig::toy();
    in.train.epochs = 2;
    in.train.batch_size = 4;

    SUBCASE("missing artifacts are named") {
      try {
        run_ablation(AblationVariant::full, in);
        FAIL("expected MissingArtifact");
      } catch (const MissingArtifact& e) {
        CHECK(std::string(e.what()).find("debates") != std::string::npos);
      }
      in.debates = &run.debates;
      CHECK_THROWS_AS(run_ablation(AblationVariant::wo_SLMJ, in), MissingArtifact);
      CHECK_THROWS_AS(run_ablation(AblationVariant::llm_direct, in), MissingArtifact);
      CHECK_THROWS_AS(run_ablation(AblationVariant::wo_MF, in), MissingArtifact);
    }

    SUBCASE("wo_MD needs no debates") {
      auto r = run_ablation(AblationVariant::wo_MD, in);
      CHECK(r.metrics.n == 8);
      for (const auto& p : r.predictions) CHECK_FALSE(p.explanation.has_value());
    }

    SUBCASE("judge-only variants echo the preferences") {
      in.debates = &run.debates;
      in.preferences = &run.preferences;
      in.direct_preferences = &run.direct;
      for (auto v : {AblationVariant::wo_SLMJ, AblationVariant::llm_md_cot, AblationVariant::llm_direct}) {
        auto r = run_ablation(v, in);
        const auto& src = v == AblationVariant::llm_direct ? run.direct : run.preferences;
        for (const auto& p : r.predictions) {
          CHECK(p.label == preference_label(&src.at(p.meme_id)));
          const auto& pr = src.at(p.meme_id);
          if (pr.status == judge::ParseStatus::parsed) CHECK(p.label == *pr.preferred);
          REQUIRE(p.explanation.has_value());
          CHECK(p.explanation->stance == p.label);
        }
      }
    }

    SUBCASE("every variant runs") {
      in.debates = &run.debates;
      in.preferences = &run.preferences;
      in.captions = &run.captions;
      in.direct_preferences = &run.direct;
      std::size_t reports = 0;
      for (auto v : kAllVariants) {
        auto r = run_ablation(v, in);
        CHECK(r.predictions.size() == 8);
        CHECK(r.metrics.n == 8);
        CHECK(to_json(r).at("variant") == to_string(v));
        ++reports;
      }
      CHECK(reports == 10);
    }
  }

  TEST_CASE("unparsed preferences count as harmful") {
    judge::JudgePreference p{"m", std::nullopt, "unclear", judge::ParseStatus::ambiguous, "j"};
    CHECK(preference_label(&p) == hf);
    CHECK(preference_label(nullptr) == hf);
    p.status = judge::ParseStatus::parsed;
    p.preferred = hl;
    CHECK(preference_label(&p) == hl);
  }
}
