// Acceptance run: one PASS/FAIL line per criterion, non-zero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "fixtures.hpp"
#include "fusion_oracle.hpp"
#include "golden.hpp"
#include "metrics_oracle.hpp"
#include "memejudge/common/io.hpp"
#include "memejudge/corpus/image.hpp"
#include "memejudge/corpus/ingest.hpp"
#include "memejudge/corpus/synthetic.hpp"
#include "memejudge/debate/debate.hpp"
#include "memejudge/evalkit/ablation.hpp"
#include "memejudge/evalkit/metrics.hpp"
#include "memejudge/evalkit/quality.hpp"
#include "memejudge/fusion/checkpoint.hpp"
#include "memejudge/fusion/context.hpp"
#include "memejudge/fusion/predict.hpp"
#include "memejudge/fusion/trainer.hpp"
#include "memejudge/judge/judge.hpp"
#include "memejudge/pipeline/artifacts.hpp"
#include "memejudge/pipeline/layout.hpp"
#include "memejudge/pipeline/stages.hpp"
#include "synthetic_run.hpp"

using namespace memejudge;
using corpus::Label;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome fail(std::string why) { return {false, std::move(why)}; }

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Outcome within(Outcome o, Clock::time_point t0, double limit) {
  const double s = seconds_since(t0);
  if (o.pass && s >= limit) return fail(fmt::format("{} but took {:.1f} s (limit {:.0f} s)", o.detail, s, limit));
  return o;
}

std::vector<Label> random_labels(Rng& rng, std::size_t n, double p) {
  std::vector<Label> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(rng.uniform() < p ? Label::harmful : Label::harmless);
  return out;
}

std::vector<int> random_ids(Rng& rng, int n, int vocab) {
  std::vector<int> ids;
  for (int i = 0; i < n; ++i) ids.push_back(4 + static_cast<int>(rng.below(static_cast<std::uint64_t>(vocab - 4))));
  return ids;
}

// ---------------------------------------------------------------------------------------------

Outcome metrics_oracle() {
  const auto t0 = Clock::now();
  Rng rng(99);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.below(500);
    const auto g = random_labels(rng, n, rng.uniform());
    const auto p = random_labels(rng, n, rng.uniform());
    const auto r = evalkit::compute_metrics(g, p);
    const auto o = testing::oracle_metrics(g, p);
    for (double d : {r.accuracy - o.accuracy, r.macro_f1 - o.macro_f1, r.harmful.f1 - o.f1[0],
                     r.harmless.f1 - o.f1[1], r.harmful.precision - o.precision[0],
                     r.harmless.precision - o.precision[1], r.harmful.recall - o.recall[0],
                     r.harmless.recall - o.recall[1]}) {
      worst = std::max(worst, std::abs(d));
    }
  }
  if (worst > 1e-9) return fail(fmt::format("max deviation {:.3g}", worst));
  const std::vector<Label> g{Label::harmful, Label::harmful, Label::harmless, Label::harmless};
  const std::vector<Label> p{Label::harmful, Label::harmless, Label::harmless, Label::harmless};
  const auto r = evalkit::compute_metrics(g, p);
  if (std::abs(r.accuracy - 0.75) > 1e-12 || std::abs(r.macro_f1 - 0.7333) > 1e-4) {
    return fail(fmt::format("worked example gave {:.4f} / {:.4f}", r.accuracy, r.macro_f1));
  }
  return within({true, fmt::format("1000 vectors, max deviation {:.1g}; worked example 0.75 / {:.4f}", worst, r.macro_f1)},
                t0, 10.0);
}

Outcome gradient_check() {
  const auto t0 = Clock::now();
  const auto cfg = testing::gradcheck_config();
  if (cfg.d != 16 || cfg.d_k != 8 || cfg.num_layers != 2 || cfg.num_patches() != 5) return fail("unexpected toy dims");
  Rng rng(5);
  double worst = 0.0;
  std::size_t checked = 0;
  for (Label gold : {Label::harmful, Label::harmless}) {
    fusion::FusionJudgeModel model(cfg, 11 + static_cast<int>(gold));
    const auto ids = random_ids(rng, 12, cfg.vocab_size);
    const fusion::Matrix img(testing::random_dense(rng, 5, cfg.d));
    const auto res = testing::gradient_check(model, ids, img, gold, 1e-5);
    worst = std::max(worst, res.max_rel_error);
    checked += res.checked;
  }
  Outcome o{worst < 1e-4, fmt::format("{} entries, max relative error {:.2e}", checked, worst)};
  return within(o, t0, 60.0);
}

Outcome fused_layer_oracle() {
  Rng rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto cfg = testing::gradcheck_config();
    cfg.heads = 1 + static_cast<int>(rng.below(2));
    cfg.d = 8 * cfg.heads * (1 + static_cast<int>(rng.below(2)));
    cfg.d_k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.d)));
    cfg.num_layers = 1 + static_cast<int>(rng.below(3));
    cfg.extractor_width = 8;
    fusion::FusionJudgeModel model(cfg, rng.next());
    const int m = 1 + static_cast<int>(rng.below(12));
    const testing::Dense h = testing::random_dense(rng, m, cfg.d);
    const testing::Dense img = testing::random_dense(rng, 1 + static_cast<int>(rng.below(9)), cfg.d);
    fusion::Tape tape;
    auto hv = tape.constant(fusion::Matrix(h));
    auto iv = tape.constant(fusion::Matrix(img));
    testing::Dense want = h;
    for (int i = 0; i < cfg.num_layers; ++i) {
      const auto p = model.fusion_projections()[static_cast<std::size_t>(i)];
      fusion::Tape side;
      const auto att = fusion::cross_attention(side, side.constant(fusion::Matrix(want)), side.constant(fusion::Matrix(img)), p);
      const auto oracle_att = testing::oracle_cross_attention(want, img, p);
      worst = std::max(worst, (testing::Dense(side.value(att.projected)) - oracle_att.projected).cwiseAbs().maxCoeff());
      hv = model.fuse_layer(tape, i, hv, iv);
      want = testing::oracle_fuse_layer(model, i, want, img);
      const testing::Dense got(tape.value(hv));
      if (got.rows() != want.rows() || got.cols() != want.cols()) return fail("shape mismatch");
      worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
    }
  }
  return {worst < 1e-6, fmt::format("100 instances, max abs deviation {:.2e}", worst)};
}

fusion::TrainConfig synthetic_train(int steps, int batch) {
  fusion::TrainConfig tc;
  tc.batch_size = batch;
  tc.learning_rate = 3e-3;
  tc.max_steps = steps;
  tc.epochs = 1000;
  tc.seed = 13;
  return tc;
}

std::vector<fusion::TrainingExample> examples_for(const fusion::FusionJudgeModel& model, const testing::SyntheticRun& run,
                                                  std::span<const corpus::MemeRecord* const> memes,
                                                  fusion::ContextLayout layout) {
  fusion::ExampleSource src{&run.corpus, &run.debates, &run.preferences, nullptr, layout};
  return fusion::build_examples(model, memes, src, true);
}

Outcome overfit() {
  const auto t0 = Clock::now();
  corpus::SyntheticSpec spec;
  spec.train_harmful = spec.train_harmless = 16;
  spec.test_harmful = spec.test_harmless = 0;
  testing::SyntheticRun run(spec);
  fusion::FusionJudgeModel model(fusion::FusionConfig::toy(), 13);
  const auto memes = run.corpus.split(corpus::Split::train);
  if (memes.size() != 32) return fail(fmt::format("expected 32 memes, got {}", memes.size()));
  const auto data = examples_for(model, run, memes, fusion::ContextLayout::judge_ordered);
  int first_perfect = -1;
  fusion::TrainHooks hooks;
  hooks.on_epoch = [&](const fusion::EpochRecord& e) {
    if (first_perfect < 0 && e.train_acc == 1.0) first_perfect = e.step;
  };
  const auto log = fusion::train_model(model, data, synthetic_train(300, 8), hooks);
  const double acc = fusion::accuracy(model, data);
  Outcome o{acc == 1.0, fmt::format("train accuracy {:.3f} after {} steps (first perfect epoch at step {})", acc,
                                    log.empty() ? 0 : log.back().step, first_perfect)};
  return within(o, t0, 300.0);
}

Outcome vision_efficacy() {
  corpus::SyntheticSpec spec;
  spec.train_harmful = spec.train_harmless = 24;
  spec.test_harmful = spec.test_harmless = 16;
  spec.text_signal = 0.0;
  spec.seed = 21;
  testing::SyntheticRun run(spec);
  fusion::FusionJudgeModel model(fusion::FusionConfig::toy(), 17);
  const auto train = examples_for(model, run, run.corpus.split(corpus::Split::train), fusion::ContextLayout::meme_only);
  const auto test = examples_for(model, run, run.corpus.split(corpus::Split::test), fusion::ContextLayout::meme_only);
  fusion::train_model(model, train, synthetic_train(300, 8));
  const double with_image = fusion::accuracy(model, test);
  const double zeroed = fusion::accuracy(model, test, true);
  return {with_image > 0.9 && zeroed <= 0.6,
          fmt::format("held-out accuracy {:.3f} with H_img, {:.3f} with H_img zeroed", with_image, zeroed)};
}

// Expected model context, rendered independently of the context builders.
std::string render_context(const std::string& text, const std::string& first, const std::string& second) {
  return "Text: " + text + " \n Rationale A: " + first + " \n Rationale B: " + second;
}

Outcome ordering_contract() {
  testing::SyntheticRun run;
  const fusion::WordHashTokenizer tok(fusion::FusionConfig::toy().vocab_size);
  std::size_t checked = 0, judged_harmful = 0;
  for (const auto& m : run.corpus.records()) {
    const auto& d = run.debates.at(m.id);
    const auto& actual = run.preferences.at(m.id);
    const judge::JudgePreference forced_hf{m.id, Label::harmful, "harmful", judge::ParseStatus::parsed, "m"};
    const judge::JudgePreference forced_hl{m.id, Label::harmless, "harmless", judge::ParseStatus::parsed, "m"};
    const judge::JudgePreference failed{m.id, std::nullopt, "?", judge::ParseStatus::failed, "m"};
    const judge::JudgePreference ambiguous{m.id, std::nullopt, "?", judge::ParseStatus::ambiguous, "m"};
    for (const judge::JudgePreference* p : {&actual, &forced_hf, &forced_hl, &failed, &ambiguous,
                                            static_cast<const judge::JudgePreference*>(nullptr)}) {
      const bool hf_first = p != nullptr && p->status == judge::ParseStatus::parsed && p->preferred == Label::harmful;
      const auto& first = hf_first ? d.harmful().text : d.harmless().text;
      const auto& second = hf_first ? d.harmless().text : d.harmful().text;
      const auto ctx = fusion::order_context(m.text, d, p);
      if (ctx.segments != std::vector<std::string>{m.text, first, second}) {
        return fail("segment order wrong for " + m.id);
      }
      std::string joined;
      const auto in = fusion::to_model_input(ctx);
      for (std::size_t i = 0; i < in.segments.size(); ++i) {
        if (i) joined += fusion::kSegmentSeparator;
        joined += in.segments[i].prefix + " " + in.segments[i].text;
      }
      if (joined != render_context(m.text, first, second)) return fail("rendered context bytes differ for " + m.id);
      auto want = tok.encode(render_context(m.text, first, second));
      want.push_back(fusion::WordHashTokenizer::kEos);
      if (fusion::tokenize_context(ctx, tok, 1 << 16) != want) return fail("token sequence differs for " + m.id);
      if (p == &actual && hf_first) ++judged_harmful;
      ++checked;
    }
  }
  return {true, fmt::format("{} memes x 6 preference states ({} judged harmful by the mock judge)",
                            run.corpus.size(), judged_harmful)};
}

Outcome prompt_goldens() {
  const fs::path dir = MEMEJUDGE_GOLDEN_DIR;
  corpus::MemeRecord m;
  m.id = "g1";
  m.image_ref = "g1.png";
  m.text = "all of <<them>> {{text}} [here]";
  const debate::DebateRecord r({Label::harmless, "benign <<R_HF>> body", "mock", "v1/debater", "g1"},
                               {Label::harmful, "hostile body", "mock", "v1/debater", "g1"});
  const debate::CaptionRecord cap{"g1", "two people under a banner", "mock"};
  std::vector<std::string> bad;
  std::size_t n = 0;
  auto check = [&](const char* file, const std::map<std::string, std::string>& slots, const std::string& actual) {
    ++n;
    const auto expected = testing::fill_golden(testing::read_golden(dir / file), slots);
    if (const auto diff = testing::golden_diff(expected, actual)) bad.push_back(std::string(file) + ": " + *diff);
  };
  for (Label s : {Label::harmful, Label::harmless}) {
    const std::string stance(corpus::to_string(s));
    check("debater.golden", {{"T", m.text}, {"STANCE", stance}}, debate::build_debater_prompt(m, s));
    const auto td = debate::build_text_debater_prompt(m, cap, s);
    check("text_debater_system.golden", {}, td.system);
    check("text_debater_user.golden", {{"T", m.text}, {"CAPTION", cap.caption}, {"STANCE", stance}}, td.user);
  }
  check("judge.golden", {{"T", m.text}, {"R_HL", r.harmless().text}, {"R_HF", r.harmful().text}},
        judge::build_judge_prompt(m, r));
  const auto tj = judge::build_text_judge_prompt(m, &cap, r);
  check("text_judge_system.golden", {}, tj.system);
  check("text_judge_user.golden",
        {{"T", m.text}, {"CAPTION", cap.caption}, {"R_HL", r.harmless().text}, {"R_HF", r.harmful().text}}, tj.user);
  const std::vector<std::string> ex{"one", "two", "three"};
  for (auto crit : evalkit::kCriteria) {
    const auto q = evalkit::build_quality_prompt(m, cap, ex, crit);
    check("quality_system.golden", {}, q.system);
    check("quality_user.golden",
          {{"T", m.text},
           {"CAPTION", cap.caption},
           {"CRITERION", std::string(evalkit::display_name(crit))},
           {"E1", ex[0]},
           {"E2", ex[1]},
           {"E3", ex[2]}},
          q.user);
  }
  if (!bad.empty()) return fail(bad.front());
  return {true, fmt::format("{} renderings match character for character", n)};
}

// Two demo runs shared by the determinism, ablation and explanation criteria.
struct DemoRuns {
  testing::TempDir a{"mj-accept-a"}, b{"mj-accept-b"};
  double seconds = 0.0;
  std::string error;

  DemoRuns() {
    const auto t0 = Clock::now();
    try {
      pipeline::Pipeline(pipeline::demo_config(13), a.path()).run_all();
      pipeline::Pipeline(pipeline::demo_config(13), b.path()).run_all();
    } catch (const std::exception& e) {
      error = e.what();
    }
    seconds = seconds_since(t0);
  }
};

DemoRuns& demo() {
  static DemoRuns runs;
  return runs;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).generic_string();
    if (rel.rfind(pipeline::layout::llm_cache, 0) == 0) continue;
    out[rel] = read_text_file(e.path());
  }
  return out;
}

Outcome determinism() {
  auto& d = demo();
  if (!d.error.empty()) return fail("demo failed: " + d.error);
  const auto sa = snapshot(d.a.path());
  const auto sb = snapshot(d.b.path());
  for (const auto rel : {pipeline::layout::debate_prompts, pipeline::layout::debates, pipeline::layout::judge_prompts,
                         pipeline::layout::preferences, pipeline::layout::predictions, pipeline::layout::metrics,
                         pipeline::layout::manifest}) {
    if (!sa.count(std::string(rel))) return fail("missing " + std::string(rel));
  }
  if (sa.size() != sb.size()) return fail(fmt::format("file sets differ: {} vs {}", sa.size(), sb.size()));
  for (const auto& [rel, bytes] : sa) {
    auto it = sb.find(rel);
    if (it == sb.end()) return fail("only in the first run: " + rel);
    if (it->second != bytes) return fail("bytes differ: " + rel);
  }
  return {true, fmt::format("{} files byte-identical across two runs ({:.0f} s)", sa.size(), d.seconds)};
}

Outcome frozen_extractor() {
  corpus::SyntheticSpec spec;
  spec.train_harmful = spec.train_harmless = 8;
  spec.test_harmful = spec.test_harmless = 0;
  testing::SyntheticRun run(spec);
  fusion::FusionJudgeModel model(fusion::FusionConfig::toy(), 3);
  const auto data = examples_for(model, run, run.corpus.split(corpus::Split::train), fusion::ContextLayout::judge_ordered);
  const auto before = model.extractor().digest();
  const fusion::Matrix w_o = model.fusion_projections().front().w_o.value;
  const auto log = fusion::train_model(model, data, synthetic_train(100, 4));
  const int steps = log.empty() ? 0 : log.back().step;
  if (steps != 100) return fail(fmt::format("ran {} steps", steps));
  if (model.fusion_projections().front().w_o.value == w_o) return fail("fusion projections did not move");
  for (const auto* p : model.extractor().parameters()) {
    if (!p->frozen) return fail("extractor parameter " + p->name + " is not frozen");
  }
  const auto after = model.extractor().digest();
  return {after == before, fmt::format("digest {}... unchanged after {} steps", after.substr(0, 12), steps)};
}

Outcome ablation_matrix() {
  auto& d = demo();
  if (!d.error.empty()) return fail("demo failed: " + d.error);
  const fs::path dir = d.a.path() / pipeline::layout::ablation_dir;
  for (auto v : evalkit::kAllVariants) {
    const auto file = dir / (std::string(evalkit::to_string(v)) + ".json");
    if (!fs::is_regular_file(file)) return fail("no report for " + std::string(evalkit::to_string(v)));
    const auto report = json::parse(read_text_file(file));
    if (report.at("predictions").empty()) return fail("empty report for " + std::string(evalkit::to_string(v)));
  }
  const auto config = json::parse(read_text_file(d.a.path() / pipeline::layout::config));
  if (config.at("gateway").at("backend") != "mock") return fail("demo did not use the offline backend");

  // wo_SLMJ echoes the judge.
  const auto prefs = pipeline::read_preferences(d.a.path() / pipeline::layout::preferences);
  const auto slmj = json::parse(read_text_file(dir / "wo_SLMJ.json"));
  std::size_t parsed = 0;
  for (const auto& row : slmj.at("predictions")) {
    const auto& p = prefs.at(row.at("meme_id").get<std::string>());
    const Label want = p.status == judge::ParseStatus::parsed ? *p.preferred : Label::harmful;
    if (row.at("label") != corpus::to_string(want)) return fail("wo_SLMJ disagrees with the judge on " + p.meme_id);
    parsed += p.status == judge::ParseStatus::parsed;
  }

  // wo_MF against the same weights run with fusion on and every W_O zeroed.
  corpus::SyntheticSpec spec;
  spec.train_harmful = spec.train_harmless = 8;
  spec.test_harmful = spec.test_harmless = 4;
  testing::SyntheticRun run(spec);
  evalkit::AblationInputs in;
  in.corpus = &run.corpus;
  in.debates = &run.debates;
  in.preferences = &run.preferences;
  in.captions = &run.captions;
  in.direct_preferences = &run.direct;
  in.fusion = fusion::FusionConfig::toy();
  in.train = synthetic_train(24, 4);
  const auto mf = evalkit::run_ablation(evalkit::AblationVariant::wo_MF, in);

  auto off = in.fusion;
  off.fusion_enabled = false;
  fusion::FusionJudgeModel text_only(off, in.train.seed);
  fusion::ExampleSource src{&run.corpus, &run.debates, &run.preferences, &run.captions,
                            fusion::ContextLayout::judge_ordered};
  const auto examples = fusion::build_examples(text_only, run.corpus.split(corpus::Split::train), src, true);
  fusion::train_model(text_only, examples, in.train);
  fusion::FusionJudgeModel zeroed(in.fusion, in.train.seed);
  const auto from = text_only.parameters();
  const auto to = zeroed.parameters();
  if (from.size() != to.size()) return fail("parameter lists differ");
  for (std::size_t i = 0; i < from.size(); ++i) to[i]->value = from[i]->value;
  for (auto& p : zeroed.fusion_projections()) p.w_o.value.setZero();
  double worst = 0.0;
  std::size_t i = 0;
  for (const auto* m : run.corpus.split(corpus::Split::test)) {
    fusion::PredictOptions opts;
    opts.caption = &run.captions.at(m->id);
    const auto p = fusion::predict(zeroed, run.corpus, *m, &run.debates.at(m->id), &run.preferences.at(m->id), opts);
    const auto& q = mf.predictions.at(i++);
    if (q.meme_id != m->id) return fail("wo_MF prediction order");
    worst = std::max({worst, std::abs(p.scores.harmful - q.scores.harmful), std::abs(p.scores.harmless - q.scores.harmless)});
  }
  if (worst > 1e-6) return fail(fmt::format("wo_MF deviates from the W_O=0 model by {:.3g}", worst));
  return {true, fmt::format("10 reports; wo_SLMJ matches {} preferences ({} parsed); wo_MF vs W_O=0 max {:.1g}",
                            slmj.at("predictions").size(), parsed, worst)};
}

Outcome explanation_selection() {
  auto& d = demo();
  if (!d.error.empty()) return fail("demo failed: " + d.error);
  const auto& dir = d.a.path();
  const auto corpus = pipeline::read_run_corpus(dir);
  const auto debates = pipeline::read_debates(dir / pipeline::layout::debates);
  const auto prefs = pipeline::read_preferences(dir / pipeline::layout::preferences);
  const auto ckpt = fusion::load_checkpoint(dir / pipeline::layout::checkpoint);
  std::size_t checked = 0;
  for (const auto& m : corpus.records()) {
    const auto p = fusion::predict(*ckpt.model, corpus, m, &debates.at(m.id), &prefs.at(m.id));
    if (!p.explanation) return fail("no explanation for " + m.id);
    if (p.explanation->stance != p.label) return fail("explanation stance differs from the label on " + m.id);
    if (p.explanation->text != debates.at(m.id).of(p.label).text) return fail("explanation is not the debate rationale");
    ++checked;
  }
  std::vector<json> emitted = read_jsonl(dir / pipeline::layout::predictions);
  for (const auto& e : fs::directory_iterator(dir / pipeline::layout::ablation_dir)) {
    if (e.path().extension() != ".json" || e.path().filename() == "provenance.json") continue;
    const auto report = json::parse(read_text_file(e.path()));
    for (const auto& row : report.at("predictions")) emitted.push_back(row);
  }
  for (const auto& row : emitted) {
    const auto p = fusion::prediction_from_json(row);
    if (p.explanation && p.explanation->stance != p.label) return fail("emitted explanation mismatch on " + p.meme_id);
    checked += p.explanation.has_value();
  }
  return {true, fmt::format("{} corpus memes re-predicted, {} predictions with explanations checked", corpus.size(), checked)};
}

// Writes a dataset replica with exactly the given class counts in the dataset's native layout.
void write_replica(const fs::path& dir, corpus::DatasetKind kind, const corpus::SplitStats& s) {
  const bool fhm = kind == corpus::DatasetKind::fhm;
  const fs::path image = fhm ? dir / "img" / "shared.png" : dir / "images" / "shared.png";
  corpus::write_png_rgb(image, std::vector<std::uint8_t>(3 * 4 * 4, 90), 4, 4);
  const char* harm_raw[] = {"very harmful", "partially harmful"};
  std::size_t next = 0;
  auto rows = [&](const corpus::LabelCounts& c) {
    std::vector<json> out;
    for (std::size_t i = 0; i < c.harmful + c.harmless; ++i) {
      const bool harmful = i < c.harmful;
      const auto id = next++;
      if (fhm) {
        out.push_back({{"id", id}, {"img", "img/shared.png"}, {"label", harmful ? 1 : 0}, {"text", "t"}});
      } else {
        out.push_back({{"id", "r" + std::to_string(id)},
                       {"image", "shared.png"},
                       {"labels", {harmful ? harm_raw[i % 2] : "not harmful"}},
                       {"text", "t"}});
      }
    }
    return out;
  };
  write_jsonl_atomic(dir / "train.jsonl", rows(s.train));
  write_jsonl_atomic(dir / (fhm ? "dev_seen.jsonl" : "test.jsonl"), rows(s.test));
}

void run_ingest(const json& dataset, const fs::path& run_dir) {
  pipeline::Pipeline(pipeline::parse_run_config({{"dataset", dataset}}), run_dir).run_stage(pipeline::Stage::ingest);
}

Outcome ingestion_gate() {
  testing::TempDir tmp("mj-accept-gate");
  std::vector<std::string> passed;
  for (auto kind : {corpus::DatasetKind::harm_c, corpus::DatasetKind::harm_p, corpus::DatasetKind::fhm}) {
    const std::string name(corpus::to_string(kind));
    const auto ref = *corpus::reference_stats(kind);
    const auto data = tmp / ("data-" + name);
    write_replica(data, kind, ref);
    const json dataset = {{"kind", name}, {"path", data.string()}};
    run_ingest(dataset, tmp / ("run-" + name));
    const auto stats = corpus::split_stats(pipeline::read_run_corpus(tmp / ("run-" + name)));
    if (!corpus::check_stats(stats, ref).empty()) return fail(name + " replica stats differ from the reference");
    const auto gate = json::parse(read_text_file(tmp / ("run-" + name) / "corpus/stats.json")).at("gate");
    if (gate != "passed") return fail(name + " gate not applied");

    // One record short must be refused.
    auto lines = read_jsonl(data / "train.jsonl");
    lines.pop_back();
    write_jsonl_atomic(data / "train.jsonl", lines);
    try {
      run_ingest(dataset, tmp / ("short-" + name));
      return fail(name + " replica missing a record passed the gate");
    } catch (const IngestError&) {
    }
    passed.push_back(fmt::format("{} {}/{}/{}/{}", name, ref.train.harmful, ref.train.harmless, ref.test.harmful,
                                 ref.test.harmless));
  }

  // Synthetic data is gated against its own manifest.
  run_ingest({{"kind", "synthetic"}}, tmp / "run-synthetic");
  const auto manifest = corpus::read_synthetic_manifest(tmp / "run-synthetic" / pipeline::layout::synthetic_dir /
                                                        "synthetic_manifest.json");
  if (corpus::split_stats(pipeline::read_run_corpus(tmp / "run-synthetic")) != manifest) return fail("synthetic stats");
  const auto src = corpus::write_synthetic_corpus(tmp / "syn-data", {});
  auto m = json::parse(read_text_file(tmp / "syn-data" / "synthetic_manifest.json"));
  run_ingest({{"kind", "synthetic"}, {"path", src.string()}}, tmp / "run-syn-file");
  write_file_atomic(tmp / "syn-data" / "synthetic_manifest.json", [&] {
    auto edited = m;
    std::function<bool(json&)> bump = [&](json& j) {
      for (auto& [k, v] : j.items()) {
        if (v.is_number_integer()) {
          v = v.get<long>() + 1;
          return true;
        }
        if (v.is_object() && bump(v)) return true;
      }
      return false;
    };
    bump(edited);
    return edited.dump();
  }());
  try {
    run_ingest({{"kind", "synthetic"}, {"path", src.string()}}, tmp / "run-syn-bad");
    return fail("synthetic corpus passed a manifest it does not match");
  } catch (const IngestError&) {
  }
  return {true, "matched " + fmt::format("{}", fmt::join(passed, ", ")) +
                    "; short replicas refused; synthetic gated by its manifest"};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"metrics oracle", metrics_oracle},
      {"gradient check", gradient_check},
      {"fused layer oracle", fused_layer_oracle},
      {"overfit", overfit},
      {"vision pathway", vision_efficacy},
      {"ordering contract", ordering_contract},
      {"prompt goldens", prompt_goldens},
      {"determinism", determinism},
      {"frozen extractor", frozen_extractor},
      {"ablation matrix", ablation_matrix},
      {"explanation selection", explanation_selection},
      {"ingestion gate", ingestion_gate},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    failures += !o.pass;
    std::printf("criterion %2zu %-22s %s  %s [%.1f s]\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
