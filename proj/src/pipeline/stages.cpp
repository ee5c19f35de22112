#include "memejudge/pipeline/stages.hpp"

#include <spdlog/spdlog.h>

#include "memejudge/common/hashing.hpp"
#include "memejudge/common/io.hpp"
#include "memejudge/common/parallel.hpp"
#include "memejudge/evalkit/quality.hpp"
#include "memejudge/fusion/checkpoint.hpp"
#include "memejudge/fusion/predict.hpp"
#include "memejudge/pipeline/artifacts.hpp"
#include "memejudge/pipeline/layout.hpp"

namespace memejudge::pipeline {

namespace {

struct StageName {
  Stage stage;
  std::string_view name;
  std::string_view artifact;
  std::string_view dir;
};

constexpr StageName kStageNames[] = {
    {Stage::ingest, "ingest", "corpus", "corpus"},
    {Stage::debate, "debate", "debate", "debate"},
    {Stage::judge, "judge", "judge preference", "judge"},
    {Stage::train, "train", "checkpoint", "train"},
    {Stage::predict, "predict", "prediction", "predict"},
    {Stage::eval, "eval", "metrics", "eval"},
    {Stage::ablate, "ablate", "ablation", "ablate"},
    {Stage::score_explanations, "score-explanations", "explanation-score", "quality"},
};

const StageName& info(Stage s) {
  for (const auto& n : kStageNames) {
    if (n.stage == s) return n;
  }
  return kStageNames[0];
}

using Outputs = std::vector<std::string>;

struct Ctx {
  const RunConfig& cfg;
  const fs::path& dir;
  const PipelineOptions& options;

  fs::path at(std::string_view rel) const { return dir / fs::path(std::string(rel)); }
};

json read_manifest(const fs::path& dir) {
  const auto p = dir / layout::manifest;
  if (!fs::is_regular_file(p)) return {{"stages", json::object()}};
  return json::parse(read_text_file(p));
}

std::vector<std::string> entry_deps(const std::string& entry) {
  const auto colon = entry.find(':');
  const Stage s = parse_stage(entry.substr(0, colon));
  std::vector<std::string> out;
  for (Stage u : upstream(s)) out.emplace_back(to_string(u));
  return out;
}

json stage_section(const RunConfig& c, const std::string& entry) {
  const auto colon = entry.find(':');
  const Stage s = parse_stage(entry.substr(0, colon));
  const json full = to_json(c);
  switch (s) {
    case Stage::ingest: return full.at("dataset");
    case Stage::debate:
      return {{"backend", c.gateway.backend},
              {"model", c.gateway.debater_model},
              {"mode", debate::to_string(c.gateway.mode)},
              {"prompt_set", c.gateway.prompt_set}};
    case Stage::judge:
      return {{"backend", c.gateway.backend},
              {"model", c.gateway.judge_model},
              {"mode", debate::to_string(c.gateway.mode)},
              {"prompt_set", c.gateway.prompt_set}};
    case Stage::train: return {{"fusion", full.at("fusion")}, {"train", full.at("train")}};
    case Stage::ablate:
      return {{"fusion", full.at("fusion")}, {"train", full.at("train")}, {"variant", entry.substr(colon + 1)}};
    case Stage::score_explanations:
      return {{"model", c.gateway.quality_model}, {"prompt_set", c.gateway.prompt_set}, {"quality", full.at("quality")}};
    default: return json::object();
  }
}

std::string fingerprint_of(const RunConfig& c, const std::string& entry) {
  Sha256 h;
  h.field("stage-v1");
  h.field(entry);
  h.field(canonical_dump(stage_section(c, entry)));
  for (const auto& dep : entry_deps(entry)) h.field(fingerprint_of(c, dep));
  return h.hex_digest();
}

bool outputs_intact(const fs::path& dir, const json& entry) {
  if (!entry.contains("outputs")) return false;
  for (const auto& [rel, digest] : entry.at("outputs").items()) {
    const auto p = dir / rel;
    if (!fs::is_regular_file(p) || sha256_file(p) != digest.get<std::string>()) return false;
  }
  return true;
}

std::shared_ptr<llm::Backend> make_backend(const Ctx& ctx) {
  if (ctx.options.backend) return ctx.options.backend;
  if (ctx.cfg.gateway.backend == "http") return std::make_shared<llm::HttpChatBackend>(llm::http_options_from_env());
  return std::make_shared<llm::MockBackend>();
}

std::unique_ptr<llm::Gateway> make_gateway(const Ctx& ctx) {
  llm::GatewayOptions opts;
  opts.max_retries = ctx.cfg.gateway.max_retries;
  opts.max_in_flight = ctx.cfg.gateway.max_in_flight;
  std::optional<llm::ResponseCache> cache;
  if (ctx.cfg.gateway.cache) cache.emplace(ctx.at(layout::llm_cache));
  return std::make_unique<llm::Gateway>(make_backend(ctx), std::move(cache), opts);
}

template <typename Map>
std::vector<json> rows_in_corpus_order(const corpus::Corpus& corpus, const Map& m) {
  std::vector<json> rows;
  for (const auto& r : corpus.records()) {
    if (auto it = m.find(r.id); it != m.end()) rows.push_back(to_json(it->second));
  }
  return rows;
}

json prompt_row(const std::string& meme_id, std::string_view role, const std::string& version,
                const std::optional<std::string>& system, const std::string& user) {
  return {{"meme_id", meme_id},
          {"role", role},
          {"prompt_version", version},
          {"system", system ? json(*system) : json(nullptr)},
          {"user", user}};
}

// ---- stages ----

Outputs run_ingest(const Ctx& ctx) {
  const auto& d = ctx.cfg.dataset;
  corpus::IngestResult res;
  std::optional<corpus::SplitStats> expected;
  if (d.kind == corpus::DatasetKind::synthetic && !d.path) {
    const auto data = ctx.at(layout::synthetic_dir);
    const auto file = corpus::write_synthetic_corpus(data, d.synthetic);
    corpus::IngestOptions opts;
    opts.dataset = corpus::DatasetKind::synthetic;
    opts.name = "synthetic";
    opts.missing_images = d.missing_images;
    res = corpus::ingest_dataset(file, corpus::SchemaKind::canonical, opts);
    expected = corpus::read_synthetic_manifest(data / "synthetic_manifest.json");
  } else {
    corpus::IngestOptions opts;
    opts.dataset = d.kind;
    opts.fhm_test_split = d.fhm_test_split;
    opts.missing_images = d.missing_images;
    res = corpus::ingest_dataset(*d.path, d.schema, opts);
    if (d.kind == corpus::DatasetKind::synthetic) {
      const auto manifest = (fs::is_directory(*d.path) ? *d.path : d.path->parent_path()) / "synthetic_manifest.json";
      if (fs::is_regular_file(manifest)) expected = corpus::read_synthetic_manifest(manifest);
    } else {
      expected = corpus::reference_stats(d.kind);
    }
  }
  const auto stats = corpus::split_stats(res.corpus);
  if (d.gate) {
    if (expected) {
      const auto problems = corpus::check_stats(stats, *expected);
      if (!problems.empty()) {
        std::string msg = "ingestion gate: split statistics differ from the expected counts";
        for (const auto& p : problems) msg += "\n  - " + p;
        throw IngestError(msg);
      }
      spdlog::info("ingestion gate passed");
    } else {
      spdlog::warn("ingestion gate: no reference statistics for dataset '{}'", corpus::to_string(d.kind));
    }
  }
  write_run_corpus(ctx.dir, res.corpus, d.kind);
  auto counts = [](const corpus::LabelCounts& c) {
    return json{{"harmful", c.harmful}, {"harmless", c.harmless}, {"unlabeled", c.unlabeled}};
  };
  json stats_json = {{"train", counts(stats.train)},
                     {"test", counts(stats.test)},
                     {"skipped_ids", res.skipped_ids},
                     {"test_split_source", res.test_split_source},
                     {"gate", d.gate && expected ? "passed" : "not-applied"}};
  write_file_atomic(ctx.at("corpus/stats.json"), canonical_dump(stats_json, 2) + "\n");
  spdlog::info("ingested {} memes ({} skipped)", res.corpus.size(), res.skipped_ids.size());
  return {std::string(layout::corpus), std::string(layout::corpus_meta), "corpus/stats.json"};
}

debate::DebateSettings settings_for(const RunConfig& c, const std::string& model) {
  debate::DebateSettings s;
  s.model_id = model;
  s.mode = c.gateway.mode;
  s.prompt_set = c.gateway.prompt_set;
  return s;
}

Outputs run_debate_stage(const Ctx& ctx) {
  const auto corpus = read_run_corpus(ctx.dir);
  auto gw = make_gateway(ctx);
  const auto settings = settings_for(ctx.cfg, ctx.cfg.gateway.debater_model);
  const auto& recs = corpus.records();

  std::vector<std::optional<debate::CaptionRecord>> caps(recs.size());
  std::vector<std::string> caption_errors(recs.size());
  parallel_for(recs.size(), ctx.cfg.gateway.workers, [&](std::size_t i) {
    try {
      caps[i] = debate::caption_image(corpus, recs[i], *gw, settings);
    } catch (const debate::DebateError& e) {
      caption_errors[i] = e.what();
    }
  });
  std::map<std::string, debate::CaptionRecord> captions;
  std::vector<json> failures;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (caps[i]) captions.emplace(recs[i].id, *caps[i]);
    else failures.push_back({{"meme_id", recs[i].id}, {"stage", "caption"}, {"stance", nullptr}, {"message", caption_errors[i]}});
  }

  std::vector<const corpus::MemeRecord*> memes;
  for (const auto& r : recs) memes.push_back(&r);
  auto batch = debate::run_debates(corpus, memes, *gw, settings, captions, ctx.cfg.gateway.workers);
  for (const auto& f : batch.failures) {
    failures.push_back({{"meme_id", f.meme_id},
                        {"stage", "debate"},
                        {"stance", f.stance ? json(corpus::to_string(*f.stance)) : json(nullptr)},
                        {"message", f.message}});
  }
  if (batch.records.empty()) throw Error("debate: no meme produced a complete debate");

  std::vector<json> debates, prompts;
  for (const auto& d : batch.records) {
    debates.push_back(debate::to_json(d));
    const auto& m = corpus.at(d.meme_id());
    for (auto stance : {corpus::Label::harmless, corpus::Label::harmful}) {
      if (settings.mode == debate::DebateMode::vision) {
        prompts.push_back(prompt_row(m.id, corpus::to_string(stance),
                                     prompts::prompt_version(prompts::names::debater, settings.prompt_set), std::nullopt,
                                     debate::build_debater_prompt(m, stance, settings.prompt_set)));
      } else {
        auto p = debate::build_text_debater_prompt(m, captions.at(m.id), stance, settings.prompt_set);
        prompts.push_back(prompt_row(m.id, corpus::to_string(stance),
                                     prompts::prompt_version(prompts::names::text_debater_user, settings.prompt_set),
                                     p.system, p.user));
      }
    }
  }
  write_jsonl_atomic(ctx.at(layout::debates), debates);
  write_jsonl_atomic(ctx.at(layout::captions), rows_in_corpus_order(corpus, captions));
  write_jsonl_atomic(ctx.at(layout::debate_prompts), prompts);
  write_jsonl_atomic(ctx.at("debate/failures.jsonl"), failures);
  spdlog::info("debated {} memes, {} failures", batch.records.size(), failures.size());
  return {std::string(layout::debates), std::string(layout::captions), std::string(layout::debate_prompts),
          "debate/failures.jsonl"};
}

Outputs run_judge_stage(const Ctx& ctx) {
  const auto corpus = read_run_corpus(ctx.dir);
  const auto debates = read_debates(ctx.at(layout::debates));
  const auto captions = read_captions(ctx.at(layout::captions));
  auto gw = make_gateway(ctx);
  const auto settings = settings_for(ctx.cfg, ctx.cfg.gateway.judge_model);
  std::vector<const corpus::MemeRecord*> memes;
  for (const auto& r : corpus.records()) {
    if (debates.count(r.id)) memes.push_back(&r);
  }
  std::vector<judge::JudgePreference> prefs(memes.size()), direct(memes.size());
  const bool text = settings.mode != debate::DebateMode::vision;
  parallel_for(memes.size(), ctx.cfg.gateway.workers, [&](std::size_t i) {
    const auto& m = *memes[i];
    auto cit = captions.find(m.id);
    const debate::CaptionRecord* cap = cit == captions.end() ? nullptr : &cit->second;
    if (text && cap == nullptr) throw ValidationError("judge: meme '" + m.id + "' has no caption for text mode");
    prefs[i] = judge::adjudicate(corpus, m, debates.at(m.id), *gw, settings, cap);
    direct[i] = judge::ask_directly(corpus, m, *gw, settings, cap);
  });
  std::vector<json> pref_rows, direct_rows, prompt_rows;
  std::size_t parsed = 0;
  for (std::size_t i = 0; i < memes.size(); ++i) {
    const auto& m = *memes[i];
    pref_rows.push_back(judge::to_json(prefs[i]));
    direct_rows.push_back(judge::to_json(direct[i]));
    parsed += prefs[i].status == judge::ParseStatus::parsed;
    if (!text) {
      prompt_rows.push_back(prompt_row(m.id, "judge", prompts::prompt_version(prompts::names::judge, settings.prompt_set),
                                       std::nullopt, judge::build_judge_prompt(m, debates.at(m.id), settings.prompt_set)));
    } else {
      auto p = judge::build_text_judge_prompt(m, &captions.at(m.id), debates.at(m.id), settings.prompt_set);
      prompt_rows.push_back(prompt_row(m.id, "judge",
                                       prompts::prompt_version(prompts::names::text_judge_user, settings.prompt_set),
                                       p.system, p.user));
    }
  }
  write_jsonl_atomic(ctx.at(layout::preferences), pref_rows);
  write_jsonl_atomic(ctx.at(layout::direct_preferences), direct_rows);
  write_jsonl_atomic(ctx.at(layout::judge_prompts), prompt_rows);
  spdlog::info("judged {} memes, {} parsed preferences", memes.size(), parsed);
  return {std::string(layout::preferences), std::string(layout::direct_preferences), std::string(layout::judge_prompts)};
}

std::vector<const corpus::MemeRecord*> with_debates(const std::vector<const corpus::MemeRecord*>& memes,
                                                    const std::map<std::string, debate::DebateRecord>& debates) {
  std::vector<const corpus::MemeRecord*> out;
  for (const auto* m : memes) {
    if (debates.count(m->id)) out.push_back(m);
  }
  if (out.size() < memes.size()) spdlog::warn("{} memes without debate records skipped", memes.size() - out.size());
  return out;
}

Outputs run_train(const Ctx& ctx) {
  const auto corpus = read_run_corpus(ctx.dir);
  const auto debates = read_debates(ctx.at(layout::debates));
  const auto prefs = read_preferences(ctx.at(layout::preferences));
  fusion::FusionJudgeModel model(ctx.cfg.fusion, ctx.cfg.train.seed);
  std::vector<const corpus::MemeRecord*> memes;
  for (const auto* m : with_debates(corpus.split(corpus::Split::train), debates)) {
    if (m->label) memes.push_back(m);
  }
  if (memes.empty()) throw Error("train: no labeled training memes with debate records");
  fusion::ExampleSource src{&corpus, &debates, &prefs, nullptr, fusion::ContextLayout::judge_ordered};
  const auto examples = fusion::build_examples(model, memes, src, true);
  fusion::TrainHooks hooks;
  hooks.on_epoch = [](const fusion::EpochRecord& e) {
    spdlog::info("epoch {} step {} loss {:.4f} train_acc {:.4f}", e.epoch, e.step, e.loss, e.train_acc);
  };
  const auto log = fusion::train_model(model, examples, ctx.cfg.train, hooks);
  fusion::CheckpointMeta meta;
  meta.fusion = ctx.cfg.fusion;
  meta.train = ctx.cfg.train;
  meta.layout = fusion::ContextLayout::judge_ordered;
  meta.data_fingerprints = {{"corpus", sha256_file(ctx.at(layout::corpus))},
                            {"debates", sha256_file(ctx.at(layout::debates))},
                            {"preferences", sha256_file(ctx.at(layout::preferences))}};
  fusion::save_checkpoint(ctx.at(layout::checkpoint), model, meta);
  std::vector<json> rows;
  for (const auto& e : log) rows.push_back(fusion::to_json(e));
  write_jsonl_atomic(ctx.at(layout::train_log), rows);
  return {std::string(layout::checkpoint), std::string(layout::train_log)};
}

std::vector<const corpus::MemeRecord*> prediction_memes(const corpus::Corpus& corpus) {
  auto test = corpus.split(corpus::Split::test);
  if (!test.empty()) return test;
  std::vector<const corpus::MemeRecord*> all;
  for (const auto& r : corpus.records()) all.push_back(&r);
  return all;
}

Outputs run_predict(const Ctx& ctx) {
  const auto corpus = read_run_corpus(ctx.dir);
  const auto debates = read_debates(ctx.at(layout::debates));
  const auto prefs = read_preferences(ctx.at(layout::preferences));
  const auto ckpt = fusion::load_checkpoint(ctx.at(layout::checkpoint));
  fusion::PredictOptions opts;
  opts.layout = ckpt.meta.layout;
  std::vector<json> rows;
  for (const auto* m : with_debates(prediction_memes(corpus), debates)) {
    auto pit = prefs.find(m->id);
    rows.push_back(fusion::to_json(fusion::predict(ckpt, ctx.cfg.fusion, corpus, *m, &debates.at(m->id),
                                                   pit == prefs.end() ? nullptr : &pit->second, opts)));
  }
  write_jsonl_atomic(ctx.at(layout::predictions), rows);
  spdlog::info("predicted {} memes", rows.size());
  return {std::string(layout::predictions)};
}

Outputs run_eval(const Ctx& ctx) {
  const auto corpus = read_run_corpus(ctx.dir);
  const auto preds = read_predictions(ctx.at(layout::predictions));
  std::vector<corpus::Label> golds, labels;
  for (const auto& r : corpus.records()) {
    auto it = preds.find(r.id);
    if (it == preds.end() || !r.label) continue;
    golds.push_back(*r.label);
    labels.push_back(it->second.label);
  }
  if (golds.empty()) throw Error("eval: no predictions with gold labels");
  const auto report = evalkit::compute_metrics(golds, labels);
  json out = {{"metrics", evalkit::to_json(report)}, {"predictions", preds.size()}, {"labeled", golds.size()}};
  write_file_atomic(ctx.at(layout::metrics), canonical_dump(out, 2) + "\n");
  spdlog::info("accuracy {:.4f} macro-F1 {:.4f} over {} memes", report.accuracy, report.macro_f1, report.n);
  return {std::string(layout::metrics)};
}

Outputs run_ablate_variant(const Ctx& ctx, evalkit::AblationVariant v) {
  const auto corpus = read_run_corpus(ctx.dir);
  const auto debates = read_debates(ctx.at(layout::debates));
  const auto prefs = read_preferences(ctx.at(layout::preferences));
  const auto captions = read_captions(ctx.at(layout::captions));
  const auto direct = read_preferences(ctx.at(layout::direct_preferences));
  // Memes whose debate failed are left out of every variant so the reports stay comparable.
  std::vector<corpus::MemeRecord> kept;
  for (const auto& r : corpus.records()) {
    if (debates.count(r.id)) kept.push_back(r);
  }
  const corpus::Corpus usable(corpus.name(), kept, corpus.image_root());
  evalkit::AblationInputs in;
  in.corpus = &usable;
  in.debates = &debates;
  in.preferences = &prefs;
  in.captions = &captions;
  in.direct_preferences = &direct;
  in.fusion = ctx.cfg.fusion;
  in.train = ctx.cfg.train;
  const auto result = evalkit::run_ablation(v, in);
  const std::string rel = std::string(layout::ablation_dir) + "/" + std::string(evalkit::to_string(v)) + ".json";
  write_file_atomic(ctx.at(rel), canonical_dump(evalkit::to_json(result), 2) + "\n");
  return {rel};
}

Outputs run_score(const Ctx& ctx) {
  const auto corpus = read_run_corpus(ctx.dir);
  const auto debates = read_debates(ctx.at(layout::debates));
  const auto captions = read_captions(ctx.at(layout::captions));
  const auto preds = read_predictions(ctx.at(layout::predictions));
  std::map<std::string, std::string> human;
  if (ctx.cfg.quality.human_explanations) {
    for (const auto& row : read_jsonl(*ctx.cfg.quality.human_explanations)) {
      human[row.at("meme_id").get<std::string>()] = row.at("text").get<std::string>();
    }
  }
  auto gw = make_gateway(ctx);
  std::vector<json> rows, failures;
  std::vector<evalkit::ExplanationScores> all;
  int scored = 0;
  for (const auto& r : corpus.records()) {
    auto pit = preds.find(r.id);
    if (pit == preds.end()) continue;
    // Gold-harmful memes; the prediction stands in when the meme is unlabeled.
    if (r.label.value_or(pit->second.label) != corpus::Label::harmful) continue;
    if (!debates.count(r.id) || !captions.count(r.id)) continue;
    if (ctx.cfg.quality.max_memes && scored >= *ctx.cfg.quality.max_memes) break;
    const auto& d = debates.at(r.id);
    const auto label = corpus::Label::harmful;
    std::vector<evalkit::QualityCandidate> cands{{"selected", d.of(label).text},
                                                 {"counter", d.of(corpus::opposite(label)).text}};
    if (auto h = human.find(r.id); h != human.end()) cands.push_back({"human", h->second});
    try {
      auto s = evalkit::score_explanations(r, captions.at(r.id), cands, *gw, ctx.cfg.gateway.quality_model, label,
                                           ctx.cfg.quality.strict);
      for (auto& e : s) {
        rows.push_back(evalkit::to_json(e));
        all.push_back(std::move(e));
      }
      ++scored;
    } catch (const ParseError& e) {
      failures.push_back({{"meme_id", r.id}, {"message", e.what()}, {"raw", e.raw()}});
    }
  }
  json summary = json::array();
  for (const auto& s : evalkit::aggregate_scores(all)) summary.push_back(evalkit::to_json(s));
  write_jsonl_atomic(ctx.at(layout::quality_scores), rows);
  write_jsonl_atomic(ctx.at("quality/failures.jsonl"), failures);
  write_file_atomic(ctx.at(layout::quality_summary),
                    canonical_dump({{"memes", scored}, {"summary", summary}}, 2) + "\n");
  spdlog::info("scored explanations for {} memes ({} parse failures)", scored, failures.size());
  return {std::string(layout::quality_scores), std::string(layout::quality_summary), "quality/failures.jsonl"};
}

}  // namespace

std::string_view to_string(Stage s) noexcept { return info(s).name; }

Stage parse_stage(std::string_view text) {
  for (const auto& n : kStageNames) {
    if (n.name == text) return n.stage;
  }
  std::string known;
  for (const auto& n : kStageNames) known += (known.empty() ? "" : ", ") + std::string(n.name);
  throw ValidationError("unknown stage '" + std::string(text) + "' (known: " + known + ")");
}

std::string_view artifact_name(Stage s) noexcept { return info(s).artifact; }

std::vector<Stage> upstream(Stage s) {
  switch (s) {
    case Stage::ingest: return {};
    case Stage::debate: return {Stage::ingest};
    case Stage::judge: return {Stage::debate};
    case Stage::train: return {Stage::judge};
    case Stage::predict: return {Stage::train};
    case Stage::eval: return {Stage::predict};
    case Stage::ablate: return {Stage::judge};
    case Stage::score_explanations: return {Stage::predict};
  }
  return {};
}

MissingStageArtifact::MissingStageArtifact(Stage stage, Stage missing)
    : Error("stage '" + std::string(to_string(stage)) + "' requires " + std::string(artifact_name(missing)) +
            " artifact; run stage '" + std::string(to_string(missing)) + "' first"),
      missing_(missing) {}

Pipeline::Pipeline(RunConfig config, fs::path run_dir, PipelineOptions options)
    : config_(std::move(config)), run_dir_(std::move(run_dir)), options_(std::move(options)) {}

std::string Pipeline::stage_fingerprint(const std::string& entry) const { return fingerprint_of(config_, entry); }

json Pipeline::manifest() const { return read_manifest(run_dir_); }

std::vector<StageResult> Pipeline::run_stage(Stage stage, std::optional<evalkit::AblationVariant> variant) {
  fs::create_directories(run_dir_);
  json manifest = read_manifest(run_dir_);
  auto& entries = manifest["stages"];

  // Every stage entry we depend on must exist and match the current config, transitively.
  std::function<void(Stage)> check = [&](Stage s) {
    for (Stage u : upstream(s)) {
      const std::string name(to_string(u));
      if (!entries.contains(name) || !outputs_intact(run_dir_, entries[name])) throw MissingStageArtifact(stage, u);
      if (entries[name].at("fingerprint") != stage_fingerprint(name)) {
        throw StaleArtifact("stage '" + std::string(to_string(stage)) + "': the " + std::string(artifact_name(u)) +
                            " artifact was produced with a different configuration; re-run stage '" + name + "'");
      }
      check(u);
    }
  };
  check(stage);

  std::vector<std::string> names;
  if (stage == Stage::ablate) {
    std::vector<evalkit::AblationVariant> vs = variant ? std::vector{*variant} : config_.ablation.variants;
    for (auto v : vs) names.push_back("ablate:" + std::string(evalkit::to_string(v)));
  } else {
    names.emplace_back(to_string(stage));
  }

  const Ctx ctx{config_, run_dir_, options_};
  const std::string run_fp = config_fingerprint(config_);
  std::vector<StageResult> results;
  for (const auto& name : names) {
    const std::string fp = stage_fingerprint(name);
    if (entries.contains(name) && entries[name].at("fingerprint") == fp && outputs_intact(run_dir_, entries[name])) {
      spdlog::info("stage {}: up to date, skipped", name);
      StageResult r{name, true, {}};
      for (const auto& [rel, _] : entries[name].at("outputs").items()) r.outputs.push_back(rel);
      results.push_back(std::move(r));
      continue;
    }
    spdlog::info("stage {}: running", name);
    Outputs outs;
    switch (stage) {
      case Stage::ingest: outs = run_ingest(ctx); break;
      case Stage::debate: outs = run_debate_stage(ctx); break;
      case Stage::judge: outs = run_judge_stage(ctx); break;
      case Stage::train: outs = run_train(ctx); break;
      case Stage::predict: outs = run_predict(ctx); break;
      case Stage::eval: outs = run_eval(ctx); break;
      case Stage::ablate: outs = run_ablate_variant(ctx, evalkit::parse_variant(name.substr(7))); break;
      case Stage::score_explanations: outs = run_score(ctx); break;
    }
    json entry = {{"fingerprint", fp}, {"config_fingerprint", run_fp}, {"inputs", json::object()}, {"outputs", json::object()}};
    for (const auto& dep : entry_deps(name)) {
      entry["inputs"][dep] = {{"fingerprint", entries[dep].at("fingerprint")}, {"outputs", entries[dep].at("outputs")}};
    }
    for (const auto& rel : outs) entry["outputs"][rel] = sha256_file(run_dir_ / rel);
    entries[name] = entry;

    // Provenance sidecar next to the outputs.
    const auto prov_path = run_dir_ / std::string(info(stage).dir) / "provenance.json";
    json prov = fs::is_regular_file(prov_path) ? json::parse(read_text_file(prov_path)) : json::object();
    prov[name] = entry;
    write_file_atomic(prov_path, canonical_dump(prov, 2) + "\n");
    manifest["config_fingerprint"] = run_fp;
    write_file_atomic(run_dir_ / layout::manifest, canonical_dump(manifest, 2) + "\n");
    results.push_back({name, false, outs});
  }
  json normalized = to_json(config_);
  normalized.erase("output_dir");
  write_file_atomic(run_dir_ / layout::config, canonical_dump(normalized, 2) + "\n");
  return results;
}

std::vector<StageResult> Pipeline::run_all() {
  std::vector<StageResult> out;
  for (Stage s : kAllStages) {
    auto r = run_stage(s);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

RunConfig demo_config(std::uint64_t seed) {
  json j = {{"seed", seed}, {"dataset", {{"kind", "synthetic"}}}};
  return parse_run_config(j);
}

}  // namespace memejudge::pipeline
