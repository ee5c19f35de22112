#pragma once

#include <map>
#include <memory>
#include <string>

#include "fixtures.hpp"
#include "memejudge/corpus/ingest.hpp"
#include "memejudge/corpus/synthetic.hpp"
#include "memejudge/debate/debate.hpp"
#include "memejudge/judge/judge.hpp"
#include "memejudge/llm/backend.hpp"
#include "memejudge/llm/gateway.hpp"

namespace memejudge::testing {

// Synthetic corpus plus every LLM artifact, produced with the mock backend.
struct SyntheticRun {
  TempDir dir{"mj-run"};
  corpus::Corpus corpus;
  std::map<std::string, debate::DebateRecord> debates;
  std::map<std::string, judge::JudgePreference> preferences;
  std::map<std::string, debate::CaptionRecord> captions;
  std::map<std::string, judge::JudgePreference> direct;

  explicit SyntheticRun(const corpus::SyntheticSpec& spec = {}) {
    const auto path = corpus::write_synthetic_corpus(dir.path() / "corpus", spec);
    corpus::IngestOptions opts;
    opts.dataset = corpus::DatasetKind::synthetic;
    corpus = corpus::ingest_dataset(path, corpus::SchemaKind::canonical, opts).corpus;
    llm::Gateway gw(std::make_shared<llm::MockBackend>(), std::nullopt);
    debate::DebateSettings settings;
    for (const auto& m : corpus.records()) {
      auto d = debate::run_debate(corpus, m, gw, settings);
      preferences.emplace(m.id, judge::adjudicate(corpus, m, d, gw, settings));
      debates.emplace(m.id, std::move(d));
      captions.emplace(m.id, debate::caption_image(corpus, m, gw, settings));
      direct.emplace(m.id, judge::ask_directly(corpus, m, gw, settings));
    }
  }
};

}  // namespace memejudge::testing
