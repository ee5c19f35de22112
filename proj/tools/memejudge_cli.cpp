// memejudge command line: pipeline stages, demo, and the review service.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "memejudge/common/errors.hpp"
#include "memejudge/common/io.hpp"
#include "memejudge/modserve/service.hpp"
#include "memejudge/pipeline/layout.hpp"
#include "memejudge/pipeline/stages.hpp"

using namespace memejudge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kStageFailure = 2;

struct Flags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string stage;
  std::string variant;
  std::string host;
  std::optional<int> port;
  std::string static_dir;
  bool verbose = false;
  bool quiet = false;
};

// Thrown for problems the user fixes on the command line or in the config file.
struct UsageError : Error {
  using Error::Error;
};

pipeline::RunConfig resolve_config(const Flags& f, bool demo) {
  json j = json::object();
  fs::path base;
  if (!f.config.empty()) {
    const fs::path p(f.config);
    if (!fs::is_regular_file(p)) throw ConfigError({"config: file not found: " + p.string()});
    try {
      j = json::parse(read_text_file(p));
    } catch (const json::parse_error& e) {
      throw ConfigError({"config: " + p.string() + " is not valid JSON: " + e.what()});
    }
    base = p.parent_path();
  } else if (demo) {
    j = pipeline::to_json(pipeline::demo_config());
    j.erase("output_dir");
    j["train"].erase("seed");
  }
  if (f.seed) j["seed"] = *f.seed;
  return pipeline::parse_run_config(j, base);
}

fs::path run_dir(const Flags& f, const pipeline::RunConfig& c, const char* fallback) {
  if (!f.out.empty()) return f.out;
  if (c.output_dir) return *c.output_dir;
  return fallback;
}

void print_results(const std::vector<pipeline::StageResult>& results) {
  for (const auto& r : results) {
    std::cout << (r.skipped ? "skipped " : "done    ") << r.name;
    for (const auto& o : r.outputs) std::cout << "\n          " << o;
    std::cout << "\n";
  }
}

int run_stages(const Flags& f, std::optional<pipeline::Stage> stage) {
  const auto cfg = resolve_config(f, false);
  const auto dir = run_dir(f, cfg, "memejudge-run");
  std::optional<evalkit::AblationVariant> variant;
  if (!f.variant.empty()) {
    if (stage != pipeline::Stage::ablate) throw UsageError("--variant only applies to the ablate stage");
    try {
      variant = evalkit::parse_variant(f.variant);
    } catch (const ValidationError& e) {
      throw UsageError(e.what());
    }
  }
  pipeline::Pipeline p(cfg, dir);
  print_results(stage ? p.run_stage(*stage, variant) : p.run_all());
  return kOk;
}

int demo(const Flags& f) {
  const auto cfg = resolve_config(f, true);
  const auto dir = run_dir(f, cfg, "memejudge-demo");
  pipeline::Pipeline p(cfg, dir);
  print_results(p.run_all());
  const auto metrics = json::parse(read_text_file(dir / pipeline::layout::metrics));
  const auto& m = metrics.at("metrics");
  std::printf("\nrun directory  %s\naccuracy       %.4f\nmacro-F1       %.4f\n", dir.string().c_str(),
              m.at("accuracy").get<double>(), m.at("macro_f1").get<double>());
  std::printf("review with   memejudge serve --out %s\n", dir.string().c_str());
  return kOk;
}

int serve(const Flags& f) {
  std::optional<pipeline::RunConfig> cfg;
  if (!f.config.empty()) cfg = resolve_config(f, false);
  fs::path dir = f.out.empty() && cfg && cfg->output_dir ? *cfg->output_dir : fs::path(f.out);
  if (dir.empty()) throw UsageError("serve needs a run directory (--out or output_dir in the config)");

  modserve::ServerOptions opts;
  if (cfg) {
    opts.host = cfg->serve.host;
    opts.port = cfg->serve.port;
    opts.static_dir = cfg->serve.static_dir;
  }
  if (!f.host.empty()) opts.host = f.host;
  if (f.port) opts.port = *f.port;
  if (!f.static_dir.empty()) opts.static_dir = fs::path(f.static_dir);

  modserve::ReviewService service(modserve::load_run(dir), dir / pipeline::layout::decisions);
  modserve::HttpServer server(service, opts);

  // SIGINT/SIGTERM are taken synchronously by a watcher thread, which stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    spdlog::info("signal {}, shutting down", sig);
    server.stop();
  });
  server.run([&](int port) {
    std::printf("serving %s on http://%s:%d\n", dir.string().c_str(), opts.host.c_str(), port);
    std::fflush(stdout);
  });
  // run() returned on its own (bind failure): release the watcher.
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  return kOk;
}

int show_config(const Flags& f) {
  const auto cfg = resolve_config(f, false);
  std::cout << canonical_dump(pipeline::to_json(cfg), 2) << "\n"
            << "fingerprint " << pipeline::config_fingerprint(cfg) << "\n";
  return kOk;
}

void report(const std::exception& e) { std::cerr << "memejudge: " << e.what() << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"memejudge: explainable harmful meme detection"};
  app.require_subcommand(1);
  Flags f;
  app.add_flag("-v,--verbose", f.verbose, "Debug logging");
  app.add_flag("-q,--quiet", f.quiet, "Warnings and errors only");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", f.config, "Run configuration (JSON)");
    sub->add_option("--out", f.out, "Run directory");
    sub->add_option("--seed", f.seed, "Overrides the configured seed");
  };

  std::optional<pipeline::Stage> chosen;
  std::string command;
  for (pipeline::Stage s : pipeline::kAllStages) {
    const std::string name(pipeline::to_string(s));
    auto* sub = app.add_subcommand(name, "Run the " + name + " stage");
    add_common(sub);
    if (s == pipeline::Stage::ablate) sub->add_option("--variant", f.variant, "Run a single ablation variant");
    sub->callback([&, s] {
      command = "stage";
      chosen = s;
    });
  }
  auto* run = app.add_subcommand("run", "Run one stage (--stage) or the whole pipeline");
  add_common(run);
  run->add_option("--stage", f.stage, "Stage name");
  run->add_option("--variant", f.variant, "Ablation variant (with --stage ablate)");
  run->callback([&] { command = "run"; });

  auto* demo_cmd = app.add_subcommand("demo", "Synthetic corpus and mock gateway, end to end");
  add_common(demo_cmd);
  demo_cmd->callback([&] { command = "demo"; });

  auto* serve_cmd = app.add_subcommand("serve", "Serve a finished run to the review console");
  add_common(serve_cmd);
  serve_cmd->add_option("--host", f.host, "Bind address");
  serve_cmd->add_option("--port", f.port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--static", f.static_dir, "Directory of console assets served at /");
  serve_cmd->callback([&] { command = "serve"; });

  auto* config_cmd = app.add_subcommand("config", "Validate a configuration and print it normalized");
  add_common(config_cmd);
  config_cmd->callback([&] { command = "config"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  spdlog::set_level(f.quiet ? spdlog::level::warn : f.verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (command == "run") {
      if (!f.stage.empty()) {
        try {
          chosen = pipeline::parse_stage(f.stage);
        } catch (const ValidationError& e) {
          throw UsageError(e.what());
        }
      }
      return run_stages(f, chosen);
    }
    if (command == "stage") return run_stages(f, chosen);
    if (command == "demo") return demo(f);
    if (command == "serve") return serve(f);
    if (command == "config") return show_config(f);
  } catch (const ConfigError& e) {
    report(e);
    return kUsage;
  } catch (const UsageError& e) {
    report(e);
    return kUsage;
  } catch (const std::exception& e) {
    report(e);
    return kStageFailure;
  }
  return kUsage;
}
