// Python bindings. Structured values cross the boundary as JSON text; the memejudge package
// wraps them into dicts.

#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <spdlog/spdlog.h>

#include "memejudge/corpus/ingest.hpp"
#include "memejudge/debate/debate.hpp"
#include "memejudge/evalkit/metrics.hpp"
#include "memejudge/judge/judge.hpp"
#include "memejudge/modserve/service.hpp"
#include "memejudge/pipeline/config.hpp"
#include "memejudge/pipeline/layout.hpp"
#include "memejudge/pipeline/stages.hpp"

namespace py = pybind11;
using namespace memejudge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::vector<corpus::Label> labels(const std::vector<std::string>& raw) {
  std::vector<corpus::Label> out;
  out.reserve(raw.size());
  for (const auto& r : raw) out.push_back(corpus::parse_label(r));
  return out;
}

json results_json(const std::vector<pipeline::StageResult>& results) {
  json out = json::array();
  for (const auto& r : results) out.push_back({{"name", r.name}, {"skipped", r.skipped}, {"outputs", r.outputs}});
  return out;
}

pipeline::RunConfig config_from(const std::string& text, const fs::path& base_dir) {
  return pipeline::parse_run_config(json::parse(text), base_dir);
}

// Review server running on a background thread.
class Server {
 public:
  Server(const fs::path& run_dir, std::string host, int port, std::optional<fs::path> static_dir)
      : service_(modserve::load_run(run_dir), run_dir / pipeline::layout::decisions) {
    options_.host = std::move(host);
    options_.port = port;
    options_.static_dir = std::move(static_dir);
  }
  ~Server() { stop(); }

  int start() {
    if (thread_.joinable()) return port_;
    server_ = std::make_unique<modserve::HttpServer>(service_, options_);
    thread_ = std::thread([this] {
      try {
        server_->run([this](int port) {
          std::lock_guard lock(mu_);
          port_ = port;
          cv_.notify_all();
        });
      } catch (const std::exception& e) {
        spdlog::error("review server: {}", e.what());
      }
      std::lock_guard lock(mu_);
      finished_ = true;
      cv_.notify_all();
    });
    std::unique_lock lock(mu_);
    cv_.wait(lock, [this] { return port_ > 0 || finished_; });
    if (port_ <= 0) {
      lock.unlock();
      thread_.join();
      throw Error("review server failed to bind " + options_.host + ":" + std::to_string(options_.port));
    }
    return port_;
  }

  void stop() {
    if (!thread_.joinable()) return;
    server_->stop();
    thread_.join();
    server_.reset();
    port_ = 0;
    finished_ = false;
  }

  int port() const { return port_; }
  const std::string& host() const { return options_.host; }

 private:
  modserve::ReviewService service_;
  modserve::ServerOptions options_;
  std::unique_ptr<modserve::HttpServer> server_;
  std::thread thread_;
  std::mutex mu_;
  std::condition_variable cv_;
  int port_ = 0;
  bool finished_ = false;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "memejudge core bindings";
  m.attr("__version__") = MEMEJUDGE_VERSION;

  static py::exception<Error> error(m, "Error");
  static py::exception<ConfigError> config_error(m, "ConfigError", error.ptr());
  static py::exception<ValidationError> validation_error(m, "ValidationError", error.ptr());
  static py::exception<NotFoundError> not_found_error(m, "NotFoundError", error.ptr());
  static py::exception<IngestError> ingest_error(m, "IngestError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const ValidationError& e) {
      py::set_error(validation_error, e.what());
    } catch (const NotFoundError& e) {
      py::set_error(not_found_error, e.what());
    } catch (const IngestError& e) {
      py::set_error(ingest_error, e.what());
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("set_log_level", [](const std::string& level) { spdlog::set_level(spdlog::level::from_str(level)); },
        py::arg("level"));

  m.def("merge_labels", [](const std::string& raw) { return std::string(corpus::to_string(corpus::merge_labels(raw))); },
        py::arg("raw"));

  m.def(
      "compute_metrics",
      [](const std::vector<std::string>& golds, const std::vector<std::string>& preds) {
        const auto g = labels(golds), p = labels(preds);
        return evalkit::to_json(evalkit::compute_metrics(g, p)).dump();
      },
      py::arg("golds"), py::arg("preds"));

  m.def(
      "parse_preference",
      [](const std::string& raw) {
        const auto p = judge::parse_preference(raw);
        return json{{"stance", p.stance ? json(std::string(corpus::to_string(*p.stance))) : json(nullptr)},
                    {"status", std::string(judge::to_string(p.status))}}
            .dump();
      },
      py::arg("raw"));

  m.def(
      "debater_prompt",
      [](const std::string& text, const std::string& stance) {
        corpus::MemeRecord meme;
        meme.text = text;
        return debate::build_debater_prompt(meme, corpus::parse_label(stance));
      },
      py::arg("text"), py::arg("stance"));

  m.def(
      "judge_prompt",
      [](const std::string& text, const std::string& harmless, const std::string& harmful) {
        corpus::MemeRecord meme;
        meme.id = "py";
        meme.text = text;
        const debate::DebateRecord record({corpus::Label::harmless, harmless, "", "", meme.id},
                                          {corpus::Label::harmful, harmful, "", "", meme.id});
        return judge::build_judge_prompt(meme, record);
      },
      py::arg("text"), py::arg("harmless"), py::arg("harmful"));

  m.def(
      "normalize_config",
      [](const std::string& text, const fs::path& base_dir) { return pipeline::to_json(config_from(text, base_dir)).dump(); },
      py::arg("config"), py::arg("base_dir") = fs::path());

  m.def("demo_config", [](std::uint64_t seed) { return pipeline::to_json(pipeline::demo_config(seed)).dump(); },
        py::arg("seed") = 13);

  m.def(
      "run_stage",
      [](const std::string& config, const fs::path& run_dir, const std::string& stage,
         std::optional<std::string> variant) {
        const auto cfg = config_from(config, {});
        const auto s = pipeline::parse_stage(stage);
        std::optional<evalkit::AblationVariant> v;
        if (variant) v = evalkit::parse_variant(*variant);
        py::gil_scoped_release release;
        return results_json(pipeline::Pipeline(cfg, run_dir).run_stage(s, v)).dump();
      },
      py::arg("config"), py::arg("run_dir"), py::arg("stage"), py::arg("variant") = std::nullopt);

  m.def(
      "run_all",
      [](const std::string& config, const fs::path& run_dir) {
        const auto cfg = config_from(config, {});
        py::gil_scoped_release release;
        return results_json(pipeline::Pipeline(cfg, run_dir).run_all()).dump();
      },
      py::arg("config"), py::arg("run_dir"));

  m.def(
      "manifest",
      [](const std::string& config, const fs::path& run_dir) {
        return pipeline::Pipeline(config_from(config, {}), run_dir).manifest().dump();
      },
      py::arg("config"), py::arg("run_dir"));

  py::class_<Server>(m, "Server")
      .def(py::init<const fs::path&, std::string, int, std::optional<fs::path>>(), py::arg("run_dir"),
           py::arg("host") = "127.0.0.1", py::arg("port") = 0, py::arg("static_dir") = std::nullopt)
      .def("start", &Server::start, py::call_guard<py::gil_scoped_release>())
      .def("stop", &Server::stop, py::call_guard<py::gil_scoped_release>())
      .def_property_readonly("port", &Server::port)
      .def_property_readonly("host", &Server::host);
}
