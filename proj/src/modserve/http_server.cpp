// Eigen headers must precede httplib.h: <resolv.h> defines a `_res` macro.
#include "memejudge/modserve/service.hpp"

#include <httplib.h>

#include <spdlog/spdlog.h>

#include "memejudge/common/io.hpp"

namespace memejudge::modserve {

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, ServiceError(status, code, message).body());
}

std::string media_type(const fs::path& p) {
  const auto ext = to_lower(p.extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

std::optional<std::string> param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ServiceError& e) {
      send_json(res, e.status(), e.body());
    } catch (const std::exception& e) {
      spdlog::error("{} {}: {}", req.method, req.path, e.what());
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  Impl(ReviewService& s, ServerOptions o) : service(s), options(std::move(o)) {}
  ReviewService& service;
  ServerOptions options;
  httplib::Server server;
};

HttpServer::HttpServer(ReviewService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  auto& srv = impl_->server;
  auto& svc = impl_->service;
  const int threads = std::max(1, impl_->options.threads);
  srv.new_task_queue = [threads] { return new httplib::ThreadPool(static_cast<std::size_t>(threads)); };

  srv.Get("/api/health", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, svc.health());
          }));
  srv.Get("/api/queue", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            QueueQuery q;
            q.status = parse_status_filter(param(req, "status").value_or(""));
            q.dataset = param(req, "dataset");
            q.label = param(req, "label");
            if (auto page = param(req, "page")) {
              try {
                std::size_t used = 0;
                const long v = std::stol(*page, &used);
                if (used != page->size() || v < 1) throw std::invalid_argument("page");
                q.page = static_cast<std::size_t>(v);
              } catch (const std::exception&) {
                throw ServiceError(400, "validation_error", "page must be a positive integer");
              }
            }
            send_json(res, 200, svc.queue(q));
          }));
  srv.Get(R"(/api/memes/([^/]+)/image)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const auto path = svc.image_path(req.matches[1]);
            if (!fs::is_regular_file(path)) throw ServiceError(404, "not_found", "image file missing");
            const auto bytes = read_binary_file(path);
            res.status = 200;
            res.set_content(std::string(bytes.begin(), bytes.end()), media_type(path));
          }));
  srv.Get(R"(/api/memes/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, svc.meme_detail(req.matches[1]));
          }));
  srv.Post(R"(/api/memes/([^/]+)/decision)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             json body;
             try {
               body = json::parse(req.body);
             } catch (const json::exception&) {
               throw ServiceError(400, "invalid_json", "request body is not valid JSON");
             }
             send_json(res, 201, svc.post_decision(req.matches[1], req.get_header_value("X-Moderator-Id"), body));
           }));
  srv.Get("/api/metrics", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, svc.metrics());
          }));
  if (impl_->options.static_dir) {
    if (!srv.set_mount_point("/", impl_->options.static_dir->string())) {
      throw NotFoundError("static directory not found: " + impl_->options.static_dir->string());
    }
  }
  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (res.status == 404 && res.body.empty()) send_error(res, 404, "not_found", "no route for " + req.path);
  });
}

HttpServer::~HttpServer() = default;

void HttpServer::run(const std::function<void(int)>& on_bound) {
  auto& srv = impl_->server;
  int port = impl_->options.port;
  if (port == 0) {
    port = srv.bind_to_any_port(impl_->options.host);
  } else if (!srv.bind_to_port(impl_->options.host, port)) {
    port = -1;
  }
  if (port < 0) throw Error("cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  spdlog::info("serving on http://{}:{}", impl_->options.host, port);
  if (on_bound) on_bound(port);
  srv.listen_after_bind();
}

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace memejudge::modserve
