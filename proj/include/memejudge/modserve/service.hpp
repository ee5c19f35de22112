#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memejudge/common/errors.hpp"
#include "memejudge/corpus/types.hpp"
#include "memejudge/debate/debate.hpp"
#include "memejudge/evalkit/quality.hpp"
#include "memejudge/fusion/predict.hpp"
#include "memejudge/judge/judge.hpp"

namespace memejudge::modserve {

inline constexpr std::size_t kPageSize = 10;

enum class Verdict { confirm, override };
std::string_view to_string(Verdict v) noexcept;
Verdict parse_verdict(std::string_view text);

struct ModerationDecision {
  std::uint64_t decision_id = 0;
  std::string meme_id;
  std::string moderator_id;
  Verdict verdict = Verdict::confirm;
  corpus::Label final_label = corpus::Label::harmful;
  corpus::Label model_label = corpus::Label::harmful;  // prediction at decision time
  std::optional<evalkit::ExplanationScores> ratings;
  std::string timestamp;

  bool operator==(const ModerationDecision&) const = default;
};

nlohmann::json to_json(const ModerationDecision& d);
ModerationDecision decision_from_json(const nlohmann::json& j);

// Service-level failure carrying the HTTP status and error code.
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : Error(message), status_(status), code_(std::move(code)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }
  nlohmann::json body() const;

 private:
  int status_;
  std::string code_;
};

// Everything one prediction run exposes to reviewers.
struct RunView {
  std::string name;
  corpus::Corpus corpus;
  std::map<std::string, debate::DebateRecord> debates;
  std::map<std::string, judge::JudgePreference> preferences;
  std::map<std::string, fusion::Prediction> predictions;
};

// Reads the corpus, debate, judge and predict stage artifacts of a run directory.
RunView load_run(const std::filesystem::path& run_dir);

// JSON Lines file, one decision per line. Appends are serialized and fsync'd before returning.
class DecisionLog {
 public:
  // Replays an existing log. A torn final line (crash mid-append) is dropped; any other
  // malformed line throws ValidationError naming the line.
  explicit DecisionLog(std::filesystem::path path);

  const std::vector<ModerationDecision>& entries() const noexcept { return entries_; }
  std::uint64_t next_id() const noexcept { return entries_.empty() ? 1 : entries_.back().decision_id + 1; }
  // Assigns decision_id and appends durably.
  const ModerationDecision& append(ModerationDecision d);
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::vector<ModerationDecision> entries_;
};

enum class StatusFilter { all, pending, decided };
StatusFilter parse_status_filter(std::string_view text);

struct QueueQuery {
  StatusFilter status = StatusFilter::all;
  std::optional<std::string> dataset;
  std::optional<std::string> label;
  std::size_t page = 1;
};

class ReviewService {
 public:
  ReviewService(RunView run, std::filesystem::path decision_log);

  // Items ordered by meme_id, kPageSize per 1-based page.
  nlohmann::json queue(const QueueQuery& query) const;
  nlohmann::json meme_detail(const std::string& meme_id) const;
  nlohmann::json metrics() const;
  nlohmann::json health() const;
  // Validates the payload against the current prediction, then appends.
  nlohmann::json post_decision(const std::string& meme_id, const std::string& moderator_id,
                               const nlohmann::json& payload);

  std::filesystem::path image_path(const std::string& meme_id) const;
  std::vector<ModerationDecision> decisions() const;

 private:
  const corpus::MemeRecord& meme(const std::string& id) const;
  const fusion::Prediction& prediction(const std::string& id) const;
  std::optional<ModerationDecision> latest(const std::string& id) const;
  nlohmann::json queue_item(const corpus::MemeRecord& m) const;

  RunView run_;
  std::vector<std::string> ids_;  // reviewable memes, sorted
  mutable std::shared_mutex mutex_;
  DecisionLog log_;
  std::map<std::string, std::vector<std::size_t>> by_meme_;
};

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> static_dir;  // mounted at "/"
  int threads = 4;
};

// Serves `service` over HTTP until stop() is called from another thread.
class HttpServer {
 public:
  HttpServer(ReviewService& service, ServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds, then blocks serving requests. Returns the bound port through `on_bound` first.
  void run(const std::function<void(int port)>& on_bound = {});
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace memejudge::modserve
