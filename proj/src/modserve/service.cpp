#include "memejudge/modserve/service.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include <spdlog/spdlog.h>

#include "memejudge/common/io.hpp"
#include "memejudge/evalkit/metrics.hpp"
#include "memejudge/pipeline/artifacts.hpp"
#include "memejudge/pipeline/layout.hpp"

namespace memejudge::modserve {

using corpus::Label;

namespace {

ServiceError bad_request(const std::string& message) { return ServiceError(400, "validation_error", message); }

json rationale_json(const debate::Rationale& r) {
  return {{"stance", corpus::to_string(r.stance)},
          {"text", r.text},
          {"model_id", r.model_id},
          {"prompt_version", r.prompt_version}};
}

std::string image_url(const std::string& id) { return "/api/memes/" + id + "/image"; }

void write_all(int fd, const std::string& data, const fs::path& path) {
  std::size_t done = 0;
  while (done < data.size()) {
    const ssize_t n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("decision log write failed: " + path.string() + ": " + std::strerror(errno));
    }
    done += static_cast<std::size_t>(n);
  }
}

json ratings_json(const evalkit::ExplanationScores& s) {
  json out = json::object();
  for (const auto& [c, v] : s.scores) out[std::string(evalkit::to_string(c))] = v;
  return out;
}

}  // namespace

std::string_view to_string(Verdict v) noexcept { return v == Verdict::confirm ? "confirm" : "override"; }

Verdict parse_verdict(std::string_view text) {
  if (text == "confirm") return Verdict::confirm;
  if (text == "override") return Verdict::override;
  throw ValidationError("verdict must be \"confirm\" or \"override\", got '" + std::string(text) + "'");
}

json to_json(const ModerationDecision& d) {
  return {{"decision_id", d.decision_id},
          {"meme_id", d.meme_id},
          {"moderator_id", d.moderator_id},
          {"verdict", to_string(d.verdict)},
          {"final_label", corpus::to_string(d.final_label)},
          {"model_label", corpus::to_string(d.model_label)},
          {"ratings", d.ratings ? ratings_json(*d.ratings) : json(nullptr)},
          {"timestamp", d.timestamp}};
}

ModerationDecision decision_from_json(const json& j) {
  ModerationDecision d;
  d.decision_id = j.at("decision_id").get<std::uint64_t>();
  d.meme_id = j.at("meme_id").get<std::string>();
  d.moderator_id = j.at("moderator_id").get<std::string>();
  d.verdict = parse_verdict(j.at("verdict").get<std::string>());
  d.final_label = corpus::parse_label(j.at("final_label").get<std::string>());
  d.model_label = corpus::parse_label(j.at("model_label").get<std::string>());
  d.timestamp = j.at("timestamp").get<std::string>();
  if (j.contains("ratings") && !j.at("ratings").is_null()) {
    evalkit::ExplanationScores s;
    s.explanation_id = d.meme_id + ":decision-" + std::to_string(d.decision_id);
    s.meme_id = d.meme_id;
    s.source = "model";
    s.rater = evalkit::Rater::human;
    s.rater_id = d.moderator_id;
    for (const auto& [k, v] : j.at("ratings").items()) s.scores[evalkit::parse_criterion(k)] = v.get<int>();
    d.ratings = std::move(s);
  }
  return d;
}

json ServiceError::body() const { return {{"error", {{"code", code_}, {"message", what()}}}}; }

RunView load_run(const fs::path& run_dir) {
  RunView v;
  v.corpus = pipeline::read_run_corpus(run_dir);
  v.name = v.corpus.name();
  v.debates = pipeline::read_debates(run_dir / pipeline::layout::debates);
  v.preferences = pipeline::read_preferences(run_dir / pipeline::layout::preferences);
  v.predictions = pipeline::read_predictions(run_dir / pipeline::layout::predictions);
  return v;
}

DecisionLog::DecisionLog(fs::path path) : path_(std::move(path)) {
  if (!fs::exists(path_)) return;
  const std::string text = read_text_file(path_);
  std::size_t start = 0, line = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    const bool torn = end == std::string::npos;
    if (torn) end = text.size();
    ++line;
    const std::string row = trim(std::string_view(text).substr(start, end - start));
    start = end + 1;
    if (row.empty()) continue;
    try {
      auto d = decision_from_json(json::parse(row));
      if (!entries_.empty() && d.decision_id <= entries_.back().decision_id) {
        throw ValidationError("decision_id " + std::to_string(d.decision_id) + " is not increasing");
      }
      entries_.push_back(std::move(d));
    } catch (const std::exception& e) {
      if (torn) {
        spdlog::warn("{}: dropping torn final line {}", path_.string(), line);
        break;
      }
      throw ValidationError(path_.string() + ": line " + std::to_string(line) + ": " + e.what());
    }
  }
}

const ModerationDecision& DecisionLog::append(ModerationDecision d) {
  d.decision_id = next_id();
  fs::create_directories(path_.parent_path());
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw Error("cannot open decision log " + path_.string() + ": " + std::strerror(errno));
  try {
    write_all(fd, canonical_dump(to_json(d)) + "\n", path_);
    if (::fsync(fd) != 0) throw Error("fsync failed on " + path_.string() + ": " + std::strerror(errno));
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
  entries_.push_back(std::move(d));
  return entries_.back();
}

StatusFilter parse_status_filter(std::string_view text) {
  if (text.empty() || text == "all") return StatusFilter::all;
  if (text == "pending") return StatusFilter::pending;
  if (text == "decided") return StatusFilter::decided;
  throw bad_request("status must be one of all, pending, decided");
}

ReviewService::ReviewService(RunView run, fs::path decision_log) : run_(std::move(run)), log_(std::move(decision_log)) {
  for (const auto& [id, p] : run_.predictions) {
    if (run_.corpus.find(id) == nullptr) throw ValidationError("prediction for unknown meme '" + id + "'");
    if (!run_.debates.count(id)) throw ValidationError("prediction for meme '" + id + "' has no debate record");
    ids_.push_back(id);
  }
  std::sort(ids_.begin(), ids_.end());
  for (std::size_t i = 0; i < log_.entries().size(); ++i) {
    const auto& d = log_.entries()[i];
    if (!run_.predictions.count(d.meme_id)) {
      throw ValidationError(log_.path().string() + ": decision for meme '" + d.meme_id + "' not in this run");
    }
    by_meme_[d.meme_id].push_back(i);
  }
  spdlog::info("review service: {} memes, {} decisions replayed", ids_.size(), log_.entries().size());
}

const corpus::MemeRecord& ReviewService::meme(const std::string& id) const {
  if (!run_.predictions.count(id)) throw ServiceError(404, "not_found", "unknown meme '" + id + "'");
  return run_.corpus.at(id);
}

const fusion::Prediction& ReviewService::prediction(const std::string& id) const {
  auto it = run_.predictions.find(id);
  if (it == run_.predictions.end()) throw ServiceError(404, "not_found", "unknown meme '" + id + "'");
  return it->second;
}

std::optional<ModerationDecision> ReviewService::latest(const std::string& id) const {
  auto it = by_meme_.find(id);
  if (it == by_meme_.end() || it->second.empty()) return std::nullopt;
  return log_.entries()[it->second.back()];
}

json ReviewService::queue_item(const corpus::MemeRecord& m) const {
  const auto& p = run_.predictions.at(m.id);
  const auto& d = run_.debates.at(m.id);
  auto pit = run_.preferences.find(m.id);
  const bool parsed = pit != run_.preferences.end() && pit->second.status == judge::ParseStatus::parsed;
  return {{"meme_id", m.id},
          {"dataset", corpus::to_string(m.dataset)},
          {"predicted_label", corpus::to_string(p.label)},
          {"rationales", {{"harmless", d.harmless().text}, {"harmful", d.harmful().text}}},
          {"judge_preference", parsed ? json(corpus::to_string(*pit->second.preferred)) : json(nullptr)},
          {"order_source", parsed ? "judge" : "fixed"},
          {"status", by_meme_.count(m.id) ? "decided" : "pending"},
          {"image_url", image_url(m.id)}};
}

json ReviewService::queue(const QueueQuery& q) const {
  if (q.page < 1) throw bad_request("page must be >= 1");
  std::optional<corpus::DatasetKind> dataset;
  if (q.dataset && !q.dataset->empty()) {
    try {
      dataset = corpus::parse_dataset_kind(*q.dataset);
    } catch (const ValidationError&) {
      throw ServiceError(404, "unknown_dataset", "unknown dataset '" + *q.dataset + "'");
    }
    const bool present = std::any_of(ids_.begin(), ids_.end(),
                                     [&](const std::string& id) { return run_.corpus.at(id).dataset == *dataset; });
    if (!present) throw ServiceError(404, "unknown_dataset", "dataset '" + *q.dataset + "' is not in this run");
  }
  std::optional<Label> label;
  if (q.label && !q.label->empty()) {
    try {
      label = corpus::parse_label(*q.label);
    } catch (const ValidationError& e) {
      throw bad_request(e.what());
    }
  }
  std::shared_lock lock(mutex_);
  std::vector<const corpus::MemeRecord*> hits;
  for (const auto& id : ids_) {
    const auto& m = run_.corpus.at(id);
    const bool decided = by_meme_.count(id) > 0;
    if (q.status == StatusFilter::pending && decided) continue;
    if (q.status == StatusFilter::decided && !decided) continue;
    if (dataset && m.dataset != *dataset) continue;
    if (label && run_.predictions.at(id).label != *label) continue;
    hits.push_back(&m);
  }
  const std::size_t pages = (hits.size() + kPageSize - 1) / kPageSize;
  json items = json::array();
  for (std::size_t i = (q.page - 1) * kPageSize; i < hits.size() && i < q.page * kPageSize; ++i) {
    items.push_back(queue_item(*hits[i]));
  }
  return {{"items", items}, {"page", q.page}, {"page_size", kPageSize}, {"total", hits.size()}, {"total_pages", pages}};
}

json ReviewService::meme_detail(const std::string& id) const {
  const auto& m = meme(id);
  const auto& p = prediction(id);
  const auto& d = run_.debates.at(id);
  std::shared_lock lock(mutex_);
  json out = queue_item(m);
  out["meme"] = {{"id", m.id},
                 {"text", m.text},
                 {"dataset", corpus::to_string(m.dataset)},
                 {"split", corpus::to_string(m.split)},
                 {"gold_label", m.label ? json(corpus::to_string(*m.label)) : json(nullptr)}};
  out["debate"] = {{"harmless", rationale_json(d.harmless())}, {"harmful", rationale_json(d.harmful())}};
  out["prediction"] = fusion::to_json(p);
  auto pit = run_.preferences.find(id);
  if (pit != run_.preferences.end()) {
    out["judge_status"] = judge::to_string(pit->second.status);
    if (pit->second.status == judge::ParseStatus::parsed) {
      out["preference"] = {{"preferred", corpus::to_string(*pit->second.preferred)},
                           {"raw", pit->second.raw},
                           {"model_id", pit->second.model_id}};
    }
  } else {
    out["judge_status"] = "missing";
  }
  json history = json::array();
  if (auto it = by_meme_.find(id); it != by_meme_.end()) {
    for (auto r = it->second.rbegin(); r != it->second.rend(); ++r) history.push_back(to_json(log_.entries()[*r]));
  }
  out["decisions"] = history;
  out.erase("rationales");
  return out;
}

json ReviewService::post_decision(const std::string& id, const std::string& moderator_id, const json& payload) {
  const auto& p = prediction(id);
  if (trim(moderator_id).empty()) throw ServiceError(400, "missing_moderator", "X-Moderator-Id header is required");
  if (!payload.is_object()) throw bad_request("decision body must be a JSON object");
  for (const auto& [k, _] : payload.items()) {
    if (k != "verdict" && k != "final_label" && k != "ratings") throw bad_request("unknown field '" + k + "'");
  }
  ModerationDecision d;
  d.meme_id = id;
  d.moderator_id = trim(moderator_id);
  d.model_label = p.label;
  try {
    if (!payload.contains("verdict") || !payload["verdict"].is_string()) throw ValidationError("verdict: required string");
    d.verdict = parse_verdict(payload["verdict"].get<std::string>());
    if (!payload.contains("final_label") || !payload["final_label"].is_string()) {
      throw ValidationError("final_label: required string");
    }
    d.final_label = corpus::parse_label(payload["final_label"].get<std::string>());
  } catch (const ValidationError& e) {
    throw bad_request(e.what());
  }
  if (d.verdict == Verdict::confirm && d.final_label != p.label) {
    throw bad_request("confirm requires final_label to equal the model prediction '" +
                      std::string(corpus::to_string(p.label)) + "'");
  }
  if (d.verdict == Verdict::override && d.final_label == p.label) {
    throw bad_request("override requires final_label to differ from the model prediction");
  }
  if (payload.contains("ratings") && !payload["ratings"].is_null()) {
    const auto& r = payload["ratings"];
    if (!r.is_object()) throw bad_request("ratings: must be an object");
    evalkit::ExplanationScores s;
    s.explanation_id = id + ":model";
    s.meme_id = id;
    s.source = "model";
    s.rater = evalkit::Rater::human;
    s.rater_id = d.moderator_id;
    for (const auto& [k, v] : r.items()) {
      evalkit::Criterion c;
      try {
        c = evalkit::parse_criterion(k);
      } catch (const ValidationError& e) {
        throw bad_request("ratings: " + std::string(e.what()));
      }
      if (!v.is_number_integer()) throw bad_request("ratings." + k + ": must be an integer 1..5");
      const auto value = v.get<long long>();
      if (value < 1 || value > 5) throw bad_request("ratings." + k + ": must be an integer 1..5");
      s.scores[c] = static_cast<int>(value);
    }
    auto problems = s.problems();
    if (!problems.empty()) throw bad_request("ratings." + problems.front());
    d.ratings = std::move(s);
  }
  d.timestamp = utc_timestamp();
  std::unique_lock lock(mutex_);
  const auto& stored = log_.append(std::move(d));
  by_meme_[id].push_back(log_.entries().size() - 1);
  return to_json(stored);
}

json ReviewService::metrics() const {
  std::shared_lock lock(mutex_);
  std::vector<Label> golds, model, final_labels;
  std::size_t decided = 0, confirmed = 0, overridden = 0;
  for (const auto& id : ids_) {
    const auto& m = run_.corpus.at(id);
    const auto last = latest(id);
    if (last) {
      ++decided;
      (last->verdict == Verdict::confirm ? confirmed : overridden)++;
    }
    if (!m.label) continue;
    golds.push_back(*m.label);
    model.push_back(run_.predictions.at(id).label);
    final_labels.push_back(last ? last->final_label : run_.predictions.at(id).label);
  }
  json out;
  out["run"] = run_.name;
  out["labeled"] = golds.size();
  out["model"] = golds.empty() ? json(nullptr) : evalkit::to_json(evalkit::compute_metrics(golds, model));
  out["moderator_final"] =
      golds.empty() ? json(nullptr) : evalkit::to_json(evalkit::compute_metrics(golds, final_labels));
  out["progress"] = {{"total", ids_.size()},
                     {"decided", decided},
                     {"pending", ids_.size() - decided},
                     {"confirmed", confirmed},
                     {"overridden", overridden},
                     {"decisions", log_.entries().size()}};
  return out;
}

json ReviewService::health() const {
  std::shared_lock lock(mutex_);
  return {{"status", "ok"}, {"run", run_.name}, {"memes", ids_.size()}, {"decisions", log_.entries().size()}};
}

fs::path ReviewService::image_path(const std::string& id) const { return run_.corpus.image_path(meme(id)); }

std::vector<ModerationDecision> ReviewService::decisions() const {
  std::shared_lock lock(mutex_);
  return log_.entries();
}

}  // namespace memejudge::modserve
