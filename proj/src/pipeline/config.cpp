#include "memejudge/pipeline/config.hpp"

#include <set>
#include <sstream>

#include "memejudge/common/hashing.hpp"
#include "memejudge/common/io.hpp"

namespace memejudge::pipeline {

namespace {

// Walks one JSON object, recording typed fields and reporting unknown keys with their path.
class Section {
 public:
  Section(const json* obj, std::string path, std::vector<std::string>& problems)
      : obj_(obj), path_(std::move(path)), problems_(problems) {
    if (obj_ != nullptr && !obj_->is_object()) {
      problems_.push_back(where() + "must be an object");
      obj_ = nullptr;
    }
  }

  bool has(const char* key) const { return obj_ != nullptr && obj_->contains(key); }

  const json* raw(const char* key) {
    known_.insert(key);
    if (!has(key)) return nullptr;
    return &obj_->at(key);
  }

  Section child(const char* key) { return Section(raw(key), field(key), problems_); }

  void integer(const char* key, int& dst, long lo, long hi) {
    if (const json* v = raw(key)) {
      if (!v->is_number_integer()) return fail(key, "must be an integer");
      const long x = v->get<long>();
      if (x < lo || x > hi) {
        return fail(key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " +
                             std::to_string(x));
      }
      dst = static_cast<int>(x);
    }
  }

  void count(const char* key, std::size_t& dst) {
    if (const json* v = raw(key)) {
      if (!v->is_number_integer() || v->get<long>() < 0) return fail(key, "must be a non-negative integer");
      dst = v->get<std::size_t>();
    }
  }

  void unsigned64(const char* key, std::uint64_t& dst) {
    if (const json* v = raw(key)) {
      if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
        return fail(key, "must be a non-negative integer");
      }
      dst = v->get<std::uint64_t>();
    }
  }

  void number(const char* key, double& dst, double lo, double hi) {
    if (const json* v = raw(key)) {
      if (!v->is_number()) return fail(key, "must be a number");
      const double x = v->get<double>();
      if (!(x >= lo && x <= hi)) return fail(key, "must be in [" + fmt(lo) + ", " + fmt(hi) + "]");
      dst = x;
    }
  }

  void boolean(const char* key, bool& dst) {
    if (const json* v = raw(key)) {
      if (!v->is_boolean()) return fail(key, "must be a boolean");
      dst = v->get<bool>();
    }
  }

  void string(const char* key, std::string& dst, bool non_empty = true) {
    if (const json* v = raw(key)) {
      if (!v->is_string()) return fail(key, "must be a string");
      if (non_empty && v->get<std::string>().empty()) return fail(key, "must be non-empty");
      dst = v->get<std::string>();
    }
  }

  void path(const char* key, std::optional<fs::path>& dst, const fs::path& base) {
    if (const json* v = raw(key)) {
      if (v->is_null()) {
        dst.reset();
        return;
      }
      if (!v->is_string() || v->get<std::string>().empty()) return fail(key, "must be a non-empty path string");
      fs::path p(v->get<std::string>());
      dst = p.is_relative() && !base.empty() ? base / p : p;
    }
  }

  template <typename Parse, typename T>
  void choice(const char* key, T& dst, Parse parse) {
    if (const json* v = raw(key)) {
      if (!v->is_string()) return fail(key, "must be a string");
      try {
        dst = parse(v->get<std::string>());
      } catch (const std::exception& e) {
        fail(key, e.what());
      }
    }
  }

  void fail(const char* key, const std::string& message) { problems_.push_back(field(key) + ": " + message); }

  // Reports keys that no accessor asked for.
  void finish() {
    if (obj_ == nullptr) return;
    for (const auto& [k, _] : obj_->items()) {
      if (!known_.count(k)) problems_.push_back(field(k.c_str()) + ": unknown field");
    }
  }

 private:
  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string where() const { return path_.empty() ? "config: " : path_ + ": "; }
  static std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }

  const json* obj_;
  std::string path_;
  std::vector<std::string>& problems_;
  std::set<std::string> known_;
};

corpus::SchemaKind default_schema(corpus::DatasetKind kind) {
  switch (kind) {
    case corpus::DatasetKind::harm_c:
    case corpus::DatasetKind::harm_p: return corpus::SchemaKind::harm_native;
    case corpus::DatasetKind::fhm: return corpus::SchemaKind::fhm_native;
    default: return corpus::SchemaKind::canonical;
  }
}

std::string_view to_string(corpus::MissingImagePolicy p) { return p == corpus::MissingImagePolicy::skip ? "skip" : "fail"; }

corpus::MissingImagePolicy parse_missing(const std::string& s) {
  if (s == "skip") return corpus::MissingImagePolicy::skip;
  if (s == "fail") return corpus::MissingImagePolicy::fail;
  throw ValidationError("must be \"skip\" or \"fail\"");
}

json opt_path(const std::optional<fs::path>& p) { return p ? json(p->generic_string()) : json(nullptr); }

void prefix_problems(const ConfigError& e, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& p : e.problems()) out.push_back(prefix + "." + p);
}

}  // namespace

fusion::FusionConfig base_fusion_config(std::string_view model_size) {
  if (model_size == "paper") return fusion::FusionConfig{};
  auto c = fusion::FusionConfig::toy();
  c.image_size = 224;
  c.patch_size = 32;
  return c;
}

double preset_learning_rate(corpus::DatasetKind kind) noexcept {
  switch (kind) {
    case corpus::DatasetKind::harm_c: return 5e-5;
    case corpus::DatasetKind::harm_p: return 5e-4;
    case corpus::DatasetKind::fhm: return 1e-4;
    case corpus::DatasetKind::synthetic: return 3e-3;
    default: return 1e-4;
  }
}

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  std::vector<std::string> problems;
  RunConfig c;
  Section root(&j, "", problems);

  {
    auto d = root.child("dataset");
    d.choice("kind", c.dataset.kind, [](const std::string& s) { return corpus::parse_dataset_kind(s); });
    c.dataset.schema = default_schema(c.dataset.kind);
    d.path("path", c.dataset.path, base_dir);
    d.choice("schema", c.dataset.schema, [](const std::string& s) { return corpus::parse_schema_kind(s); });
    d.string("fhm_test_split", c.dataset.fhm_test_split);
    d.choice("missing_images", c.dataset.missing_images, parse_missing);
    d.boolean("gate", c.dataset.gate);
    auto s = d.child("synthetic");
    s.count("train_harmful", c.dataset.synthetic.train_harmful);
    s.count("train_harmless", c.dataset.synthetic.train_harmless);
    s.count("test_harmful", c.dataset.synthetic.test_harmful);
    s.count("test_harmless", c.dataset.synthetic.test_harmless);
    s.count("image_size", c.dataset.synthetic.image_size);
    s.unsigned64("seed", c.dataset.synthetic.seed);
    s.number("text_signal", c.dataset.synthetic.text_signal, 0.0, 1.0);
    s.finish();
    d.finish();
    if (c.dataset.kind != corpus::DatasetKind::synthetic && !c.dataset.path) {
      problems.push_back("dataset.path: required for dataset kind '" + std::string(corpus::to_string(c.dataset.kind)) +
                         "'");
    }
  }
  {
    auto g = root.child("gateway");
    g.choice("backend", c.gateway.backend, [](const std::string& s) {
      if (s != "mock" && s != "http") throw ValidationError("must be \"mock\" or \"http\"");
      return s;
    });
    g.string("debater_model", c.gateway.debater_model);
    g.string("judge_model", c.gateway.judge_model);
    g.string("quality_model", c.gateway.quality_model);
    g.choice("mode", c.gateway.mode, [](const std::string& s) { return debate::parse_debate_mode(s); });
    g.string("prompt_set", c.gateway.prompt_set);
    g.integer("max_retries", c.gateway.max_retries, 0, 20);
    g.integer("max_in_flight", c.gateway.max_in_flight, 1, 1024);
    g.integer("workers", c.gateway.workers, 1, 256);
    g.boolean("cache", c.gateway.cache);
    g.finish();
  }
  root.choice("model_size", c.model_size, [](const std::string& s) {
    if (s != "desk" && s != "paper") throw ValidationError("must be \"desk\" or \"paper\"");
    return s;
  });
  c.fusion = base_fusion_config(c.model_size);
  if (const json* f = root.raw("fusion")) {
    try {
      c.fusion = fusion::fusion_config_from_json(*f, c.fusion);
    } catch (const ConfigError& e) {
      prefix_problems(e, "fusion", problems);
    }
  }
  for (const auto& p : c.fusion.problems()) problems.push_back("fusion." + p);

  root.unsigned64("seed", c.seed);
  c.train.learning_rate = preset_learning_rate(c.dataset.kind);
  c.train.seed = c.seed;
  if (const json* t = root.raw("train")) {
    try {
      c.train = fusion::train_config_from_json(*t, c.train);
    } catch (const ConfigError& e) {
      prefix_problems(e, "train", problems);
    }
  }
  for (const auto& p : c.train.problems()) problems.push_back("train." + p);

  {
    auto a = root.child("ablation");
    if (const json* v = a.raw("variants")) {
      if (!v->is_array() || v->empty()) {
        a.fail("variants", "must be a non-empty array of variant names");
      } else {
        c.ablation.variants.clear();
        for (std::size_t i = 0; i < v->size(); ++i) {
          const auto& item = v->at(i);
          try {
            if (!item.is_string()) throw ValidationError("must be a string");
            c.ablation.variants.push_back(evalkit::parse_variant(item.get<std::string>()));
          } catch (const std::exception& e) {
            problems.push_back("ablation.variants[" + std::to_string(i) + "]: " + e.what());
          }
        }
      }
    }
    a.finish();
  }
  {
    auto q = root.child("quality");
    if (const json* v = q.raw("max_memes")) {
      if (!v->is_null() && (!v->is_number_integer() || v->get<long>() < 1)) {
        q.fail("max_memes", "must be a positive integer or null");
      } else if (!v->is_null()) {
        c.quality.max_memes = v->get<int>();
      }
    }
    q.path("human_explanations", c.quality.human_explanations, base_dir);
    q.boolean("strict", c.quality.strict);
    q.finish();
  }
  {
    auto s = root.child("serve");
    s.string("host", c.serve.host);
    s.integer("port", c.serve.port, 0, 65535);
    s.path("static_dir", c.serve.static_dir, base_dir);
    s.finish();
  }
  root.path("output_dir", c.output_dir, base_dir);
  root.finish();
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw ConfigError({"config: file not found: " + path.string()});
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError({"config: " + path.string() + " is not valid JSON: " + e.what()});
  }
  return parse_run_config(j, path.parent_path());
}

json to_json(const RunConfig& c) {
  const auto& s = c.dataset.synthetic;
  json variants = json::array();
  for (auto v : c.ablation.variants) variants.push_back(evalkit::to_string(v));
  return {
      {"dataset",
       {{"kind", corpus::to_string(c.dataset.kind)},
        {"path", opt_path(c.dataset.path)},
        {"schema", corpus::to_string(c.dataset.schema)},
        {"fhm_test_split", c.dataset.fhm_test_split},
        {"missing_images", to_string(c.dataset.missing_images)},
        {"gate", c.dataset.gate},
        {"synthetic",
         {{"train_harmful", s.train_harmful},
          {"train_harmless", s.train_harmless},
          {"test_harmful", s.test_harmful},
          {"test_harmless", s.test_harmless},
          {"image_size", s.image_size},
          {"seed", s.seed},
          {"text_signal", s.text_signal}}}}},
      {"gateway",
       {{"backend", c.gateway.backend},
        {"debater_model", c.gateway.debater_model},
        {"judge_model", c.gateway.judge_model},
        {"quality_model", c.gateway.quality_model},
        {"mode", debate::to_string(c.gateway.mode)},
        {"prompt_set", c.gateway.prompt_set},
        {"max_retries", c.gateway.max_retries},
        {"max_in_flight", c.gateway.max_in_flight},
        {"workers", c.gateway.workers},
        {"cache", c.gateway.cache}}},
      {"model_size", c.model_size},
      {"fusion", fusion::to_json(c.fusion)},
      {"train", fusion::to_json(c.train)},
      {"ablation", {{"variants", variants}}},
      {"quality",
       {{"max_memes", c.quality.max_memes ? json(*c.quality.max_memes) : json(nullptr)},
        {"human_explanations", opt_path(c.quality.human_explanations)},
        {"strict", c.quality.strict}}},
      {"serve", {{"host", c.serve.host}, {"port", c.serve.port}, {"static_dir", opt_path(c.serve.static_dir)}}},
      {"output_dir", opt_path(c.output_dir)},
      {"seed", c.seed}};
}

std::string config_fingerprint(const RunConfig& c) {
  json j = to_json(c);
  j.erase("output_dir");
  j.erase("serve");
  return sha256_hex("run-config-v1\n" + canonical_dump(j));
}

}  // namespace memejudge::pipeline
