#include "memejudge/fusion/model.hpp"

#include <cmath>
#include <functional>
#include <map>

#include "memejudge/common/errors.hpp"
#include "memejudge/common/hashing.hpp"
#include "memejudge/common/io.hpp"
#include "memejudge/common/random.hpp"

namespace memejudge::fusion {

namespace {

constexpr double kNormEps = 1e-6;
constexpr int kPositionCapacity = 4096;

Matrix normal_matrix(Rng& rng, int rows, int cols, double stddev) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal() * stddev;
  return m;
}

Parameter linear(Rng& rng, std::string name, int in, int out) {
  return Parameter(std::move(name), normal_matrix(rng, in, out, 1.0 / std::sqrt(static_cast<double>(in))));
}

Parameter ones(std::string name, int cols) { return Parameter(std::move(name), Matrix::Ones(1, cols)); }

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw ValidationError(std::string("cross_attention: non-finite values in ") + what);
}

IndexMatrix bucket_index(int queries, int keys, bool bidirectional, int buckets, int max_distance) {
  IndexMatrix idx(queries, keys);
  for (int i = 0; i < queries; ++i) {
    for (int j = 0; j < keys; ++j) idx(i, j) = relative_position_bucket(j - i, bidirectional, buckets, max_distance);
  }
  return idx;
}

}  // namespace

FusionConfig FusionConfig::toy() {
  FusionConfig c;
  c.d = 32;
  c.d_k = 16;
  c.num_layers = 2;
  c.max_text_tokens = 128;
  c.image_size = 32;
  c.patch_size = 8;
  c.vocab_size = 1024;
  c.heads = 2;
  c.d_ff = 64;
  c.decoder_layers = 1;
  c.relative_buckets = 16;
  c.relative_max_distance = 64;
  c.extractor_width = 32;
  return c;
}

int FusionConfig::num_patches() const noexcept {
  if (patch_size <= 0) return 0;
  const int g = image_size / patch_size;
  return g * g + (class_token ? 1 : 0);
}

std::vector<std::string> FusionConfig::problems() const {
  std::vector<std::string> out;
  auto positive = [&](const char* name, int v) {
    if (v <= 0) out.push_back(std::string(name) + ": must be a positive integer");
  };
  positive("d", d);
  positive("d_k", d_k);
  positive("num_layers", num_layers);
  positive("max_text_tokens", max_text_tokens);
  positive("image_size", image_size);
  positive("patch_size", patch_size);
  positive("vocab_size", vocab_size);
  positive("heads", heads);
  positive("d_ff", d_ff);
  positive("decoder_layers", decoder_layers);
  positive("relative_buckets", relative_buckets);
  positive("relative_max_distance", relative_max_distance);
  positive("extractor_width", extractor_width);
  if (d > 0 && d_k > d) out.push_back("d_k: must not exceed d");
  if (d > 0 && heads > 0 && d % heads != 0) out.push_back("heads: must divide d");
  if (image_size > 0 && patch_size > 0 && image_size % patch_size != 0) {
    out.push_back("patch_size: must divide image_size");
  }
  if (max_text_tokens > kPositionCapacity) {
    out.push_back("max_text_tokens: exceeds the backbone positional capacity of " + std::to_string(kPositionCapacity));
  }
  if (max_text_tokens > 0 && max_text_tokens < 8) out.push_back("max_text_tokens: must be at least 8");
  if (relative_buckets > 0 && (relative_buckets < 4 || relative_buckets % 2 != 0)) {
    out.push_back("relative_buckets: must be an even number of at least 4");
  }
  if (vocab_size > 0 && vocab_size < 64) out.push_back("vocab_size: must be at least 64");
  if (backbone_id != kToyBackbone) {
    out.push_back("backbone_id: '" + backbone_id + "' is not available; built-in backbone is '" +
                  std::string(kToyBackbone) + "'");
  }
  if (extractor_id != kToyExtractor) {
    out.push_back("extractor_id: '" + extractor_id + "' is not available; built-in extractor is '" +
                  std::string(kToyExtractor) + "'");
  }
  return out;
}

void FusionConfig::validate() const {
  auto p = problems();
  if (!p.empty()) throw ConfigError(std::move(p));
}

nlohmann::json to_json(const FusionConfig& c) {
  return {{"d", c.d},
          {"d_k", c.d_k},
          {"num_layers", c.num_layers},
          {"max_text_tokens", c.max_text_tokens},
          {"image_size", c.image_size},
          {"patch_size", c.patch_size},
          {"class_token", c.class_token},
          {"num_patches", c.num_patches()},
          {"backbone_id", c.backbone_id},
          {"extractor_id", c.extractor_id},
          {"fusion_enabled", c.fusion_enabled},
          {"vocab_size", c.vocab_size},
          {"heads", c.heads},
          {"d_ff", c.d_ff},
          {"decoder_layers", c.decoder_layers},
          {"relative_buckets", c.relative_buckets},
          {"relative_max_distance", c.relative_max_distance},
          {"extractor_width", c.extractor_width}};
}

FusionConfig fusion_config_from_json(const nlohmann::json& j, const FusionConfig& base) {
  FusionConfig c = base;
  std::vector<std::string> problems;
  if (!j.is_object()) throw ConfigError({"fusion: must be an object"});
  std::map<std::string, std::function<void(const nlohmann::json&)>> fields;
  auto int_field = [&](const char* name, int& dst) {
    fields[name] = [&, name](const nlohmann::json& v) {
      if (!v.is_number_integer()) problems.push_back(std::string(name) + ": must be an integer");
      else dst = v.get<int>();
    };
  };
  auto bool_field = [&](const char* name, bool& dst) {
    fields[name] = [&, name](const nlohmann::json& v) {
      if (!v.is_boolean()) problems.push_back(std::string(name) + ": must be a boolean");
      else dst = v.get<bool>();
    };
  };
  auto str_field = [&](const char* name, std::string& dst) {
    fields[name] = [&, name](const nlohmann::json& v) {
      if (!v.is_string()) problems.push_back(std::string(name) + ": must be a string");
      else dst = v.get<std::string>();
    };
  };
  int_field("d", c.d);
  int_field("d_k", c.d_k);
  int_field("num_layers", c.num_layers);
  int_field("max_text_tokens", c.max_text_tokens);
  int_field("image_size", c.image_size);
  int_field("patch_size", c.patch_size);
  bool_field("class_token", c.class_token);
  str_field("backbone_id", c.backbone_id);
  str_field("extractor_id", c.extractor_id);
  bool_field("fusion_enabled", c.fusion_enabled);
  int_field("vocab_size", c.vocab_size);
  int_field("heads", c.heads);
  int_field("d_ff", c.d_ff);
  int_field("decoder_layers", c.decoder_layers);
  int_field("relative_buckets", c.relative_buckets);
  int_field("relative_max_distance", c.relative_max_distance);
  int_field("extractor_width", c.extractor_width);
  std::optional<int> declared_patches;
  fields["num_patches"] = [&](const nlohmann::json& v) {
    if (!v.is_number_integer()) problems.push_back("num_patches: must be an integer");
    else declared_patches = v.get<int>();
  };
  for (const auto& [key, value] : j.items()) {
    auto it = fields.find(key);
    if (it == fields.end()) problems.push_back(key + ": unknown field");
    else it->second(value);
  }
  if (declared_patches && *declared_patches != c.num_patches()) {
    problems.push_back("num_patches: declared " + std::to_string(*declared_patches) + " but the extractor yields " +
                       std::to_string(c.num_patches()));
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

std::string fingerprint(const FusionConfig& c) {
  Sha256 h;
  h.field("fusion-config-v1");
  h.field(canonical_dump(to_json(c)));
  h.field(WordHashTokenizer(std::max(c.vocab_size, 64)).id());
  return h.hex_digest();
}

int relative_position_bucket(int relative_position, bool bidirectional, int num_buckets, int max_distance) {
  int bucket = 0;
  int n = relative_position;
  if (bidirectional) {
    num_buckets /= 2;
    if (n > 0) bucket += num_buckets;
    n = std::abs(n);
  } else {
    n = std::max(-n, 0);
  }
  const int max_exact = num_buckets / 2;
  if (n < max_exact) return bucket + n;
  const double scaled = std::log(static_cast<double>(n) / max_exact) /
                        std::log(static_cast<double>(max_distance) / max_exact) * (num_buckets - max_exact);
  const int large = std::min(max_exact + static_cast<int>(scaled), num_buckets - 1);
  return bucket + large;
}

// ---------------------------------------------------------------------------------------------

VisionExtractor::VisionExtractor(const FusionConfig& config)
    : image_size_(config.image_size),
      patch_size_(config.patch_size),
      class_token_(config.class_token),
      num_patches_(config.num_patches()) {
  const std::string shape = config.extractor_id + "/" + std::to_string(config.image_size) + "/" +
                            std::to_string(config.patch_size) + "/" + std::to_string(config.extractor_width) + "/" +
                            std::to_string(config.d);
  Rng rng(fnv1a64(shape));
  const int in = 3 * patch_size_ * patch_size_;
  const int w = config.extractor_width;
  patch_proj_ = Parameter("extractor.patch_proj", normal_matrix(rng, in, w, 1.0 / std::sqrt(static_cast<double>(in))), true);
  patch_bias_ = Parameter("extractor.patch_bias", normal_matrix(rng, 1, w, 0.1), true);
  position_ = Parameter("extractor.position", normal_matrix(rng, num_patches_, w, 0.1), true);
  out_proj_ = Parameter("extractor.out_proj", normal_matrix(rng, w, config.d, 1.0 / std::sqrt(static_cast<double>(w))), true);
}

Matrix VisionExtractor::extract(const corpus::ImageTensor& image) const {
  const auto s = static_cast<std::size_t>(image_size_);
  if (image.height() != s || image.width() != s) {
    throw ValidationError("vision extractor expects " + std::to_string(s) + "x" + std::to_string(s) + " images, got " +
                          std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
  const int p = patch_size_;
  const int grid = image_size_ / p;
  Matrix patches(grid * grid, 3 * p * p);
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      const int row = gy * grid + gx;
      for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < p; ++y) {
          for (int x = 0; x < p; ++x) {
            patches(row, (c * p + y) * p + x) = image.at(static_cast<std::size_t>(c), static_cast<std::size_t>(gy * p + y),
                                                         static_cast<std::size_t>(gx * p + x));
          }
        }
      }
    }
  }
  Matrix pre = patches * patch_proj_.value;
  pre.rowwise() += patch_bias_.value.row(0);
  Matrix feats(num_patches_, pre.cols());
  feats.topRows(grid * grid) = pre + position_.value.topRows(grid * grid);
  if (class_token_) feats.row(num_patches_ - 1) = pre.colwise().mean() + position_.value.row(num_patches_ - 1);
  feats = feats.array().tanh().matrix();
  return feats * out_proj_.value;
}

std::vector<Parameter*> VisionExtractor::parameters() { return {&patch_proj_, &patch_bias_, &position_, &out_proj_}; }

std::vector<const Parameter*> VisionExtractor::parameters() const {
  return {&patch_proj_, &patch_bias_, &position_, &out_proj_};
}

std::string VisionExtractor::digest() const {
  Sha256 h;
  for (const Parameter* p : parameters()) {
    h.field(p->name);
    h.field(std::to_string(p->value.rows()) + "x" + std::to_string(p->value.cols()));
    h.update(std::span(reinterpret_cast<const std::uint8_t*>(p->value.data()),
                       static_cast<std::size_t>(p->value.size()) * sizeof(double)));
  }
  return h.hex_digest();
}

// ---------------------------------------------------------------------------------------------

CrossAttentionOutput cross_attention(Tape& tape, Tape::Var h_text, Tape::Var h_img, const FusionProjection& proj) {
  require_finite(tape.value(h_text), "text states");
  require_finite(tape.value(h_img), "image states");
  const auto d_k = static_cast<double>(proj.w_q.value.cols());
  Tape::Var q = tape.matmul(h_text, tape.param(proj.w_q));
  Tape::Var k = tape.matmul(h_img, tape.param(proj.w_k));
  Tape::Var v = tape.matmul(h_img, tape.param(proj.w_v));
  Tape::Var weights = tape.softmax_rows(tape.scale(tape.matmul_nt(q, k), 1.0 / std::sqrt(d_k)));
  Tape::Var attended = tape.matmul(weights, v);
  Tape::Var projected = tape.matmul(attended, tape.param(proj.w_o));
  return {weights, attended, projected};
}

Label decide(const LabelScores& scores) noexcept {
  return scores.harmful >= scores.harmless ? Label::harmful : Label::harmless;
}

std::string Verbalizer::id() const {
  auto join = [](const std::vector<int>& v) {
    std::string s;
    for (int t : v) s += (s.empty() ? "" : ",") + std::to_string(t);
    return s;
  };
  return "harmful=" + join(harmful) + ";harmless=" + join(harmless);
}

std::string_view to_string(LossMode mode) noexcept { return mode == LossMode::verbalizer ? "verbalizer" : "vocabulary"; }

LossMode parse_loss_mode(std::string_view text) {
  if (text == "verbalizer") return LossMode::verbalizer;
  if (text == "vocabulary") return LossMode::vocabulary;
  throw ValidationError("unknown loss mode '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------------------------

FusionJudgeModel::FusionJudgeModel(const FusionConfig& config, std::uint64_t seed)
    : config_((config.validate(), config)), tokenizer_(config.vocab_size), extractor_(config) {
  verbalizer_.harmful = tokenizer_.encode("harmful");
  verbalizer_.harmless = tokenizer_.encode("harmless");
  Rng rng(seed);
  const int d = config.d;
  embed_ = Parameter("embedding", normal_matrix(rng, config.vocab_size, d, 1.0));
  enc_rel_ = Parameter("encoder.relative_bias", normal_matrix(rng, config.relative_buckets, config.heads, 0.1));
  auto attn = [&](const std::string& prefix) {
    return AttentionBlock{ones(prefix + ".norm", d), linear(rng, prefix + ".wq", d, d), linear(rng, prefix + ".wk", d, d),
                          linear(rng, prefix + ".wv", d, d), linear(rng, prefix + ".wo", d, d)};
  };
  auto ff = [&](const std::string& prefix) {
    return FeedForward{ones(prefix + ".norm", d), linear(rng, prefix + ".wi_gate", d, config.d_ff),
                       linear(rng, prefix + ".wi_lin", d, config.d_ff), linear(rng, prefix + ".wo", config.d_ff, d)};
  };
  for (int i = 0; i < config.num_layers; ++i) {
    const std::string p = "encoder." + std::to_string(i);
    encoder_.push_back(EncoderLayer{attn(p + ".attn"), ff(p + ".ff")});
  }
  for (int i = 0; i < config.num_layers; ++i) {
    const std::string p = "fusion." + std::to_string(i);
    fusion_.push_back(FusionProjection{linear(rng, p + ".w_q", d, config.d_k), linear(rng, p + ".w_k", d, config.d_k),
                                       linear(rng, p + ".w_v", d, config.d_k), linear(rng, p + ".w_o", config.d_k, d)});
  }
  enc_final_ = ones("encoder.final_norm", d);
  dec_rel_ = Parameter("decoder.relative_bias", normal_matrix(rng, config.relative_buckets, config.heads, 0.1));
  for (int i = 0; i < config.decoder_layers; ++i) {
    const std::string p = "decoder." + std::to_string(i);
    decoder_.push_back(DecoderLayer{attn(p + ".self_attn"), attn(p + ".cross"), ff(p + ".ff")});
  }
  dec_final_ = ones("decoder.final_norm", d);
  lm_head_ = Parameter("lm_head", normal_matrix(rng, d, config.vocab_size, 1.0 / std::sqrt(static_cast<double>(d))));
}

std::vector<const Parameter*> FusionJudgeModel::parameters() const {
  std::vector<const Parameter*> out{&embed_, &enc_rel_};
  auto add_attn = [&](const AttentionBlock& a) { out.insert(out.end(), {&a.norm, &a.wq, &a.wk, &a.wv, &a.wo}); };
  auto add_ff = [&](const FeedForward& f) { out.insert(out.end(), {&f.norm, &f.wi_gate, &f.wi_lin, &f.wo}); };
  for (const auto& l : encoder_) {
    add_attn(l.attn);
    add_ff(l.ff);
  }
  for (const auto& f : fusion_) out.insert(out.end(), {&f.w_q, &f.w_k, &f.w_v, &f.w_o});
  out.push_back(&enc_final_);
  out.push_back(&dec_rel_);
  for (const auto& l : decoder_) {
    add_attn(l.self_attn);
    add_attn(l.cross);
    add_ff(l.ff);
  }
  out.push_back(&dec_final_);
  out.push_back(&lm_head_);
  return out;
}

std::vector<Parameter*> FusionJudgeModel::parameters() {
  std::vector<Parameter*> out;
  for (const Parameter* p : std::as_const(*this).parameters()) out.push_back(const_cast<Parameter*>(p));
  return out;
}

void FusionJudgeModel::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

Tape::Var FusionJudgeModel::attention(Tape& tape, const AttentionBlock& block, Tape::Var x, Tape::Var memory,
                                      Tape::Var rel_table, bool bidirectional, bool causal, bool self_attention) const {
  Tape::Var xn = tape.rms_norm(x, tape.param(block.norm), kNormEps);
  Tape::Var mem = self_attention ? xn : memory;
  Tape::Var q = tape.matmul(xn, tape.param(block.wq));
  Tape::Var k = tape.matmul(mem, tape.param(block.wk));
  Tape::Var v = tape.matmul(mem, tape.param(block.wv));
  const auto m = static_cast<int>(tape.value(xn).rows());
  const auto n = static_cast<int>(tape.value(mem).rows());
  const int dh = config_.d / config_.heads;
  IndexMatrix buckets;
  if (rel_table.valid()) {
    buckets = bucket_index(m, n, bidirectional, config_.relative_buckets, config_.relative_max_distance);
  }
  Matrix mask;
  if (causal) {
    mask = Matrix::Zero(m, n);
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < n; ++j) mask(i, j) = -1e9;
    }
  }
  std::vector<Tape::Var> heads;
  for (int h = 0; h < config_.heads; ++h) {
    Tape::Var qh = tape.slice_cols(q, h * dh, dh);
    Tape::Var kh = tape.slice_cols(k, h * dh, dh);
    Tape::Var vh = tape.slice_cols(v, h * dh, dh);
    Tape::Var s = tape.scale(tape.matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
    if (rel_table.valid()) s = tape.add(s, tape.gather_bias(rel_table, h, buckets));
    if (causal) s = tape.add_constant(s, mask);
    heads.push_back(tape.matmul(tape.softmax_rows(s), vh));
  }
  Tape::Var o = heads.size() == 1 ? heads[0] : tape.concat_cols(heads);
  return tape.add(x, tape.matmul(o, tape.param(block.wo)));
}

Tape::Var FusionJudgeModel::feed_forward(Tape& tape, const FeedForward& ff, Tape::Var x) const {
  Tape::Var xn = tape.rms_norm(x, tape.param(ff.norm), kNormEps);
  Tape::Var gate = tape.gelu(tape.matmul(xn, tape.param(ff.wi_gate)));
  Tape::Var lin = tape.matmul(xn, tape.param(ff.wi_lin));
  return tape.add(x, tape.matmul(tape.mul(gate, lin), tape.param(ff.wo)));
}

Tape::Var FusionJudgeModel::encoder_layer(Tape& tape, int layer, Tape::Var h) const {
  const auto& l = encoder_.at(static_cast<std::size_t>(layer));
  Tape::Var a = attention(tape, l.attn, h, Tape::Var{}, tape.param(enc_rel_), true, false, true);
  return feed_forward(tape, l.ff, a);
}

Tape::Var FusionJudgeModel::fuse_layer(Tape& tape, int layer, Tape::Var h, Tape::Var h_img,
                                       CrossAttentionOutput* out) const {
  if (layer < 0 || layer >= config_.num_layers) throw ValidationError("fuse_layer: layer index out of range");
  Tape::Var lme = encoder_layer(tape, layer, h);
  CrossAttentionOutput ca = cross_attention(tape, h, h_img, fusion_[static_cast<std::size_t>(layer)]);
  if (out != nullptr) *out = ca;
  return tape.add(lme, ca.projected);
}

FusionJudgeModel::Encoding FusionJudgeModel::encode(Tape& tape, std::span<const int> ids, const Matrix* h_img) const {
  if (ids.empty()) throw ValidationError("encode: empty token sequence");
  if (static_cast<int>(ids.size()) > config_.max_text_tokens) {
    throw ValidationError("encode: " + std::to_string(ids.size()) + " tokens exceeds max_text_tokens " +
                          std::to_string(config_.max_text_tokens));
  }
  const bool fuse = config_.fusion_enabled && h_img != nullptr;
  Tape::Var img;
  if (fuse) {
    if (h_img->rows() != extractor_.num_patches() || h_img->cols() != config_.d) {
      throw ValidationError("encode: image features must be [" + std::to_string(extractor_.num_patches()) + ", " +
                            std::to_string(config_.d) + "]");
    }
    img = tape.constant(*h_img);
  }
  Encoding enc;
  Tape::Var h = tape.gather_rows(tape.param(embed_), ids);
  enc.layer_inputs.push_back(h);
  for (int i = 0; i < config_.num_layers; ++i) {
    if (fuse) {
      CrossAttentionOutput ca;
      h = fuse_layer(tape, i, h, img, &ca);
      enc.fusion.push_back(ca);
    } else {
      h = encoder_layer(tape, i, h);
    }
    enc.layer_inputs.push_back(h);
  }
  enc.encoded = tape.rms_norm(h, tape.param(enc_final_), kNormEps);
  return enc;
}

Tape::Var FusionJudgeModel::decode_log_probs(Tape& tape, Tape::Var encoded, std::span<const int> target) const {
  if (target.empty()) throw ValidationError("decode: empty target");
  std::vector<int> inputs{WordHashTokenizer::kPad};
  inputs.insert(inputs.end(), target.begin(), target.end() - 1);
  Tape::Var y = tape.gather_rows(tape.param(embed_), inputs);
  for (const auto& l : decoder_) {
    y = attention(tape, l.self_attn, y, Tape::Var{}, tape.param(dec_rel_), false, true, true);
    y = attention(tape, l.cross, y, encoded, Tape::Var{}, true, false, false);
    y = feed_forward(tape, l.ff, y);
  }
  y = tape.rms_norm(y, tape.param(dec_final_), kNormEps);
  return tape.log_softmax_rows(tape.matmul(y, tape.param(lm_head_)));
}

std::array<Tape::Var, 2> FusionJudgeModel::score_vars(Tape& tape, Tape::Var encoded) const {
  std::array<Tape::Var, 2> out;
  for (Label l : {Label::harmful, Label::harmless}) {
    const auto& target = verbalizer_.of(l);
    Tape::Var lp = decode_log_probs(tape, encoded, target);
    std::vector<std::pair<int, int>> cells;
    for (std::size_t t = 0; t < target.size(); ++t) cells.emplace_back(static_cast<int>(t), target[t]);
    out[l == Label::harmful ? 0 : 1] = tape.mean_all(tape.pick(lp, cells));
  }
  return out;
}

LabelScores FusionJudgeModel::scores(std::span<const int> ids, const Matrix* h_img) const {
  Tape tape;
  auto enc = encode(tape, ids, h_img);
  auto s = score_vars(tape, enc.encoded);
  return {tape.scalar(s[0]), tape.scalar(s[1])};
}

Tape::Var FusionJudgeModel::loss(Tape& tape, std::span<const int> ids, const Matrix* h_img, Label gold, LossMode mode,
                                 LabelScores* scores_out) const {
  auto enc = encode(tape, ids, h_img);
  auto s = score_vars(tape, enc.encoded);
  if (scores_out != nullptr) *scores_out = {tape.scalar(s[0]), tape.scalar(s[1])};
  if (mode == LossMode::vocabulary) return tape.scale(s[gold == Label::harmful ? 0 : 1], -1.0);
  const std::array<Tape::Var, 2> pair{s[0], s[1]};
  Tape::Var lp = tape.log_softmax_rows(tape.concat_cols(pair));
  const std::array<std::pair<int, int>, 1> cell{{{0, gold == Label::harmful ? 0 : 1}}};
  return tape.scale(tape.pick(lp, cell), -1.0);
}

}  // namespace memejudge::fusion
