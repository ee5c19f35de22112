#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "memejudge/corpus/image.hpp"
#include "memejudge/corpus/types.hpp"
#include "memejudge/fusion/autodiff.hpp"
#include "memejudge/fusion/tokenizer.hpp"

namespace memejudge::fusion {

using corpus::Label;

inline constexpr std::string_view kToyBackbone = "toy-t5";
inline constexpr std::string_view kToyExtractor = "toy-vit";

struct FusionConfig {
  int d = 768;
  int d_k = 384;
  int num_layers = 12;
  int max_text_tokens = 512;
  int image_size = 224;
  int patch_size = 32;
  bool class_token = false;
  std::string backbone_id = std::string(kToyBackbone);
  std::string extractor_id = std::string(kToyExtractor);
  bool fusion_enabled = true;

  // Toy backbone shape.
  int vocab_size = 32128;
  int heads = 12;
  int d_ff = 2048;
  int decoder_layers = 12;
  int relative_buckets = 32;
  int relative_max_distance = 128;
  int extractor_width = 768;

  static FusionConfig toy();

  int num_patches() const noexcept;
  // Problems as "field: message"; empty when valid.
  std::vector<std::string> problems() const;
  void validate() const;
  bool operator==(const FusionConfig&) const = default;
};

nlohmann::json to_json(const FusionConfig& c);
// Unknown keys are rejected; missing keys keep the values of `base`.
FusionConfig fusion_config_from_json(const nlohmann::json& j, const FusionConfig& base = {});
// Covers everything that changes the architecture or the input encoding.
std::string fingerprint(const FusionConfig& c);

// Bucketed relative position (memory - query) as in T5.
int relative_position_bucket(int relative_position, bool bidirectional, int num_buckets, int max_distance);

// Frozen patch-level feature extractor. Weights derive only from extractor_id and shape, so
// every model built from the same config sees the same features.
class VisionExtractor {
 public:
  explicit VisionExtractor(const FusionConfig& config);

  int num_patches() const noexcept { return num_patches_; }
  // [n, d]; throws ValidationError when the tensor does not match image_size.
  Matrix extract(const corpus::ImageTensor& image) const;
  std::string digest() const;
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  int image_size_;
  int patch_size_;
  bool class_token_;
  int num_patches_;
  Parameter patch_proj_;
  Parameter patch_bias_;
  Parameter position_;
  Parameter out_proj_;
};

// Per-layer one-head cross-attention projections.
struct FusionProjection {
  Parameter w_q;  // [d, d_k]
  Parameter w_k;  // [d, d_k]
  Parameter w_v;  // [d, d_k]
  Parameter w_o;  // [d_k, d]
};

struct CrossAttentionOutput {
  Tape::Var weights;    // [m, n]
  Tape::Var attended;   // [m, d_k]
  Tape::Var projected;  // [m, d]
};

// softmax(Q K^T / sqrt(d_k)) V with Q from the text states and K, V from the image states,
// followed by W_O. Throws ValidationError on non-finite inputs.
CrossAttentionOutput cross_attention(Tape& tape, Tape::Var h_text, Tape::Var h_img, const FusionProjection& proj);

struct LabelScores {
  double harmful = 0.0;
  double harmless = 0.0;

  double of(Label l) const noexcept { return l == Label::harmful ? harmful : harmless; }
};

// Ties go to harmful.
Label decide(const LabelScores& scores) noexcept;

struct Verbalizer {
  std::vector<int> harmful;
  std::vector<int> harmless;

  const std::vector<int>& of(Label l) const noexcept { return l == Label::harmful ? harmful : harmless; }
  std::string id() const;
};

enum class LossMode { verbalizer, vocabulary };
std::string_view to_string(LossMode mode) noexcept;
LossMode parse_loss_mode(std::string_view text);

class FusionJudgeModel {
 public:
  FusionJudgeModel(const FusionConfig& config, std::uint64_t seed);
  FusionJudgeModel(const FusionJudgeModel&) = delete;
  FusionJudgeModel& operator=(const FusionJudgeModel&) = delete;

  struct AttentionBlock {
    Parameter norm, wq, wk, wv, wo;
  };
  struct FeedForward {
    Parameter norm, wi_gate, wi_lin, wo;  // gated GELU
  };
  struct EncoderLayer {
    AttentionBlock attn;
    FeedForward ff;
  };
  struct DecoderLayer {
    AttentionBlock self_attn;
    AttentionBlock cross;
    FeedForward ff;
  };

  struct Encoding {
    Tape::Var encoded;                           // final normalized encoder output [m, d]
    std::vector<Tape::Var> layer_inputs;         // H^i for i in [0, L]
    std::vector<CrossAttentionOutput> fusion;    // per layer, empty when fusion is off
  };

  const FusionConfig& config() const noexcept { return config_; }
  const WordHashTokenizer& tokenizer() const noexcept { return tokenizer_; }
  const Verbalizer& verbalizer() const noexcept { return verbalizer_; }
  const VisionExtractor& extractor() const noexcept { return extractor_; }

  Matrix image_features(const corpus::ImageTensor& image) const { return extractor_.extract(image); }

  // The backbone's own encoder layer (self-attention + feed-forward, pre-norm residual).
  Tape::Var encoder_layer(Tape& tape, int layer, Tape::Var h) const;
  // H^{i+1} = LME^i(H^i) + attended image features projected by W_O^i.
  Tape::Var fuse_layer(Tape& tape, int layer, Tape::Var h, Tape::Var h_img, CrossAttentionOutput* out = nullptr) const;

  // `h_img` null or fusion disabled → text-only backbone encoding.
  Encoding encode(Tape& tape, std::span<const int> ids, const Matrix* h_img) const;
  // Length-normalized teacher-forced log-likelihoods of both verbalizer targets.
  std::array<Tape::Var, 2> score_vars(Tape& tape, Tape::Var encoded) const;  // {harmful, harmless}
  // Per-token vocabulary log-probabilities of `target` given the encoding: [len, V].
  Tape::Var decode_log_probs(Tape& tape, Tape::Var encoded, std::span<const int> target) const;

  LabelScores scores(std::span<const int> ids, const Matrix* h_img) const;
  Tape::Var loss(Tape& tape, std::span<const int> ids, const Matrix* h_img, Label gold, LossMode mode,
                 LabelScores* scores_out = nullptr) const;

  std::vector<Parameter*> parameters();  // trainable, stable order
  std::vector<const Parameter*> parameters() const;
  std::vector<FusionProjection>& fusion_projections() noexcept { return fusion_; }
  const std::vector<FusionProjection>& fusion_projections() const noexcept { return fusion_; }
  const std::vector<EncoderLayer>& encoder_layers() const noexcept { return encoder_; }
  const Parameter& encoder_relative_bias() const noexcept { return enc_rel_; }
  Parameter& embedding() noexcept { return embed_; }
  Parameter& lm_head() noexcept { return lm_head_; }
  void zero_grad();

 private:
  Tape::Var attention(Tape& tape, const AttentionBlock& block, Tape::Var x, Tape::Var memory, Tape::Var rel_table,
                      bool bidirectional, bool causal, bool self_attention) const;
  Tape::Var feed_forward(Tape& tape, const FeedForward& ff, Tape::Var x) const;

  FusionConfig config_;
  WordHashTokenizer tokenizer_;
  Verbalizer verbalizer_;
  VisionExtractor extractor_;
  Parameter embed_;
  Parameter enc_rel_;
  Parameter dec_rel_;
  std::vector<EncoderLayer> encoder_;
  std::vector<FusionProjection> fusion_;
  Parameter enc_final_;
  std::vector<DecoderLayer> decoder_;
  Parameter dec_final_;
  Parameter lm_head_;
};

}  // namespace memejudge::fusion
