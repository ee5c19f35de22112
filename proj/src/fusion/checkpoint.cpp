#include "memejudge/fusion/checkpoint.hpp"

#include <cstring>

#include "memejudge/common/io.hpp"

namespace memejudge::fusion {

namespace {

constexpr std::string_view kMagic = "MEMEJUDGE-CKPT-1\n";

struct LayoutName {
  ContextLayout layout;
  std::string_view name;
};

constexpr LayoutName kLayouts[] = {{ContextLayout::judge_ordered, "judge-ordered"},
                                   {ContextLayout::fixed_order, "fixed-order"},
                                   {ContextLayout::meme_only, "meme-only"},
                                   {ContextLayout::harmful_only, "harmful-only"},
                                   {ContextLayout::harmless_only, "harmless-only"},
                                   {ContextLayout::preferred_only, "preferred-only"}};

}  // namespace

std::string_view to_string(ContextLayout layout) noexcept {
  for (const auto& l : kLayouts) {
    if (l.layout == layout) return l.name;
  }
  return "judge-ordered";
}

ContextLayout parse_context_layout(std::string_view text) {
  for (const auto& l : kLayouts) {
    if (l.name == text) return l.layout;
  }
  throw ValidationError("unknown context layout '" + std::string(text) + "'");
}

void save_checkpoint(const fs::path& path, const FusionJudgeModel& model, CheckpointMeta meta) {
  meta.fusion = model.config();
  meta.tokenizer_id = model.tokenizer().id();
  meta.verbalizer_id = model.verbalizer().id();
  meta.config_fingerprint = fingerprint(model.config());
  meta.extractor_digest = model.extractor().digest();
  json tensors = json::array();
  std::size_t offset = 0;
  const auto params = model.parameters();
  for (const Parameter* p : params) {
    tensors.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}, {"offset", offset}});
    offset += static_cast<std::size_t>(p->value.size());
  }
  json header = {{"fusion_config", to_json(meta.fusion)},
                 {"train_config", to_json(meta.train)},
                 {"context_layout", to_string(meta.layout)},
                 {"caption_appended", meta.caption_appended},
                 {"data_fingerprints", meta.data_fingerprints},
                 {"tokenizer_id", meta.tokenizer_id},
                 {"verbalizer_id", meta.verbalizer_id},
                 {"config_fingerprint", meta.config_fingerprint},
                 {"extractor_digest", meta.extractor_digest},
                 {"tensors", tensors},
                 {"dtype", "float64-le"}};
  const std::string head = canonical_dump(header);
  std::string blob(kMagic);
  const std::uint64_t len = head.size();
  for (int i = 0; i < 8; ++i) blob.push_back(static_cast<char>((len >> (8 * i)) & 0xff));
  blob += head;
  const std::size_t data_at = blob.size();
  blob.resize(data_at + offset * sizeof(double));
  std::size_t at = data_at;
  for (const Parameter* p : params) {
    const std::size_t bytes = static_cast<std::size_t>(p->value.size()) * sizeof(double);
    std::memcpy(blob.data() + at, p->value.data(), bytes);
    at += bytes;
  }
  write_file_atomic(path, blob);
}

LoadedCheckpoint load_checkpoint(const fs::path& path) {
  const auto bytes = read_binary_file(path);
  auto bad = [&](const std::string& why) { return ValidationError("checkpoint " + path.string() + ": " + why); };
  if (bytes.size() < kMagic.size() + 8 ||
      std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
    throw bad("not a checkpoint file");
  }
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(bytes[kMagic.size() + static_cast<std::size_t>(i)]) << (8 * i);
  const std::size_t head_at = kMagic.size() + 8;
  if (head_at + len > bytes.size()) throw bad("truncated header");
  json header;
  try {
    header = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(head_at),
                         bytes.begin() + static_cast<std::ptrdiff_t>(head_at + len));
  } catch (const json::exception& e) {
    throw bad(std::string("bad header: ") + e.what());
  }
  LoadedCheckpoint out;
  try {
    out.meta.fusion = fusion_config_from_json(header.at("fusion_config"));
    out.meta.train = train_config_from_json(header.at("train_config"));
    out.meta.layout = parse_context_layout(header.at("context_layout").get<std::string>());
    out.meta.caption_appended = header.at("caption_appended").get<bool>();
    out.meta.data_fingerprints = header.at("data_fingerprints");
    out.meta.tokenizer_id = header.at("tokenizer_id").get<std::string>();
    out.meta.verbalizer_id = header.at("verbalizer_id").get<std::string>();
    out.meta.config_fingerprint = header.at("config_fingerprint").get<std::string>();
    out.meta.extractor_digest = header.at("extractor_digest").get<std::string>();
  } catch (const json::exception& e) {
    throw bad(std::string("bad header: ") + e.what());
  }
  if (fingerprint(out.meta.fusion) != out.meta.config_fingerprint) throw bad("config fingerprint does not match header");
  out.model = std::make_unique<FusionJudgeModel>(out.meta.fusion, 0);
  if (out.model->tokenizer().id() != out.meta.tokenizer_id) throw bad("tokenizer mismatch");
  if (out.model->verbalizer().id() != out.meta.verbalizer_id) throw bad("verbalizer mismatch");
  if (out.model->extractor().digest() != out.meta.extractor_digest) throw bad("vision extractor digest mismatch");
  const std::size_t data_at = head_at + len;
  const std::size_t doubles = (bytes.size() - data_at) / sizeof(double);
  auto params = out.model->parameters();
  const auto& tensors = header.at("tensors");
  if (tensors.size() != params.size()) throw bad("tensor count does not match the model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = tensors[i];
    Parameter& p = *params[i];
    const auto rows = t.at("rows").get<Eigen::Index>();
    const auto cols = t.at("cols").get<Eigen::Index>();
    const auto off = t.at("offset").get<std::size_t>();
    if (t.at("name").get<std::string>() != p.name || rows != p.value.rows() || cols != p.value.cols()) {
      throw bad("tensor '" + t.at("name").get<std::string>() + "' does not match the model");
    }
    if (off + static_cast<std::size_t>(rows * cols) > doubles) throw bad("truncated tensor data");
    std::memcpy(p.value.data(), bytes.data() + data_at + off * sizeof(double),
                static_cast<std::size_t>(rows * cols) * sizeof(double));
  }
  return out;
}

void check_fingerprint(const CheckpointMeta& meta, const FusionConfig& runtime) {
  const std::string got = fingerprint(runtime);
  if (got != meta.config_fingerprint) {
    throw FingerprintMismatch("checkpoint was trained with fusion config " + meta.config_fingerprint.substr(0, 12) +
                              " but the runtime config is " + got.substr(0, 12));
  }
}

}  // namespace memejudge::fusion
