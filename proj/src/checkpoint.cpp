#include <string>

#include "binary_io.hpp"
#include "scf/model.hpp"

namespace scf {

namespace {
constexpr std::uint8_t kCheckpointVersion = 1;
}

std::vector<unsigned char> encode_checkpoint(const ModelParams& params) {
  const ModelConfig& cfg = params.config();
  detail::ByteWriter w;
  w.tag("SCFC");
  w.u8(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(cfg.image_size));
  w.u32(static_cast<std::uint32_t>(cfg.channels.size()));
  for (int c : cfg.channels) w.u32(static_cast<std::uint32_t>(c));
  w.u32(static_cast<std::uint32_t>(cfg.feature_dim));
  w.u32(static_cast<std::uint32_t>(cfg.kernel_size));
  w.u32(cfg.trainable_preprocessing ? 1u : 0u);
  for (std::size_t b = 0; b < params.block_count(); ++b) {
    const auto block = params.block(b);
    w.u32(static_cast<std::uint32_t>(block.size()));
    for (double v : block) w.f64(v);
  }
  w.seal();
  return w.take();
}

ModelParams decode_checkpoint(std::span<const unsigned char> bytes) {
  const std::string what = "checkpoint";
  detail::ByteReader r(detail::open_sealed(bytes, "SCFC", kCheckpointVersion, what), what);

  ModelConfig cfg;
  cfg.image_size = static_cast<int>(r.u32("image_size"));
  const std::uint32_t layers = r.u32("layer count");
  if (layers == 0 || layers > 16) r.fail("layer count", std::to_string(layers));
  cfg.channels.clear();
  for (std::uint32_t l = 0; l < layers; ++l) cfg.channels.push_back(static_cast<int>(r.u32("channels")));
  cfg.feature_dim = static_cast<int>(r.u32("feature_dim"));
  cfg.kernel_size = static_cast<int>(r.u32("kernel_size"));
  const std::uint32_t trainable = r.u32("trainable_preprocessing");
  if (trainable > 1) r.fail("trainable_preprocessing", std::to_string(trainable));
  cfg.trainable_preprocessing = trainable == 1;
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    r.fail("model config", e.what());
  }

  ModelParams params(cfg);
  for (std::size_t b = 0; b < params.block_count(); ++b) {
    auto block = params.block(b);
    const std::uint32_t len = r.u32("block length");
    if (len != block.size()) {
      r.fail(params.block_name(b) + " length", std::to_string(len) + " != " + std::to_string(block.size()));
    }
    for (double& v : block) v = r.f64("parameter value");
  }
  if (r.remaining() != 0) r.fail("trailing data", std::to_string(r.remaining()) + " extra bytes");
  return params;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  detail::write_file(path, encode_checkpoint(params));
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file(path));
}

}  // namespace scf
