#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scf/matrix.hpp"
#include "scf/rng.hpp"

namespace scf {

struct ModelConfig {
  int image_size = 16;
  std::vector<int> channels{8, 16};
  int feature_dim = 32;
  int kernel_size = 3;
  bool trainable_preprocessing = false;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Inputs arrive in [0, 1]; the high-pass residual is rescaled by this factor
/// so it is measured in 8-bit intensity steps (a +-1 embedding change has
/// unit size). Without it the residuals are ~1e-3 and the features collapse
/// onto the projection bias.
inline constexpr double kPixelGain = 255.0;

/// The fixed high-pass stencil [[-1,2,-1],[2,-4,2],[-1,2,-1]] / 4.
std::vector<double> high_pass_kernel();

/// Parameters of the toy steganalysis network, stored as flat blocks:
///   0          preprocessing kernel (3x3)
///   1 + 2l     conv layer l weights [out][in][3][3]
///   2 + 2l     conv layer l biases  [out]
///   then       projection weights [feature_dim][last channels], projection biases,
///              classifier weights [2][feature_dim], classifier biases.
/// The same layout holds gradients.
class ModelParams {
 public:
  ModelParams() = default;
  /// All-zero parameters shaped for `config`.
  explicit ModelParams(ModelConfig config);

  const ModelConfig& config() const noexcept { return config_; }

  std::size_t block_count() const noexcept { return blocks_.size(); }
  std::span<double> block(std::size_t b) noexcept { return blocks_[b]; }
  std::span<const double> block(std::size_t b) const noexcept { return blocks_[b]; }
  std::string block_name(std::size_t b) const;
  std::size_t parameter_count() const noexcept;

  std::span<double> pre_kernel() noexcept { return blocks_[0]; }
  std::span<const double> pre_kernel() const noexcept { return blocks_[0]; }
  std::span<double> conv_weight(std::size_t l) noexcept { return blocks_[1 + 2 * l]; }
  std::span<const double> conv_weight(std::size_t l) const noexcept { return blocks_[1 + 2 * l]; }
  std::span<double> conv_bias(std::size_t l) noexcept { return blocks_[2 + 2 * l]; }
  std::span<const double> conv_bias(std::size_t l) const noexcept { return blocks_[2 + 2 * l]; }
  std::span<double> proj_weight() noexcept { return blocks_[head() + 0]; }
  std::span<const double> proj_weight() const noexcept { return blocks_[head() + 0]; }
  std::span<double> proj_bias() noexcept { return blocks_[head() + 1]; }
  std::span<const double> proj_bias() const noexcept { return blocks_[head() + 1]; }
  std::span<double> cls_weight() noexcept { return blocks_[head() + 2]; }
  std::span<const double> cls_weight() const noexcept { return blocks_[head() + 2]; }
  std::span<double> cls_bias() noexcept { return blocks_[head() + 3]; }
  std::span<const double> cls_bias() const noexcept { return blocks_[head() + 3]; }

  bool all_finite() const noexcept;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  std::size_t head() const noexcept { return 1 + 2 * config_.channels.size(); }

  ModelConfig config_;
  std::vector<std::vector<double>> blocks_;
};

/// High-pass preprocessing kernel plus uniform fan-in initialization of the
/// trainable weights (biases start at zero).
ModelParams init_params(const ModelConfig& cfg, Rng& rng);

/// Activations kept by forward() for the backward pass.
struct ForwardTrace {
  std::size_t batch = 0;
  Matrix input;                             // B x (H*W)
  std::vector<double> residual;             // B x H x W high-pass output
  std::vector<std::vector<double>> pre;     // per layer, B x C x h x w conv outputs
  std::vector<std::vector<double>> pooled;  // per layer, B x C x h/2 x w/2
  Matrix gap;                               // B x C_last
  Matrix z;                                 // B x feature_dim
};

struct ForwardResult {
  Matrix z;       // features fed to the contrastive loss
  Matrix logits;  // B x 2
  ForwardTrace trace;
};

/// images: B x (H*W) row-major pixels scaled to [0, 1].
/// Pipeline: fixed 3x3 high-pass filter (edge-replicated border, output
/// scaled by kPixelGain) -> per layer
/// [3x3 conv, zero padding -> ReLU -> 2x2 average pool] -> global average
/// pool -> linear projection to z -> linear classifier to two logits.
ForwardResult forward(const ModelParams& params, const Matrix& images);

/// Gradients of the forward pipeline given upstream gradients on the features
/// (dz, from the contrastive loss) and on the logits (from cross-entropy).
/// The preprocessing kernel's gradient is always produced; whether it is
/// applied is up to the optimizer.
ModelParams backward(const ModelParams& params, const ForwardTrace& trace, const Matrix& dz,
                     const Matrix& dlogits);

/// Binary checkpoint: "SCFC", version 1, config integers (u32 LE), each
/// parameter block as a u32 LE length plus f64 LE values, trailing CRC-32 of
/// every preceding byte.
std::vector<unsigned char> encode_checkpoint(const ModelParams& params);
ModelParams decode_checkpoint(std::span<const unsigned char> bytes);
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace scf
