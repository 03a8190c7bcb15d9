#include "scf/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scf/error.hpp"

namespace scf {

void ModelConfig::validate() const {
  if (image_size < 8) throw InvalidArgument("image_size must be at least 8");
  if (feature_dim < 2) throw InvalidArgument("feature_dim must be at least 2");
  if (kernel_size != 3) throw InvalidArgument("only 3x3 kernels are supported");
  if (channels.empty()) throw InvalidArgument("at least one conv layer is required");
  int side = image_size;
  for (int c : channels) {
    if (c < 1) throw InvalidArgument("channel counts must be positive");
    if (side % 2 != 0 || side < 2) {
      throw InvalidArgument("image_size must stay even through every 2x2 pooling stage");
    }
    side /= 2;
  }
}

std::vector<double> high_pass_kernel() {
  return {-0.25, 0.5, -0.25, 0.5, -1.0, 0.5, -0.25, 0.5, -0.25};
}

ModelParams::ModelParams(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  blocks_.emplace_back(9, 0.0);
  int in = 1;
  for (int out : config_.channels) {
    blocks_.emplace_back(static_cast<std::size_t>(out * in * 9), 0.0);
    blocks_.emplace_back(static_cast<std::size_t>(out), 0.0);
    in = out;
  }
  const auto f = static_cast<std::size_t>(config_.feature_dim);
  blocks_.emplace_back(f * static_cast<std::size_t>(in), 0.0);
  blocks_.emplace_back(f, 0.0);
  blocks_.emplace_back(2 * f, 0.0);
  blocks_.emplace_back(2, 0.0);
}

std::string ModelParams::block_name(std::size_t b) const {
  if (b == 0) return "pre_kernel";
  const std::size_t layers = config_.channels.size();
  if (b < 1 + 2 * layers) {
    const std::size_t l = (b - 1) / 2;
    return (b % 2 == 1 ? "conv" + std::to_string(l) + ".weight" : "conv" + std::to_string(l) + ".bias");
  }
  static const char* names[] = {"proj.weight", "proj.bias", "cls.weight", "cls.bias"};
  return names[b - head()];
}

std::size_t ModelParams::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += b.size();
  return n;
}

bool ModelParams::all_finite() const noexcept {
  for (const auto& b : blocks_) {
    for (double v : b) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

ModelParams init_params(const ModelConfig& cfg, Rng& rng) {
  ModelParams p(cfg);
  const auto hp = high_pass_kernel();
  std::copy(hp.begin(), hp.end(), p.pre_kernel().begin());

  auto fill = [&rng](std::span<double> w, double bound) {
    for (double& v : w) v = (2.0 * rng.uniform() - 1.0) * bound;
  };
  int in = 1;
  for (std::size_t l = 0; l < cfg.channels.size(); ++l) {
    fill(p.conv_weight(l), std::sqrt(6.0 / (9.0 * in)));
    in = cfg.channels[l];
  }
  fill(p.proj_weight(), std::sqrt(3.0 / in));
  fill(p.cls_weight(), std::sqrt(3.0 / cfg.feature_dim));
  return p;
}

namespace {

// 3x3 convolution with zero padding, stride 1, for one sample.
// in: [cin][h][w], weight: [cout][cin][3][3], out: [cout][h][w].
void conv3x3(const double* in, int cin, int h, int w, const double* weight, const double* bias,
             int cout, double* out) {
  for (int co = 0; co < cout; ++co) {
    double* o = out + static_cast<std::size_t>(co) * h * w;
    std::fill(o, o + h * w, bias[co]);
    for (int ci = 0; ci < cin; ++ci) {
      const double* src = in + static_cast<std::size_t>(ci) * h * w;
      const double* k = weight + (static_cast<std::size_t>(co) * cin + ci) * 9;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double acc = 0.0;
          for (int ky = 0; ky < 3; ++ky) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int sx = x + kx - 1;
              if (sx < 0 || sx >= w) continue;
              acc += k[ky * 3 + kx] * src[sy * w + sx];
            }
          }
          o[y * w + x] += acc;
        }
      }
    }
  }
}

// Backward of conv3x3. din may be null when the input gradient is not needed.
void conv3x3_backward(const double* in, int cin, int h, int w, const double* weight, int cout,
                      const double* dout, double* dweight, double* dbias, double* din) {
  for (int co = 0; co < cout; ++co) {
    const double* g = dout + static_cast<std::size_t>(co) * h * w;
    double bsum = 0.0;
    for (int i = 0; i < h * w; ++i) bsum += g[i];
    dbias[co] += bsum;
    for (int ci = 0; ci < cin; ++ci) {
      const double* src = in + static_cast<std::size_t>(ci) * h * w;
      const double* k = weight + (static_cast<std::size_t>(co) * cin + ci) * 9;
      double* dk = dweight + (static_cast<std::size_t>(co) * cin + ci) * 9;
      double* dsrc = din ? din + static_cast<std::size_t>(ci) * h * w : nullptr;
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double gy = g[y * w + x];
          if (gy == 0.0) continue;
          for (int ky = 0; ky < 3; ++ky) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int sx = x + kx - 1;
              if (sx < 0 || sx >= w) continue;
              dk[ky * 3 + kx] += gy * src[sy * w + sx];
              if (dsrc) dsrc[sy * w + sx] += gy * k[ky * 3 + kx];
            }
          }
        }
      }
    }
  }
}

inline int clamp_index(int v, int n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); }

void high_pass(const double* img, int n, const double* k, double* out) {
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double acc = 0.0;
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = clamp_index(y + ky - 1, n);
        for (int kx = 0; kx < 3; ++kx) {
          acc += k[ky * 3 + kx] * img[sy * n + clamp_index(x + kx - 1, n)];
        }
      }
      out[y * n + x] = acc;
    }
  }
}

void high_pass_kernel_grad(const double* img, int n, const double* dout, double* dk) {
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double g = dout[y * n + x];
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = clamp_index(y + ky - 1, n);
        for (int kx = 0; kx < 3; ++kx) {
          dk[ky * 3 + kx] += g * img[sy * n + clamp_index(x + kx - 1, n)];
        }
      }
    }
  }
}

// ReLU followed by 2x2 average pooling, [c][h][w] -> [c][h/2][w/2].
void relu_pool(const double* pre, int c, int h, int w, double* out) {
  const int oh = h / 2;
  const int ow = w / 2;
  for (int ch = 0; ch < c; ++ch) {
    const double* p = pre + static_cast<std::size_t>(ch) * h * w;
    double* o = out + static_cast<std::size_t>(ch) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const double a = std::max(p[(2 * y) * w + 2 * x], 0.0);
        const double b = std::max(p[(2 * y) * w + 2 * x + 1], 0.0);
        const double cc = std::max(p[(2 * y + 1) * w + 2 * x], 0.0);
        const double d = std::max(p[(2 * y + 1) * w + 2 * x + 1], 0.0);
        o[y * ow + x] = 0.25 * (a + b + cc + d);
      }
    }
  }
}

void relu_pool_backward(const double* pre, int c, int h, int w, const double* dout, double* dpre) {
  const int oh = h / 2;
  const int ow = w / 2;
  for (int ch = 0; ch < c; ++ch) {
    const double* p = pre + static_cast<std::size_t>(ch) * h * w;
    const double* g = dout + static_cast<std::size_t>(ch) * oh * ow;
    double* dp = dpre + static_cast<std::size_t>(ch) * h * w;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int idx = y * w + x;
        dp[idx] = p[idx] > 0.0 ? 0.25 * g[(y / 2) * ow + x / 2] : 0.0;
      }
    }
  }
}

}  // namespace

ForwardResult forward(const ModelParams& params, const Matrix& images) {
  const ModelConfig& cfg = params.config();
  const int n = cfg.image_size;
  const auto pixels = static_cast<std::size_t>(n) * n;
  if (images.cols() != pixels) {
    throw InvalidArgument("forward: image has " + std::to_string(images.cols()) + " pixels, model expects " +
                          std::to_string(pixels));
  }
  const std::size_t batch = images.rows();
  const std::size_t layers = cfg.channels.size();

  ForwardResult r;
  ForwardTrace& t = r.trace;
  t.batch = batch;
  t.input = images;
  t.residual.assign(batch * pixels, 0.0);
  t.pre.resize(layers);
  t.pooled.resize(layers);

  std::vector<int> side(layers + 1);
  side[0] = n;
  for (std::size_t l = 0; l < layers; ++l) {
    side[l + 1] = side[l] / 2;
    const auto c = static_cast<std::size_t>(cfg.channels[l]);
    t.pre[l].assign(batch * c * side[l] * side[l], 0.0);
    t.pooled[l].assign(batch * c * side[l + 1] * side[l + 1], 0.0);
  }
  const int last_c = cfg.channels.back();
  const int last_side = side[layers];
  t.gap = Matrix(batch, static_cast<std::size_t>(last_c));

  for (std::size_t b = 0; b < batch; ++b) {
    double* res = t.residual.data() + b * pixels;
    high_pass(images.row(b).data(), n, params.pre_kernel().data(), res);
    for (std::size_t i = 0; i < pixels; ++i) res[i] *= kPixelGain;
    const double* in = res;
    int cin = 1;
    for (std::size_t l = 0; l < layers; ++l) {
      const int h = side[l];
      const int cout = cfg.channels[l];
      double* pre = t.pre[l].data() + b * static_cast<std::size_t>(cout) * h * h;
      conv3x3(in, cin, h, h, params.conv_weight(l).data(), params.conv_bias(l).data(), cout, pre);
      double* pooled = t.pooled[l].data() + b * static_cast<std::size_t>(cout) * side[l + 1] * side[l + 1];
      relu_pool(pre, cout, h, h, pooled);
      in = pooled;
      cin = cout;
    }
    const double area = static_cast<double>(last_side) * last_side;
    for (int c = 0; c < last_c; ++c) {
      double acc = 0.0;
      for (int i = 0; i < last_side * last_side; ++i) acc += in[c * last_side * last_side + i];
      t.gap(b, c) = acc / area;
    }
  }

  const auto f = static_cast<std::size_t>(cfg.feature_dim);
  const auto pw = params.proj_weight();
  const auto pb = params.proj_bias();
  r.z = Matrix(batch, f);
  for (std::size_t b = 0; b < batch; ++b) {
    const auto g = t.gap.row(b);
    for (std::size_t j = 0; j < f; ++j) {
      r.z(b, j) = pb[j] + dot(pw.subspan(j * g.size(), g.size()), g);
    }
  }
  const auto cw = params.cls_weight();
  const auto cb = params.cls_bias();
  r.logits = Matrix(batch, 2);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t k = 0; k < 2; ++k) r.logits(b, k) = cb[k] + dot(cw.subspan(k * f, f), r.z.row(b));
  }
  t.z = r.z;
  return r;
}

ModelParams backward(const ModelParams& params, const ForwardTrace& trace, const Matrix& dz,
                     const Matrix& dlogits) {
  const ModelConfig& cfg = params.config();
  const std::size_t batch = trace.batch;
  const auto f = static_cast<std::size_t>(cfg.feature_dim);
  const std::size_t layers = cfg.channels.size();
  if (trace.z.rows() != batch || trace.z.cols() != f || trace.pre.size() != layers ||
      trace.gap.cols() != static_cast<std::size_t>(cfg.channels.back())) {
    throw InvalidArgument("backward: trace does not match the model");
  }
  if (dz.rows() != batch || dz.cols() != f) throw InvalidArgument("backward: dz shape mismatch");
  if (dlogits.rows() != batch || dlogits.cols() != 2) throw InvalidArgument("backward: dlogits shape mismatch");

  ModelParams g(cfg);
  const int n = cfg.image_size;
  const auto pixels = static_cast<std::size_t>(n) * n;
  std::vector<int> side(layers + 1);
  side[0] = n;
  for (std::size_t l = 0; l < layers; ++l) side[l + 1] = side[l] / 2;
  const int last_c = cfg.channels.back();
  const int last_side = side[layers];

  const auto cw = params.cls_weight();
  const auto pw = params.proj_weight();
  auto gcw = g.cls_weight();
  auto gcb = g.cls_bias();
  auto gpw = g.proj_weight();
  auto gpb = g.proj_bias();

  std::vector<double> dzb(f);
  std::vector<double> dgap(static_cast<std::size_t>(last_c));
  std::vector<std::vector<double>> dpooled(layers);
  std::vector<std::vector<double>> dpre(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const auto c = static_cast<std::size_t>(cfg.channels[l]);
    dpooled[l].resize(c * side[l + 1] * side[l + 1]);
    dpre[l].resize(c * side[l] * side[l]);
  }
  std::vector<double> dres(pixels);

  for (std::size_t b = 0; b < batch; ++b) {
    // classifier
    const auto zb = trace.z.row(b);
    for (std::size_t j = 0; j < f; ++j) dzb[j] = dz(b, j);
    for (std::size_t k = 0; k < 2; ++k) {
      const double gl = dlogits(b, k);
      gcb[k] += gl;
      for (std::size_t j = 0; j < f; ++j) {
        gcw[k * f + j] += gl * zb[j];
        dzb[j] += gl * cw[k * f + j];
      }
    }
    // projection
    const auto gapb = trace.gap.row(b);
    std::fill(dgap.begin(), dgap.end(), 0.0);
    for (std::size_t j = 0; j < f; ++j) {
      gpb[j] += dzb[j];
      for (std::size_t c = 0; c < gapb.size(); ++c) {
        gpw[j * gapb.size() + c] += dzb[j] * gapb[c];
        dgap[c] += dzb[j] * pw[j * gapb.size() + c];
      }
    }
    // global average pool
    {
      const double inv_area = 1.0 / (static_cast<double>(last_side) * last_side);
      auto& dp = dpooled[layers - 1];
      for (int c = 0; c < last_c; ++c) {
        for (int i = 0; i < last_side * last_side; ++i) dp[c * last_side * last_side + i] = dgap[c] * inv_area;
      }
    }
    // conv stack
    for (std::size_t li = layers; li-- > 0;) {
      const int h = side[li];
      const int cout = cfg.channels[li];
      const int cin = li == 0 ? 1 : cfg.channels[li - 1];
      const double* pre = trace.pre[li].data() + b * static_cast<std::size_t>(cout) * h * h;
      relu_pool_backward(pre, cout, h, h, dpooled[li].data(), dpre[li].data());
      const double* in = li == 0 ? trace.residual.data() + b * pixels
                                 : trace.pooled[li - 1].data() + b * static_cast<std::size_t>(cin) * h * h;
      double* din = li == 0 ? dres.data() : dpooled[li - 1].data();
      std::fill(din, din + static_cast<std::size_t>(cin) * h * h, 0.0);
      conv3x3_backward(in, cin, h, h, params.conv_weight(li).data(), cout, dpre[li].data(),
                       g.conv_weight(li).data(), g.conv_bias(li).data(), din);
    }
    for (double& v : dres) v *= kPixelGain;
    high_pass_kernel_grad(trace.input.row(b).data(), n, dres.data(), g.pre_kernel().data());
  }
  return g;
}

}  // namespace scf
