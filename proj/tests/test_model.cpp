#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "scf/error.hpp"
#include "scf/losses.hpp"
#include "scf/model.hpp"
#include "scf/numkit.hpp"
#include "scf/rss.hpp"

using namespace scf;

namespace {

ModelConfig micro_config() {
  ModelConfig cfg;
  cfg.image_size = 8;
  cfg.channels = {2, 2};
  cfg.feature_dim = 4;
  cfg.trainable_preprocessing = true;
  return cfg;
}

Matrix random_images(Rng& rng, std::size_t batch, int size) {
  Matrix m(batch, static_cast<std::size_t>(size * size));
  for (double& v : m.values()) v = rng.uniform();
  return m;
}

// Biases start at zero; give them values so their gradients are exercised.
void jitter_biases(ModelParams& p, Rng& rng) {
  for (std::size_t l = 0; l < p.config().channels.size(); ++l) {
    for (double& v : p.conv_bias(l)) v = 0.05 * rng.gaussian();
  }
  for (double& v : p.proj_bias()) v = 0.1 * rng.gaussian();
  for (double& v : p.cls_bias()) v = 0.1 * rng.gaussian();
}

}  // namespace

TEST_CASE("init_params") {
  const ModelConfig cfg;
  Rng a(1);
  Rng b(1);
  Rng c(2);
  const auto pa = init_params(cfg, a);
  CHECK(pa == init_params(cfg, b));
  const auto pc = init_params(cfg, c);
  CHECK_FALSE(std::equal(pa.conv_weight(0).begin(), pa.conv_weight(0).end(), pc.conv_weight(0).begin()));
  const auto k = high_pass_kernel();
  CHECK(std::equal(k.begin(), k.end(), pa.pre_kernel().begin()));
  double sum = 0.0;
  for (double v : k) sum += v;
  CHECK(sum == 0.0);
  for (double v : pa.conv_bias(0)) CHECK(v == 0.0);
  CHECK(pa.all_finite());
}

TEST_CASE("config validation") {
  ModelConfig cfg;
  cfg.image_size = 4;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = ModelConfig{};
  cfg.feature_dim = 1;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
}

TEST_CASE("forward shapes and determinism") {
  const ModelConfig cfg;
  Rng rng(3);
  const auto params = init_params(cfg, rng);
  const Matrix images = random_images(rng, 5, cfg.image_size);
  const auto a = forward(params, images);
  const auto b = forward(params, images);
  CHECK(a.z.rows() == 5);
  CHECK(a.z.cols() == 32);
  CHECK(a.logits.rows() == 5);
  CHECK(a.logits.cols() == 2);
  CHECK(a.z == b.z);
  CHECK(a.logits == b.logits);
  CHECK_THROWS_AS(forward(params, Matrix(2, 10)), InvalidArgument);
}

TEST_CASE("high-pass preprocessing removes DC") {
  const ModelConfig cfg;
  Rng rng(4);
  auto params = init_params(cfg, rng);
  jitter_biases(params, rng);

  Matrix flats(2, 256);
  for (std::size_t j = 0; j < 256; ++j) {
    flats(0, j) = 0.2;
    flats(1, j) = 0.7;
  }
  const auto out = forward(params, flats);
  for (double r : out.trace.residual) CHECK(r == 0.0);
  for (std::size_t c = 0; c < out.z.cols(); ++c) CHECK(out.z(0, c) == out.z(1, c));

  Matrix images = random_images(rng, 4, cfg.image_size);
  for (double& v : images.values()) v = 0.1 + 0.8 * v;
  const auto base = forward(params, images);
  for (double shift : {-0.1, -0.03, 0.05, 0.1}) {
    Matrix moved = images;
    for (double& v : moved.values()) v += shift;
    const auto out2 = forward(params, moved);
    for (std::size_t i = 0; i < base.z.size(); ++i) CHECK(std::abs(out2.z.values()[i] - base.z.values()[i]) <= 1e-10);
  }
}

TEST_CASE("backward linearity") {
  const ModelConfig cfg = micro_config();
  Rng rng(5);
  auto params = init_params(cfg, rng);
  jitter_biases(params, rng);
  const Matrix images = random_images(rng, 4, cfg.image_size);
  const auto fwd = forward(params, images);

  const Matrix zero_z(4, 4);
  const Matrix zero_l(4, 2);
  const auto none = backward(params, fwd.trace, zero_z, zero_l);
  for (std::size_t b = 0; b < none.block_count(); ++b) {
    for (double v : none.block(b)) CHECK(v == 0.0);
  }

  Matrix dz(4, 4);
  Matrix dl(4, 2);
  for (double& v : dz.values()) v = rng.gaussian();
  for (double& v : dl.values()) v = rng.gaussian();
  const auto both = backward(params, fwd.trace, dz, dl);
  const auto only_z = backward(params, fwd.trace, dz, zero_l);
  const auto only_l = backward(params, fwd.trace, zero_z, dl);
  for (std::size_t b = 0; b < both.block_count(); ++b) {
    for (std::size_t i = 0; i < both.block(b).size(); ++i) {
      CHECK(both.block(b)[i] == doctest::Approx(only_z.block(b)[i] + only_l.block(b)[i]).epsilon(1e-12).scale(1e-12));
    }
  }
  CHECK_THROWS_AS(backward(params, fwd.trace, Matrix(3, 4), zero_l), InvalidArgument);
}

TEST_CASE("full-model gradient matches central differences") {
  const ModelConfig cfg = micro_config();
  Rng rng(6);
  auto params = init_params(cfg, rng);
  jitter_biases(params, rng);
  const std::size_t batch = 6;
  const Matrix images = random_images(rng, batch, cfg.image_size);
  const std::vector<Label> labels{0, 1, 0, 1, 0, 1};
  const auto pairs = select_positives(labels, rng);
  const double lambda = 0.7;
  LossConfig lc;
  lc.tau = 0.5;

  auto objective = [&](const ModelParams& p) {
    const auto out = forward(p, images);
    const auto ce = cross_entropy(out.logits, labels);
    const auto steg = steg_cl(FeatureBatch{out.z, labels}, pairs, lc);
    return ce.value + lambda * steg.value / static_cast<double>(steg.term_count);
  };

  const auto out = forward(params, images);
  const auto ce = cross_entropy(out.logits, labels);
  const auto steg = steg_cl(FeatureBatch{out.z, labels}, pairs, lc);
  Matrix dz = steg.grad;
  for (double& v : dz.values()) v *= lambda / static_cast<double>(steg.term_count);
  const auto grads = backward(params, out.trace, dz, ce.grad);

  for (std::size_t b = 0; b < params.block_count(); ++b) {
    CAPTURE(params.block_name(b));
    const auto block = params.block(b);
    const Matrix x(1, block.size(), std::vector<double>(block.begin(), block.end()));
    const auto fd = finite_diff_grad(
        [&](const Matrix& m) {
          ModelParams probe = params;
          std::copy(m.values().begin(), m.values().end(), probe.block(b).begin());
          return objective(probe);
        },
        x);
    CHECK(max_rel_error(grads.block(b), fd.values()) <= 1e-5);
  }
}

TEST_CASE("checkpoint round trip and corruption") {
  const ModelConfig cfg = micro_config();
  Rng rng(7);
  const auto params = init_params(cfg, rng);
  const auto bytes = encode_checkpoint(params);
  CHECK(bytes[0] == 'S');
  CHECK(bytes[3] == 'C');
  CHECK(bytes[4] == 1);
  CHECK(decode_checkpoint(bytes) == params);

  const auto dir = std::filesystem::temp_directory_path() / "scf_test_model";
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "m.scfc", params);
  CHECK(load_checkpoint(dir / "m.scfc") == params);
  std::filesystem::remove_all(dir);

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  CHECK_THROWS_WITH_AS(decode_checkpoint(flipped), doctest::Contains("bad checksum"), IoError);
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_WITH_AS(decode_checkpoint(magic), doctest::Contains("bad magic"), IoError);
  auto version = bytes;
  version[4] = 9;
  CHECK_THROWS_WITH_AS(decode_checkpoint(version), doctest::Contains("bad version"), IoError);
  const std::vector<unsigned char> truncated(bytes.begin(), bytes.begin() + 20);
  CHECK_THROWS_AS(decode_checkpoint(truncated), IoError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/dir/m.scfc"), IoError);
}
