#include "scf/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "scf/error.hpp"
#include "scf/metrics.hpp"
#include "scf/numkit.hpp"
#include "scf/parallel.hpp"

namespace scf {

namespace {
constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kOrderStream = 12;
constexpr std::uint64_t kContrastStream = 13;
constexpr std::size_t kEvalChunk = 128;

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, const ModelParams& like)
      : cfg_(cfg), m_(like.config()), v_(like.config()) {}

  void step(ModelParams& params, const ModelParams& grad) {
    ++t_;
    const bool adam = cfg_.optimizer.kind == OptimizerConfig::Kind::adam;
    const double b1 = cfg_.optimizer.beta1;
    const double b2 = cfg_.optimizer.beta2;
    const double c1 = 1.0 - std::pow(b1, t_);
    const double c2 = 1.0 - std::pow(b2, t_);
    const double lr = cfg_.learning_rate;
    for (std::size_t b = 0; b < params.block_count(); ++b) {
      if (b == 0 && !params.config().trainable_preprocessing) continue;
      auto p = params.block(b);
      auto g = grad.block(b);
      if (!adam) {
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
        continue;
      }
      auto m = m_.block(b);
      auto v = v_.block(b);
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.optimizer.epsilon);
      }
    }
  }

 private:
  const TrainConfig& cfg_;
  ModelParams m_;
  ModelParams v_;
  int t_ = 0;
};

// Positive for each anchor under the self-supervised loss: a uniformly drawn
// other member of its class.
std::vector<std::size_t> random_positive_map(std::span<const Label> labels, Rng& rng) {
  std::vector<std::size_t> map(labels.size());
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    candidates.clear();
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (k != i && labels[k] == labels[i]) candidates.push_back(k);
    }
    if (candidates.empty()) throw InvalidArgument("selfcl: sample " + std::to_string(i) + " has no same-class partner");
    map[i] = choice(rng, candidates);
  }
  return map;
}

LossOutput contrastive(const FeatureBatch& batch, const LossConfig& cfg, Rng& rng) {
  switch (cfg.variant) {
    case ContrastiveVariant::selfcl: return self_cl(batch, random_positive_map(batch.labels, rng), cfg);
    case ContrastiveVariant::supcl: return sup_cl(batch, cfg);
    case ContrastiveVariant::stegcl: return steg_cl(batch, select_positives(batch.labels, rng), cfg);
    case ContrastiveVariant::none: break;
  }
  throw InvalidArgument("contrastive: no loss variant selected");
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
  if (batch_size < 4 || batch_size % 2 != 0) throw InvalidArgument("batch_size must be even and at least 4");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  loss.validate();
}

TrainResult train(const TrainConfig& cfg, const Dataset& dataset) {
  cfg.validate();
  ModelConfig mcfg = cfg.model;
  mcfg.image_size = dataset.config.image_size;
  mcfg.validate();

  const std::size_t pairs_per_batch = static_cast<std::size_t>(cfg.batch_size) / 2;
  const auto& train_ids = dataset.splits.train;
  const std::size_t batches = train_ids.size() / pairs_per_batch;
  if (batches == 0) throw InvalidArgument("training split is smaller than one batch");
  if (dataset.splits.val.empty()) throw InvalidArgument("dataset has no validation split");

  const Rng root(cfg.seed);
  Rng init_rng = root.derive(kInitStream);
  Rng contrast_rng = root.derive(kContrastStream);

  TrainResult result;
  ModelParams params = init_params(mcfg, init_rng);
  Optimizer opt(cfg, params);
  result.best = params;
  double best_pe = std::numeric_limits<double>::infinity();
  const bool use_contrast = cfg.loss.variant != ContrastiveVariant::none;

  std::vector<std::uint32_t> order(train_ids.begin(), train_ids.end());
  std::vector<std::size_t> idx;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng order_rng = root.derive(kOrderStream).derive(static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[order_rng.uniform_index(i + 1)]);

    double ce_sum = 0.0;
    double cl_sum = 0.0;
    for (std::size_t b = 0; b < batches; ++b) {
      idx.clear();
      for (std::size_t k = 0; k < pairs_per_batch; ++k) {
        const std::size_t id = order[b * pairs_per_batch + k];
        idx.push_back(2 * id);
        idx.push_back(2 * id + 1);
      }
      const Matrix images = images_matrix(dataset, idx);
      const std::vector<Label> labels = labels_of(dataset, idx);
      const ForwardResult fwd = forward(params, images);
      const LossOutput ce = cross_entropy(fwd.logits, labels);

      Matrix dz(fwd.z.rows(), fwd.z.cols());
      double cl_value = 0.0;
      if (use_contrast) {
        const bool both = std::find(labels.begin(), labels.end(), 0) != labels.end() &&
                          std::find(labels.begin(), labels.end(), 1) != labels.end();
        if (!both) throw InvalidArgument("contrastive training needs both classes in every batch");
        const LossOutput cl = contrastive(FeatureBatch{fwd.z, labels}, cfg.loss, contrast_rng);
        const double terms = static_cast<double>(std::max<std::size_t>(cl.term_count, 1));
        cl_value = cl.value / terms;
        if (cfg.loss.lambda > 0.0) {
          const double scale = cfg.loss.lambda / terms;
          auto dst = dz.values();
          auto src = cl.grad.values();
          for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = scale * src[i];
        }
      }
      const double total = ce.value + cfg.loss.lambda * cl_value;
      if (!std::isfinite(total)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << ", batch " << b << ": ce=" << ce.value
            << " contrastive=" << cl_value;
        throw NumericError(msg.str());
      }
      ce_sum += ce.value;
      cl_sum += cl_value;

      const ModelParams grad = backward(params, fwd.trace, dz, ce.grad);
      opt.step(params, grad);
      if (!params.all_finite()) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": non-finite parameters");
      }
    }

    const EvalReport val = evaluate(params, dataset, Split::val, cfg.loss.normalize_features);
    EpochRecord rec;
    rec.epoch = epoch;
    rec.ce_loss = ce_sum / static_cast<double>(batches);
    rec.contrastive_loss = cl_sum / static_cast<double>(batches);
    rec.val_pe = val.p_e;
    rec.val_acc = val.accuracy;
    if (cfg.record_time) {
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    result.history.push_back(rec);
    if (val.p_e < best_pe) {
      best_pe = val.p_e;
      result.best = params;
      result.best_epoch = epoch;
    }
  }
  result.best_val_pe = best_pe;
  result.last = std::move(params);
  if (cfg.checkpoint_path) save_checkpoint(*cfg.checkpoint_path, result.best);
  return result;
}

SplitFeatures extract_features(const ModelParams& params, const Dataset& ds, Split split, bool normalize) {
  const std::vector<std::size_t> idx = ds.split_indices(split);
  if (idx.empty()) throw InvalidArgument("split '" + std::string(to_string(split)) + "' is empty");
  if (ds.config.image_size != params.config().image_size) {
    throw InvalidArgument("checkpoint expects " + std::to_string(params.config().image_size) +
                          "-pixel images, dataset has " + std::to_string(ds.config.image_size));
  }
  const auto f = static_cast<std::size_t>(params.config().feature_dim);
  SplitFeatures out{Matrix(idx.size(), f), std::vector<double>(idx.size()), labels_of(ds, idx)};

  const std::size_t chunks = (idx.size() + kEvalChunk - 1) / kEvalChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t lo = c * kEvalChunk;
    const std::size_t hi = std::min(idx.size(), lo + kEvalChunk);
    const std::span<const std::size_t> part(idx.data() + lo, hi - lo);
    const ForwardResult fwd = forward(params, images_matrix(ds, part));
    for (std::size_t r = 0; r < part.size(); ++r) {
      std::copy(fwd.z.row(r).begin(), fwd.z.row(r).end(), out.z.row(lo + r).begin());
      const double diff = fwd.logits(r, 0) - fwd.logits(r, 1);
      out.scores[lo + r] = 1.0 / (1.0 + std::exp(diff));
    }
  });
  if (normalize) out.z = l2_normalize_rows(out.z).rows;
  return out;
}

EvalReport evaluate(const ModelParams& params, const Dataset& ds, Split split, bool normalize_features) {
  const SplitFeatures feats = extract_features(params, ds, split, normalize_features);
  const PeResult pe = p_e(feats.scores, feats.labels);
  EvalReport r;
  r.p_e = pe.p_e;
  r.p_fa = pe.p_fa;
  r.p_md = pe.p_md;
  r.threshold_at_min = pe.threshold;
  r.n = feats.labels.size();
  std::size_t correct = 0;
  for (std::size_t i = 0; i < r.n; ++i) {
    const Label predicted = feats.scores[i] > 0.5 ? 1 : 0;
    correct += predicted == feats.labels[i] ? 1 : 0;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
  r.silhouette = silhouette(feats.z, feats.labels);
  return r;
}

std::vector<MismatchCell> mismatch_eval(std::span<const PayloadModel> models, std::span<const PayloadDataset> datasets) {
  std::vector<MismatchCell> cells;
  for (const auto& m : models) {
    for (const auto& d : datasets) {
      if (d.dataset == nullptr) throw InvalidArgument("mismatch_eval: null dataset");
      const PeResult pe = [&] {
        const SplitFeatures f = extract_features(m.params, *d.dataset, Split::test, false);
        return p_e(f.scores, f.labels);
      }();
      cells.push_back({m.payload, d.payload, pe.p_e});
    }
  }
  return cells;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_history_csv(std::ostream& out, std::span<const EpochRecord> history) {
  out << "epoch,ce_loss,contrastive_loss,val_pe,val_acc,seconds\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_double(r.ce_loss) << ',' << format_double(r.contrastive_loss) << ','
        << format_double(r.val_pe) << ',' << format_double(r.val_acc) << ',' << format_double(r.seconds) << '\n';
  }
}

void write_mismatch_csv(std::ostream& out, std::span<const MismatchCell> cells) {
  out << "train_payload,test_payload,pe\n";
  for (const auto& c : cells) {
    out << format_double(c.train_payload) << ',' << format_double(c.test_payload) << ',' << format_double(c.pe)
        << '\n';
  }
}

}  // namespace scf
