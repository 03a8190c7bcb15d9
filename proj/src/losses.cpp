#include "scf/losses.hpp"

#include <cmath>
#include <map>
#include <string>

#include "scf/error.hpp"
#include "scf/numkit.hpp"

namespace scf {

std::string_view to_string(ContrastiveVariant v) {
  switch (v) {
    case ContrastiveVariant::none: return "none";
    case ContrastiveVariant::selfcl: return "selfcl";
    case ContrastiveVariant::supcl: return "supcl";
    case ContrastiveVariant::stegcl: return "stegcl";
  }
  return "none";
}

ContrastiveVariant parse_variant(std::string_view name) {
  if (name == "none") return ContrastiveVariant::none;
  if (name == "selfcl") return ContrastiveVariant::selfcl;
  if (name == "supcl") return ContrastiveVariant::supcl;
  if (name == "stegcl") return ContrastiveVariant::stegcl;
  throw InvalidArgument("unknown loss variant '" + std::string(name) + "'");
}

void LossConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InvalidArgument("tau must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be non-negative");
}

void FeatureBatch::validate() const {
  if (labels.size() != z.rows()) throw InvalidArgument("labels length must equal batch size");
  if (!z.all_finite()) throw NumericError("feature batch contains non-finite values");
}

namespace {

// Features as seen by the dot products, plus what is needed to push a
// gradient back through the optional row normalization.
struct Prepared {
  Matrix u;
  std::vector<double> norms;
  std::vector<bool> passthrough;
};

Prepared prepare(const FeatureBatch& batch, const LossConfig& cfg) {
  cfg.validate();
  batch.validate();
  if (!cfg.normalize_features) {
    return {batch.z, {}, {}};
  }
  auto n = l2_normalize_rows(batch.z);
  return {std::move(n.rows), std::move(n.norms), std::move(n.zero_rows)};
}

// du -> dz through u = z / |z|: dz = (du - u <u, du>) / |z|.
Matrix to_feature_grad(const Prepared& p, Matrix du) {
  if (p.norms.empty()) return du;
  for (std::size_t i = 0; i < du.rows(); ++i) {
    if (p.passthrough[i]) continue;
    auto g = du.row(i);
    auto u = p.u.row(i);
    const double proj = dot(u, g);
    for (std::size_t c = 0; c < g.size(); ++c) g[c] = (g[c] - u[c] * proj) / p.norms[i];
  }
  return du;
}

// dU = (W + W^T) U for a dense anchor weight matrix W.
Matrix dense_similarity_backward(const Matrix& w, const Matrix& u) {
  const std::size_t n = u.rows();
  const std::size_t d = u.cols();
  Matrix du(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto gi = du.row(i);
    for (std::size_t k = 0; k < n; ++k) {
      const double c = w(i, k) + w(k, i);
      if (c == 0.0) continue;
      auto uk = u.row(k);
      for (std::size_t t = 0; t < d; ++t) gi[t] += c * uk[t];
    }
  }
  return du;
}

// One self-supervised log term for anchor i and positive j over the
// denominator {k != i}, evaluated from a row of logits. Adds
// scale * d(term)/d(logit_ik) into weight row i and returns the term.
double self_term(std::span<const double> logits, std::size_t i, std::size_t j, double scale,
                 std::span<double> weights, std::vector<double>& scratch) {
  scratch.clear();
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (k != i) scratch.push_back(logits[k]);
  }
  const double lse = log_sum_exp(scratch);
  for (std::size_t k = 0; k < logits.size(); ++k) {
    if (k != i) weights[k] += scale * std::exp(logits[k] - lse);
  }
  weights[j] -= scale;
  return lse - logits[j];
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite loss value");
}

}  // namespace

LossOutput self_cl(const FeatureBatch& batch, std::span<const std::size_t> positive_map,
                   const LossConfig& cfg) {
  const std::size_t n = batch.size();
  if (n < 2) throw InvalidArgument("no contrast possible");
  if (positive_map.size() != n) throw InvalidArgument("positive map length must equal batch size");
  for (std::size_t i = 0; i < n; ++i) {
    if (positive_map[i] >= n) throw InvalidArgument("positive map index out of range");
    if (positive_map[i] == i) throw InvalidArgument("positive map references the anchor itself");
  }
  const Prepared p = prepare(batch, cfg);
  Matrix logits = similarity_matrix(p.u);
  for (double& v : logits.values()) v /= cfg.tau;

  Matrix w(n, n);
  std::vector<double> scratch;
  scratch.reserve(n);
  LossOutput out;
  for (std::size_t i = 0; i < n; ++i) {
    out.value += self_term(logits.row(i), i, positive_map[i], 1.0, w.row(i), scratch);
  }
  out.term_count = n;
  require_finite(out.value, "self_cl");
  for (double& v : w.values()) v /= cfg.tau;
  out.grad = to_feature_grad(p, dense_similarity_backward(w, p.u));
  return out;
}

LossOutput sup_cl(const FeatureBatch& batch, const LossConfig& cfg) {
  const std::size_t n = batch.size();
  if (n < 2) throw InvalidArgument("no contrast possible");
  const Prepared p = prepare(batch, cfg);

  std::map<Label, std::size_t> class_size;
  for (Label l : batch.labels) ++class_size[l];
  for (const auto& [label, c] : class_size) {
    if (c < 2) throw InvalidArgument("anchor without positive (label " + std::to_string(label) + ")");
  }

  Matrix logits = similarity_matrix(p.u);
  for (double& v : logits.values()) v /= cfg.tau;

  Matrix w(n, n);
  std::vector<double> scratch;
  scratch.reserve(n);
  LossOutput out;
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = 1.0 / static_cast<double>(class_size[batch.labels[i]] - 1);
    double anchor_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || batch.labels[j] != batch.labels[i]) continue;
      anchor_sum += self_term(logits.row(i), i, j, scale, w.row(i), scratch);
      ++out.term_count;
    }
    out.value += scale * anchor_sum;
  }
  require_finite(out.value, "sup_cl");
  for (double& v : w.values()) v /= cfg.tau;
  out.grad = to_feature_grad(p, dense_similarity_backward(w, p.u));
  return out;
}

LossOutput steg_cl(const FeatureBatch& batch, const PairSelection& pairs, const LossConfig& cfg) {
  const std::size_t n = batch.size();
  const Prepared p = prepare(batch, cfg);
  const std::size_t d = p.u.cols();

  LossOutput out;
  out.grad = Matrix(n, d);
  if (pairs.pairs.empty()) {
    out.warning = "steg_cl: no positive pairs, loss is zero";
    return out;
  }

  for (const auto& pr : pairs.pairs) {
    if (pr.anchor >= n || pr.positive >= n) throw InvalidArgument("steg_cl: pair index out of range");
    if (pr.anchor == pr.positive) throw InvalidArgument("steg_cl: pair references the anchor itself");
    if (batch.labels[pr.anchor] != batch.labels[pr.positive]) {
      throw InvalidArgument("steg_cl: pair members carry different labels");
    }
  }

  Matrix du(n, d);
  std::vector<std::size_t> denom;
  std::vector<double> logits;
  denom.reserve(n);
  logits.reserve(n);
  for (const auto& pr : pairs.pairs) {
    const std::size_t i = pr.anchor;
    denom.clear();
    for (std::size_t k = 0; k < n; ++k) {
      if (batch.labels[k] != batch.labels[i]) denom.push_back(k);
    }
    if (denom.empty()) throw InvalidArgument("empty negative set");
    if (cfg.include_positive_in_denominator) denom.push_back(pr.positive);

    const auto ui = p.u.row(i);
    const double pos_logit = dot(ui, p.u.row(pr.positive)) / cfg.tau;
    logits.clear();
    for (std::size_t k : denom) logits.push_back(dot(ui, p.u.row(k)) / cfg.tau);
    const double lse = log_sum_exp(logits);
    out.value += lse - pos_logit;
    ++out.term_count;

    // d term / d s_ik = (softmax_k - [k == positive]) / tau
    auto gi = du.row(i);
    for (std::size_t t = 0; t < denom.size(); ++t) {
      const double c = std::exp(logits[t] - lse) / cfg.tau;
      auto uk = p.u.row(denom[t]);
      auto gk = du.row(denom[t]);
      for (std::size_t c2 = 0; c2 < d; ++c2) {
        gi[c2] += c * uk[c2];
        gk[c2] += c * ui[c2];
      }
    }
    const double c = -1.0 / cfg.tau;
    auto up = p.u.row(pr.positive);
    auto gp = du.row(pr.positive);
    for (std::size_t c2 = 0; c2 < d; ++c2) {
      gi[c2] += c * up[c2];
      gp[c2] += c * ui[c2];
    }
  }
  require_finite(out.value, "steg_cl");
  out.grad = to_feature_grad(p, std::move(du));
  return out;
}

LossOutput cross_entropy(const Matrix& logits, std::span<const Label> labels) {
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  if (labels.size() != n) throw InvalidArgument("cross_entropy: labels length must equal batch size");
  if (n == 0) throw InvalidArgument("cross_entropy: empty batch");
  if (!logits.all_finite()) throw NumericError("cross_entropy: non-finite logits");

  LossOutput out;
  out.grad = Matrix(n, k);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Label y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= k) throw InvalidArgument("cross_entropy: label out of range");
    const auto row = logits.row(i);
    const double lse = log_sum_exp(row);
    out.value += (lse - row[y]) * inv_n;
    auto g = out.grad.row(i);
    for (std::size_t c = 0; c < k; ++c) g[c] = std::exp(row[c] - lse) * inv_n;
    g[y] -= inv_n;
  }
  out.term_count = n;
  return out;
}

}  // namespace scf
