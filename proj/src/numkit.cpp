#include "scf/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "scf/rng.hpp"

namespace scf {

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix similarity_matrix(const Matrix& z) {
  const std::size_t n = z.rows();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = dot(z.row(i), z.row(j));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("empty reduction");
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

NormalizedRows l2_normalize_rows(const Matrix& z) {
  NormalizedRows out{z, std::vector<double>(z.rows()), std::vector<bool>(z.rows(), false)};
  for (std::size_t i = 0; i < z.rows(); ++i) {
    auto r = out.rows.row(i);
    const double norm = std::sqrt(dot(r, r));
    out.norms[i] = norm;
    if (norm == 0.0) {
      out.zero_rows[i] = true;
      continue;
    }
    for (double& x : r) x /= norm;
  }
  return out;
}

namespace {

std::vector<double> mat_vec(const std::vector<double>& a, std::size_t d,
                            const std::vector<double>& v) {
  std::vector<double> out(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) acc += a[i * d + j] * v[j];
    out[i] = acc;
  }
  return out;
}

double norm2(const std::vector<double>& v) {
  return std::sqrt(dot(v, v));
}

// Removes the components along each (unit) direction in `basis`.
void orthogonalize(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
  for (const auto& b : basis) {
    const double p = dot(v, b);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * b[i];
  }
}

// Dominant eigenpair of a symmetric PSD matrix restricted to the complement
// of `basis`. Returns eigenvalue 0 and the start vector when the matrix's
// response falls below `floor` (the remaining spectrum is roundoff).
std::pair<double, std::vector<double>> power_iteration(const std::vector<double>& a,
                                                       std::size_t d, Rng& rng,
                                                       const PcaOptions& opt,
                                                       const std::vector<std::vector<double>>& basis,
                                                       double floor) {
  std::vector<double> v(d);
  for (double& x : v) x = rng.gaussian();
  orthogonalize(v, basis);
  double n = norm2(v);
  for (double& x : v) x /= n;

  double lambda = 0.0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    std::vector<double> w = mat_vec(a, d, v);
    orthogonalize(w, basis);
    const double wn = norm2(w);
    if (wn <= floor) return {0.0, v};
    for (double& x : w) x /= wn;
    double diff = 0.0;
    for (std::size_t i = 0; i < d; ++i) diff = std::max(diff, std::abs(w[i] - v[i]));
    v = std::move(w);
    lambda = dot(v, mat_vec(a, d, v));
    if (diff < opt.tolerance) break;
  }
  return {lambda, v};
}

void fix_sign(std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best]) + 1e-12) best = i;
  }
  if (v[best] < 0.0) {
    for (double& x : v) x = -x;
  }
}

}  // namespace

Pca2d pca_2d(const Matrix& z, const PcaOptions& options) {
  const std::size_t n = z.rows();
  const std::size_t d = z.cols();
  if (n < 2) throw InvalidArgument("insufficient samples");
  if (d < 1) throw InvalidArgument("pca_2d: zero-dimensional features");

  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += z(i, j);
  }
  for (double& m : mean) m /= static_cast<double>(n);

  Matrix centered(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) centered(i, j) = z(i, j) - mean[j];
  }

  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = centered.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) cov[a * d + b] += r[a] * r[b];
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      cov[a * d + b] /= static_cast<double>(n);
      cov[b * d + a] = cov[a * d + b];
    }
  }

  Pca2d out;
  out.total_variance = 0.0;
  for (std::size_t a = 0; a < d; ++a) out.total_variance += cov[a * d + a];
  out.components = Matrix(2, d);

  Rng rng(options.seed);
  std::vector<std::vector<double>> found;
  for (std::size_t c = 0; c < 2; ++c) {
    if (c >= d) break;
    auto [lambda, v] = power_iteration(cov, d, rng, options, found, 1e-12 * out.total_variance);
    fix_sign(v);
    found.push_back(v);
    out.variances[c] = lambda;
    for (std::size_t j = 0; j < d; ++j) out.components(c, j) = v[j];
    // deflate
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) cov[a * d + b] -= lambda * v[a] * v[b];
    }
  }

  out.coords = Matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 2; ++c) out.coords(i, c) = dot(centered.row(i), out.components.row(c));
  }
  return out;
}

Matrix finite_diff_grad(const ScalarFn& f, const Matrix& x, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite_diff_grad: step must be positive");
  Matrix probe = x;
  Matrix grad(x.rows(), x.cols());
  auto pv = probe.values();
  auto gv = grad.values();
  for (std::size_t k = 0; k < pv.size(); ++k) {
    const double orig = pv[k];
    pv[k] = orig + h;
    const double fp = f(probe);
    pv[k] = orig - h;
    const double fm = f(probe);
    pv[k] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_grad: non-finite function value");
    }
    gv[k] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double max_rel_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  if (scale == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return diff / scale;
}

}  // namespace scf
