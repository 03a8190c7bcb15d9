#pragma once

#include <array>
#include <cstdint>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "scf/matrix.hpp"

namespace scf {

/// S[i][j] = <row i, row j>. Each unordered pair is computed once, so the
/// result is bitwise symmetric.
Matrix similarity_matrix(const Matrix& z);

/// max(v) + log(sum(exp(v - max(v)))). Throws InvalidArgument on empty input.
double log_sum_exp(std::span<const double> v);

struct NormalizedRows {
  Matrix rows;
  std::vector<double> norms;       // norm of each input row
  std::vector<bool> zero_rows;     // rows left untouched because their norm was 0
};

NormalizedRows l2_normalize_rows(const Matrix& z);

struct PcaOptions {
  int max_iterations = 500;
  double tolerance = 1e-10;
  std::uint64_t seed = 0x5eedULL;
};

struct Pca2d {
  Matrix coords;                  // B x 2 projections of the centered data
  Matrix components;              // 2 x d unit principal directions
  std::array<double, 2> variances{};  // eigenvalues of the covariance (divided by B)
  double total_variance = 0.0;    // trace of the covariance
};

/// Top-2 principal components by power iteration with deflation. Each
/// direction's sign is fixed so that its largest-magnitude entry is positive.
Pca2d pca_2d(const Matrix& z, const PcaOptions& options = {});

using ScalarFn = std::function<double(const Matrix&)>;

/// Central-difference gradient of f at x. Throws NumericError when any
/// evaluation of f is non-finite.
Matrix finite_diff_grad(const ScalarFn& f, const Matrix& x, double h = 1e-5);

/// max |a - b| / max |b| (0 when both are zero). Used for gradient checks.
double max_rel_error(std::span<const double> a, std::span<const double> b);

}  // namespace scf
