#pragma once

#include <cstddef>
#include <span>

#include "scf/matrix.hpp"
#include "scf/rss.hpp"

namespace scf {

struct PeResult {
  double p_e = 0.5;
  double p_fa = 0.0;   // covers called stego
  double p_md = 0.0;   // stegoes called cover
  double threshold = 0.0;
};

/// Minimum of (P_FA + P_MD) / 2 under the rule "score >= t means stego", over
/// t in {-inf, midpoints of consecutive distinct scores, +inf}. Ties resolve
/// to the lowest threshold. Labels are 0 (cover) / 1 (stego); both must occur.
PeResult p_e(std::span<const double> scores, std::span<const Label> labels);

/// Mean silhouette coefficient with Euclidean distances. Every class needs at
/// least two members and there must be at least two classes. Samples whose
/// a and b are both zero contribute 0.
double silhouette(const Matrix& z, std::span<const Label> labels);

}  // namespace scf
