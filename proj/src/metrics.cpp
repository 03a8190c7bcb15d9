#include "scf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

#include "scf/error.hpp"

namespace scf {

PeResult p_e(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("p_e: scores and labels differ in length");
  std::size_t covers = 0;
  std::size_t stegos = 0;
  for (Label l : labels) {
    if (l == 0) ++covers;
    else if (l == 1) ++stegos;
    else throw InvalidArgument("p_e: labels must be 0 or 1");
  }
  if (covers == 0 || stegos == 0) throw InvalidArgument("p_e: both classes must be present");
  for (double s : scores) {
    if (std::isnan(s)) throw NumericError("p_e: NaN score");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  const double nc = static_cast<double>(covers);
  const double ns = static_cast<double>(stegos);
  constexpr double inf = std::numeric_limits<double>::infinity();

  // Threshold -inf: everything is called stego.
  std::size_t fa = covers;
  std::size_t md = 0;
  PeResult best{0.5 * (static_cast<double>(fa) / nc + static_cast<double>(md) / ns), 1.0, 0.0, -inf};

  std::size_t i = 0;
  while (i < order.size()) {
    const double v = scores[order[i]];
    while (i < order.size() && scores[order[i]] == v) {
      if (labels[order[i]] == 0) --fa;
      else ++md;
      ++i;
    }
    const double t = i < order.size() ? v + (scores[order[i]] - v) / 2.0 : inf;
    const double pfa = static_cast<double>(fa) / nc;
    const double pmd = static_cast<double>(md) / ns;
    const double pe = 0.5 * (pfa + pmd);
    if (pe < best.p_e) best = {pe, pfa, pmd, t};
  }
  return best;
}

double silhouette(const Matrix& z, std::span<const Label> labels) {
  const std::size_t n = z.rows();
  if (labels.size() != n) throw InvalidArgument("silhouette: labels length must equal sample count");
  std::map<Label, std::size_t> sizes;
  for (Label l : labels) ++sizes[l];
  if (sizes.size() < 2) throw InvalidArgument("silhouette: need at least two classes");
  for (const auto& [label, c] : sizes) {
    if (c < 2) throw InvalidArgument("silhouette: every class needs at least two members");
  }

  std::vector<Label> keys;
  for (const auto& kv : sizes) keys.push_back(kv.first);
  std::vector<double> sums(keys.size());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(sums.begin(), sums.end(), 0.0);
    const auto zi = z.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto zj = z.row(j);
      double d2 = 0.0;
      for (std::size_t c = 0; c < zi.size(); ++c) {
        const double diff = zi[c] - zj[c];
        d2 += diff * diff;
      }
      const auto k = static_cast<std::size_t>(std::lower_bound(keys.begin(), keys.end(), labels[j]) - keys.begin());
      sums[k] += std::sqrt(d2);
    }
    double a = 0.0;
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (keys[k] == labels[i]) {
        a = sums[k] / static_cast<double>(sizes[keys[k]] - 1);
      } else {
        b = std::min(b, sums[k] / static_cast<double>(sizes[keys[k]]));
      }
    }
    const double m = std::max(a, b);
    total += m > 0.0 ? (b - a) / m : 0.0;
  }
  return total / static_cast<double>(n);
}

}  // namespace scf
