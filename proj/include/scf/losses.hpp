#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scf/matrix.hpp"
#include "scf/rss.hpp"

namespace scf {

enum class ContrastiveVariant { none, selfcl, supcl, stegcl };

std::string_view to_string(ContrastiveVariant v);
/// Accepts "none", "selfcl", "supcl", "stegcl". Throws InvalidArgument otherwise.
ContrastiveVariant parse_variant(std::string_view name);

struct LossConfig {
  double tau = 0.1;
  bool normalize_features = true;
  double lambda = 1.0;
  ContrastiveVariant variant = ContrastiveVariant::stegcl;
  // When set, the steganalysis loss also puts the positive into its
  // denominator (the self-supervised form); by default only negatives are.
  bool include_positive_in_denominator = false;

  void validate() const;
};

// Per-sample features plus binary cover (0) / stego (1) labels.
struct FeatureBatch {
  Matrix z;
  std::vector<Label> labels;

  std::size_t size() const noexcept { return z.rows(); }
  void validate() const;
};

struct LossOutput {
  double value = 0.0;
  Matrix grad;                 // d value / d z, same shape as the features
  std::size_t term_count = 0;  // number of anchor/positive log terms evaluated
  std::string warning;         // non-fatal degenerate-input note, empty if none
};

/// Self-supervised contrastive loss: one term per anchor i with positive
/// positive_map[i]; the denominator runs over every k != i.
LossOutput self_cl(const FeatureBatch& batch, std::span<const std::size_t> positive_map,
                   const LossConfig& cfg);

/// Supervised contrastive loss. Each anchor averages one self-supervised term
/// per same-class sample; every term evaluates its own denominator, so the
/// cost grows with the number of same-class pairs.
LossOutput sup_cl(const FeatureBatch& batch, const LossConfig& cfg);

/// Steganalysis contrastive loss: one term per selected (anchor, positive)
/// pair, contrasted against the anchor's different-class samples only.
LossOutput steg_cl(const FeatureBatch& batch, const PairSelection& pairs, const LossConfig& cfg);

/// Mean softmax cross-entropy over rows of `logits`.
LossOutput cross_entropy(const Matrix& logits, std::span<const Label> labels);

}  // namespace scf
