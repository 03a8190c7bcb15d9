#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scf/losses.hpp"
#include "scf/model.hpp"
#include "scf/stego_data.hpp"

namespace scf {

struct OptimizerConfig {
  enum class Kind { sgd, adam };
  Kind kind = Kind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct TrainConfig {
  int epochs = 20;
  int batch_size = 32;  // even; half covers, half their stegoes
  double learning_rate = 1e-3;
  OptimizerConfig optimizer;
  LossConfig loss;
  ModelConfig model;  // image_size is taken from the dataset
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> checkpoint_path;
  bool record_time = false;  // wall-clock seconds in the history (non-deterministic)

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double ce_loss = 0.0;           // mean over batches
  double contrastive_loss = 0.0;  // mean over batches of the term-normalized loss
  double val_pe = 0.5;
  double val_acc = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams best;   // parameters of the epoch with the lowest validation P_E
  ModelParams last;
  int best_epoch = 0;
  double best_val_pe = 0.5;
  std::vector<EpochRecord> history;
};

/// Joint training: every step minimizes CE + lambda * contrastive / terms on a
/// batch of batch_size/2 cover/stego pairs. Deterministic for a given seed.
TrainResult train(const TrainConfig& cfg, const Dataset& dataset);

struct EvalReport {
  double p_e = 0.5;
  double accuracy = 0.0;  // argmax decision
  double p_fa = 0.0;
  double p_md = 0.0;
  double threshold_at_min = 0.0;
  double silhouette = 0.0;
  std::size_t n = 0;
};

struct SplitFeatures {
  Matrix z;                     // features as the contrastive module sees them
  std::vector<double> scores;   // softmax probability of "stego"
  std::vector<Label> labels;
};

/// Forward pass over a split. With normalize set, rows of z are L2-normalized.
SplitFeatures extract_features(const ModelParams& params, const Dataset& ds, Split split, bool normalize = true);

EvalReport evaluate(const ModelParams& params, const Dataset& ds, Split split, bool normalize_features = true);

struct PayloadModel {
  double payload;
  ModelParams params;
};
struct PayloadDataset {
  double payload;
  const Dataset* dataset;
};
struct MismatchCell {
  double train_payload;
  double test_payload;
  double pe;
};

/// P_E of every model on every dataset's test split, row-major by model.
std::vector<MismatchCell> mismatch_eval(std::span<const PayloadModel> models, std::span<const PayloadDataset> datasets);

void write_history_csv(std::ostream& out, std::span<const EpochRecord> history);
void write_mismatch_csv(std::ostream& out, std::span<const MismatchCell> cells);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace scf
