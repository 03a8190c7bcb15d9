#include <doctest.h>

#include <cmath>
#include <sstream>

#include "scf/error.hpp"
#include "scf/trainer.hpp"

using namespace scf;

namespace {

const Dataset& micro_dataset() {
  static const Dataset ds = [] {
    DatasetConfig cfg;
    cfg.n_pairs = 200;
    cfg.seed = 5;
    return build_dataset(cfg);
  }();
  return ds;
}

TrainConfig micro_train(ContrastiveVariant variant, double lambda, int epochs = 3) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 16;
  cfg.loss.variant = variant;
  cfg.loss.lambda = lambda;
  cfg.model.channels = {4, 8};
  cfg.model.feature_dim = 8;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("lambda zero is identical to cross-entropy only") {
  const auto ce = train(micro_train(ContrastiveVariant::none, 1.0, 2), micro_dataset());
  const auto steg = train(micro_train(ContrastiveVariant::stegcl, 0.0, 2), micro_dataset());
  CHECK(ce.last == steg.last);
  CHECK(ce.best == steg.best);
  CHECK(encode_checkpoint(ce.best) == encode_checkpoint(steg.best));
  for (std::size_t e = 0; e < ce.history.size(); ++e) {
    CHECK(ce.history[e].ce_loss == steg.history[e].ce_loss);
    CHECK(ce.history[e].val_pe == steg.history[e].val_pe);
  }
}

TEST_CASE("training is deterministic and reduces cross-entropy") {
  const auto a = train(micro_train(ContrastiveVariant::stegcl, 1.0), micro_dataset());
  const auto b = train(micro_train(ContrastiveVariant::stegcl, 1.0), micro_dataset());
  CHECK(encode_checkpoint(a.best) == encode_checkpoint(b.best));
  CHECK(encode_checkpoint(a.last) == encode_checkpoint(b.last));
  REQUIRE(a.history.size() == 3);
  CHECK(a.history[2].ce_loss < a.history[0].ce_loss);
  for (const auto& r : a.history) {
    CHECK(std::isfinite(r.ce_loss));
    CHECK(std::isfinite(r.contrastive_loss));
    CHECK(r.val_pe >= 0.0);
    CHECK(r.val_pe <= 0.5);
    CHECK(r.seconds == 0.0);
  }
  double best = 1.0;
  for (const auto& r : a.history) best = std::min(best, r.val_pe);
  CHECK(a.best_val_pe == best);
  // The preprocessing kernel is frozen by default.
  const auto k = high_pass_kernel();
  CHECK(std::equal(k.begin(), k.end(), a.last.pre_kernel().begin()));

  std::ostringstream csv;
  write_history_csv(csv, a.history);
  const std::string text = csv.str();
  CHECK(text.rfind("epoch,ce_loss,contrastive_loss,val_pe,val_acc,seconds\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("other variants train") {
  for (auto v : {ContrastiveVariant::selfcl, ContrastiveVariant::supcl}) {
    const auto r = train(micro_train(v, 1.0, 1), micro_dataset());
    CHECK(std::isfinite(r.history[0].contrastive_loss));
    CHECK(r.history[0].contrastive_loss > 0.0);
  }
}

TEST_CASE("train config validation") {
  TrainConfig cfg = micro_train(ContrastiveVariant::stegcl, 1.0);
  cfg.batch_size = 7;
  CHECK_THROWS_AS(train(cfg, micro_dataset()), InvalidArgument);
  cfg.batch_size = 2;
  CHECK_THROWS_AS(train(cfg, micro_dataset()), InvalidArgument);
  cfg = micro_train(ContrastiveVariant::stegcl, 1.0);
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train(cfg, micro_dataset()), InvalidArgument);
}

TEST_CASE("divergence is reported as a numeric error") {
  TrainConfig cfg = micro_train(ContrastiveVariant::none, 1.0, 2);
  cfg.optimizer.kind = OptimizerConfig::Kind::sgd;
  cfg.learning_rate = 1e300;
  CHECK_THROWS_AS(train(cfg, micro_dataset()), NumericError);
}

TEST_CASE("evaluate") {
  const auto r = train(micro_train(ContrastiveVariant::stegcl, 1.0, 2), micro_dataset());
  const auto rep = evaluate(r.best, micro_dataset(), Split::test);
  CHECK(rep.n == 120);
  CHECK(rep.p_e >= 0.0);
  CHECK(rep.p_e <= 0.5);
  CHECK(rep.p_e == doctest::Approx(0.5 * (rep.p_fa + rep.p_md)));
  CHECK(rep.accuracy >= 0.0);
  CHECK(rep.accuracy <= 1.0);
  CHECK(rep.silhouette >= -1.0);
  CHECK(rep.silhouette <= 1.0);

  const auto feats = extract_features(r.best, micro_dataset(), Split::test);
  CHECK(feats.z.rows() == 120);
  CHECK(feats.scores.size() == 120);
  for (std::size_t i = 0; i < 120; ++i) {
    CHECK(std::abs(std::sqrt(dot(feats.z.row(i), feats.z.row(i))) - 1.0) <= 1e-12);
  }
  const auto val = evaluate(r.best, micro_dataset(), Split::val);
  CHECK(val.p_e == r.history[static_cast<std::size_t>(r.best_epoch) - 1].val_pe);
}

TEST_CASE("mismatch diagonal equals evaluate") {
  DatasetConfig hi;
  hi.n_pairs = 200;
  hi.seed = 6;
  hi.payload = 1.0;
  const Dataset strong = build_dataset(hi);
  const auto m1 = train(micro_train(ContrastiveVariant::none, 1.0, 1), micro_dataset());
  const auto m2 = train(micro_train(ContrastiveVariant::none, 1.0, 1), strong);
  const std::vector<PayloadModel> models{{0.4, m1.best}, {1.0, m2.best}};
  const std::vector<PayloadDataset> data{{0.4, &micro_dataset()}, {1.0, &strong}};
  const auto cells = mismatch_eval(models, data);
  REQUIRE(cells.size() == 4);
  CHECK(cells[0].pe == evaluate(m1.best, micro_dataset(), Split::test).p_e);
  CHECK(cells[3].pe == evaluate(m2.best, strong, Split::test).p_e);
  CHECK(cells[1].train_payload == 0.4);
  CHECK(cells[1].test_payload == 1.0);
  for (const auto& c : cells) {
    CHECK(c.pe >= 0.0);
    CHECK(c.pe <= 0.5);
  }
  std::ostringstream csv;
  write_mismatch_csv(csv, cells);
  CHECK(csv.str().rfind("train_payload,test_payload,pe\n0.4,0.4,", 0) == 0);
}

TEST_CASE("format_double") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(2.0) == "2");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
