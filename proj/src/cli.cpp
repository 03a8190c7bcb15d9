#include "scf/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "binary_io.hpp"
#include "scf/bench.hpp"
#include "scf/error.hpp"
#include "scf/numkit.hpp"
#include "scf/stego_data.hpp"
#include "scf/trainer.hpp"

namespace scf {

namespace fs = std::filesystem;

namespace {

struct UsageError : InvalidArgument {
  using InvalidArgument::InvalidArgument;
};

void require_input(const std::string& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::is_regular_file(path)) throw IoError(std::string(flag) + ": cannot read '" + path + "'");
}

void require_output(const std::string& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent)) {
    throw IoError(std::string(flag) + ": directory '" + parent.string() + "' does not exist");
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

void add_config(CLI::App* cmd) {
  // Consumed by expand_config() before parsing; registered for --help.
  cmd->add_option("--config", "File of `key = value` lines; command-line flags win");
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

// Replaces `--config FILE` with the file's settings for every flag the
// command line does not already set. Unknown keys are rejected.
std::vector<std::string> expand_config(const std::vector<std::string>& args, CLI::App& app) {
  if (args.empty()) return args;
  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(args[0]);
  } catch (const CLI::OptionNotFound&) {
    return args;
  }
  std::vector<std::string> rest;
  std::string config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file path");
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (config.empty()) return rest;

  std::ifstream in(config);
  if (!in) throw IoError("--config: cannot read '" + config + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("--config: line " + std::to_string(lineno) + " is not `key = value`");
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    const std::string flag = "--" + key;
    const CLI::Option* opt = key == "config" ? nullptr : sub->get_option_no_throw(flag);
    if (opt == nullptr) throw UsageError("--config: unknown key '" + key + "' for " + args[0]);
    if (given_on_command_line(rest, flag)) continue;
    if (opt->get_expected_min() == 0) {
      if (value == "true" || value == "1") {
        rest.push_back(flag);
      } else if (value != "false" && value != "0") {
        throw UsageError("--config: " + key + " expects true or false");
      }
    } else {
      rest.push_back(flag);
      rest.push_back(value);
    }
  }
  return rest;
}

// ---- gen-data ---------------------------------------------------------------

struct GenDataArgs {
  std::string out;
  std::size_t pairs = 2000;
  int size = 16;
  double payload = 0.4;
  int blur = 2;
  int blur_passes = 2;
  std::uint64_t seed = 1;
};

int cmd_gen_data(const GenDataArgs& a, std::ostream& out) {
  if (!(a.payload > 0.0 && a.payload <= 1.0)) throw UsageError("--payload must be in (0, 1]");
  if (a.pairs < 10) throw UsageError("--pairs must be at least 10");
  if (a.size < 8 || a.size > 65535) throw UsageError("--size must be in [8, 65535]");
  if (a.blur < 0) throw UsageError("--blur must be non-negative");
  if (a.blur_passes < 1) throw UsageError("--blur-passes must be at least 1");
  require_output(a.out, "--out");

  DatasetConfig cfg;
  cfg.n_pairs = a.pairs;
  cfg.image_size = a.size;
  cfg.payload = a.payload;
  cfg.blur_radius = a.blur;
  cfg.blur_passes = a.blur_passes;
  cfg.seed = a.seed;
  const Dataset ds = build_dataset(cfg);
  const auto bytes = encode_dataset(ds);
  detail::write_file(a.out, bytes);

  std::uint32_t crc = 0;
  for (int i = 0; i < 4; ++i) crc |= static_cast<std::uint32_t>(bytes[bytes.size() - 4 + i]) << (8 * i);
  std::ostringstream hex;
  hex << std::hex << std::setw(8) << std::setfill('0') << crc;
  out << "count=" << ds.images.size() << "\n"
      << "payload=" << format_double(cfg.payload) << "\n"
      << "checksum=" << hex.str() << "\n";
  return kExitOk;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string loss = "ce+stegcl";
  double tau = 0.1;
  double lambda = 1.0;
  int epochs = 20;
  int batch = 32;
  double lr = 1e-3;
  std::string optimizer = "adam";
  std::uint64_t seed = 1;
  std::string out;
  std::string history;
  bool no_normalize = false;
  bool include_positive = false;
  bool timing = false;
};

ContrastiveVariant parse_loss_flag(const std::string& s) {
  if (s == "ce") return ContrastiveVariant::none;
  if (s == "ce+selfcl") return ContrastiveVariant::selfcl;
  if (s == "ce+supcl") return ContrastiveVariant::supcl;
  if (s == "ce+stegcl") return ContrastiveVariant::stegcl;
  throw UsageError("--loss must be one of ce, ce+selfcl, ce+supcl, ce+stegcl");
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  TrainConfig cfg;
  cfg.loss.variant = parse_loss_flag(a.loss);
  if (!(a.tau > 0.0)) throw UsageError("--tau must be positive");
  if (!(a.lambda >= 0.0)) throw UsageError("--lambda must be non-negative");
  if (a.epochs < 1) throw UsageError("--epochs must be at least 1");
  if (a.batch < 4 || a.batch % 2 != 0) throw UsageError("--batch must be even and at least 4");
  if (!(a.lr > 0.0)) throw UsageError("--lr must be positive");
  if (a.optimizer == "adam") {
    cfg.optimizer.kind = OptimizerConfig::Kind::adam;
  } else if (a.optimizer == "sgd") {
    cfg.optimizer.kind = OptimizerConfig::Kind::sgd;
  } else {
    throw UsageError("--optimizer must be adam or sgd");
  }
  require_input(a.data, "--data");
  require_output(a.out, "--out");
  const std::string history = a.history.empty() ? a.out + ".history.csv" : a.history;
  require_output(history, "--history");

  cfg.loss.tau = a.tau;
  cfg.loss.lambda = a.lambda;
  cfg.loss.normalize_features = !a.no_normalize;
  cfg.loss.include_positive_in_denominator = a.include_positive;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch;
  cfg.learning_rate = a.lr;
  cfg.seed = a.seed;
  cfg.record_time = a.timing;
  cfg.checkpoint_path = a.out;

  const Dataset ds = load_dataset(a.data);
  const TrainResult res = train(cfg, ds);
  auto f = open_output(history);
  write_history_csv(f, res.history);
  if (!f) throw IoError("error writing '" + history + "'");
  out << "best_epoch=" << res.best_epoch << "\n"
      << "val_pe=" << format_double(res.best_val_pe) << "\n";
  return kExitOk;
}

// ---- eval / mismatch / export -------------------------------------------------

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string split = "test";
  bool no_normalize = false;
};

Split split_flag(const std::string& s) {
  if (s != "train" && s != "val" && s != "test") throw UsageError("--split must be train, val or test");
  return parse_split(s);
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const Split split = split_flag(a.split);
  require_input(a.ckpt, "--ckpt");
  require_input(a.data, "--data");
  const ModelParams params = load_checkpoint(a.ckpt);
  const Dataset ds = load_dataset(a.data);
  const EvalReport r = evaluate(params, ds, split, !a.no_normalize);
  out << "pe=" << format_double(r.p_e) << "\n"
      << "acc=" << format_double(r.accuracy) << "\n"
      << "pfa=" << format_double(r.p_fa) << "\n"
      << "pmd=" << format_double(r.p_md) << "\n"
      << "threshold=" << format_double(r.threshold_at_min) << "\n"
      << "silhouette=" << format_double(r.silhouette) << "\n"
      << "n=" << r.n << "\n";
  return kExitOk;
}

struct MismatchArgs {
  std::vector<std::string> ckpts;  // PAYLOAD=PATH
  std::vector<std::string> data;
  std::string out;
};

double parse_payload(const std::string& s, const char* flag) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size() && v > 0.0 && v <= 1.0) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(std::string(flag) + ": bad payload '" + s + "'");
}

int cmd_mismatch(const MismatchArgs& a, std::ostream& out) {
  if (a.ckpts.empty()) throw UsageError("--ckpt is required (PAYLOAD=PATH, repeatable)");
  if (a.data.empty()) throw UsageError("--data-list is required");
  std::vector<std::pair<double, std::string>> ckpts;
  for (const auto& entry : a.ckpts) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw UsageError("--ckpt expects PAYLOAD=PATH, got '" + entry + "'");
    ckpts.emplace_back(parse_payload(entry.substr(0, eq), "--ckpt"), entry.substr(eq + 1));
    require_input(ckpts.back().second, "--ckpt");
  }
  for (const auto& p : a.data) require_input(p, "--data-list");
  if (!a.out.empty()) require_output(a.out, "--out");

  std::vector<PayloadModel> models;
  for (const auto& [payload, path] : ckpts) models.push_back({payload, load_checkpoint(path)});
  std::vector<Dataset> sets;
  sets.reserve(a.data.size());
  for (const auto& p : a.data) sets.push_back(load_dataset(p));
  std::vector<PayloadDataset> views;
  for (const auto& d : sets) views.push_back({d.config.payload, &d});

  const auto cells = mismatch_eval(models, views);
  if (a.out.empty()) {
    write_mismatch_csv(out, cells);
  } else {
    auto f = open_output(a.out);
    write_mismatch_csv(f, cells);
    if (!f) throw IoError("error writing '" + a.out + "'");
    out << "cells=" << cells.size() << "\n";
  }
  return kExitOk;
}

struct ExportArgs {
  std::string ckpt;
  std::string data;
  std::string split = "test";
  std::string out;
  bool no_normalize = false;
};

int cmd_export(const ExportArgs& a, std::ostream& out) {
  const Split split = split_flag(a.split);
  require_input(a.ckpt, "--ckpt");
  require_input(a.data, "--data");
  require_output(a.out, "--out");
  const ModelParams params = load_checkpoint(a.ckpt);
  const Dataset ds = load_dataset(a.data);
  const SplitFeatures feats = extract_features(params, ds, split, !a.no_normalize);
  const Pca2d pca = pca_2d(feats.z);

  auto f = open_output(a.out);
  f << "x,y,label\n";
  for (std::size_t i = 0; i < feats.labels.size(); ++i) {
    f << format_double(pca.coords(i, 0)) << ',' << format_double(pca.coords(i, 1)) << ',' << feats.labels[i] << '\n';
  }
  if (!f) throw IoError("error writing '" + a.out + "'");
  out << "rows=" << feats.labels.size() << "\n";
  return kExitOk;
}

// ---- bench ------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::string> variants{"supcl", "stegcl"};
  std::size_t batch = 256;
  std::size_t dim = 128;
  std::size_t repeats = 20;
  std::uint64_t seed = 1;
  double tau = 0.1;
  std::string out;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  std::vector<ContrastiveVariant> variants;
  for (const auto& v : a.variants) {
    if (v != "selfcl" && v != "supcl" && v != "stegcl") throw UsageError("--variants: unknown variant '" + v + "'");
    variants.push_back(parse_variant(v));
  }
  if (a.repeats < 5) throw UsageError("--repeats must be at least 5");
  if (a.batch < 4 || a.batch % 2 != 0) throw UsageError("--batch must be even and at least 4");
  if (a.dim < 1) throw UsageError("--dim must be positive");
  if (!(a.tau > 0.0)) throw UsageError("--tau must be positive");
  if (!a.out.empty()) require_output(a.out, "--out");

  std::ostringstream csv;
  write_bench_header(csv);
  const Rng root(a.seed);
  LossConfig cfg;
  cfg.tau = a.tau;
  for (std::size_t i = 0; i < variants.size(); ++i) {
    Rng rng = root.derive(i);
    write_bench_row(csv, time_loss(variants[i], a.batch, a.dim, a.repeats, rng, cfg));
  }
  if (a.out.empty()) {
    out << csv.str();
  } else {
    auto f = open_output(a.out);
    f << csv.str();
    if (!f) throw IoError("error writing '" + a.out + "'");
    out << csv.str();
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Steganalysis contrastive learning toolkit", "scf"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* g = app.add_subcommand("gen-data", "Generate a synthetic cover/stego dataset file");
  add_config(g);
  g->add_option("--out", gen.out, "Output dataset path")->required();
  g->add_option("--pairs", gen.pairs, "Number of cover/stego pairs");
  g->add_option("--size", gen.size, "Image side in pixels");
  g->add_option("--payload", gen.payload, "Fraction of pixels changed by +-1, in (0, 1]");
  g->add_option("--blur", gen.blur, "Box blur radius of the covers");
  g->add_option("--blur-passes", gen.blur_passes, "Number of box blur passes");
  g->add_option("--seed", gen.seed, "Random seed");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the toy steganalyzer");
  add_config(t);
  t->add_option("--data", tr.data, "Dataset file")->required();
  t->add_option("--loss", tr.loss, "ce | ce+selfcl | ce+supcl | ce+stegcl");
  t->add_option("--tau", tr.tau, "Contrastive temperature");
  t->add_option("--lambda", tr.lambda, "Weight of the contrastive term");
  t->add_option("--epochs", tr.epochs, "Training epochs");
  t->add_option("--batch", tr.batch, "Batch size (even)");
  t->add_option("--lr", tr.lr, "Learning rate");
  t->add_option("--optimizer", tr.optimizer, "adam | sgd");
  t->add_option("--seed", tr.seed, "Random seed");
  t->add_option("--out", tr.out, "Checkpoint path")->required();
  t->add_option("--history", tr.history, "History CSV path (default: <out>.history.csv)");
  t->add_flag("--no-normalize", tr.no_normalize, "Use raw features in the contrastive loss");
  t->add_flag("--include-positive", tr.include_positive, "Add the positive to the stegcl denominator");
  t->add_flag("--timing", tr.timing, "Record wall-clock seconds in the history");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  add_config(e);
  e->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
  e->add_option("--data", ev.data, "Dataset file")->required();
  e->add_option("--split", ev.split, "train | val | test");
  e->add_flag("--no-normalize", ev.no_normalize, "Silhouette on raw features");

  MismatchArgs mm;
  auto* m = app.add_subcommand("mismatch", "Cross-payload P_E table");
  add_config(m);
  m->add_option("--ckpt", mm.ckpts, "PAYLOAD=PATH, repeatable")->required();
  m->add_option("--data-list", mm.data, "Dataset files, comma separated or repeated")->required()->delimiter(',');
  m->add_option("--out", mm.out, "CSV output path (default: stdout)");

  BenchArgs bn;
  auto* b = app.add_subcommand("bench", "Time contrastive loss forward+gradient");
  add_config(b);
  b->add_option("--variants", bn.variants, "Comma separated: selfcl,supcl,stegcl")->delimiter(',');
  b->add_option("--batch", bn.batch, "Batch size (even)");
  b->add_option("--dim", bn.dim, "Feature dimension");
  b->add_option("--repeats", bn.repeats, "Timed repeats (>= 5)");
  b->add_option("--seed", bn.seed, "Random seed");
  b->add_option("--tau", bn.tau, "Temperature");
  b->add_option("--out", bn.out, "CSV output path (default: stdout only)");

  ExportArgs ex;
  auto* x = app.add_subcommand("export-features", "Write 2-D PCA of split features as CSV");
  add_config(x);
  x->add_option("--ckpt", ex.ckpt, "Checkpoint file")->required();
  x->add_option("--data", ex.data, "Dataset file")->required();
  x->add_option("--split", ex.split, "train | val | test");
  x->add_option("--out", ex.out, "CSV output path")->required();
  x->add_flag("--no-normalize", ex.no_normalize, "Project raw features");

  try {
    const std::vector<std::string> expanded = expand_config(args, app);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::FileError& ex2) {
    err << "error: " << ex2.what() << "\n";
    return kExitIo;
  } catch (const CLI::ParseError& ex2) {
    err << "error: " << ex2.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& ex2) {
    err << "error: " << ex2.what() << "\n";
    return kExitUsage;
  } catch (const IoError& ex2) {
    err << "error: " << ex2.what() << "\n";
    return kExitIo;
  }

  try {
    if (*g) return cmd_gen_data(gen, out);
    if (*t) return cmd_train(tr, out);
    if (*e) return cmd_eval(ev, out);
    if (*m) return cmd_mismatch(mm, out);
    if (*b) return cmd_bench(bn, out);
    if (*x) return cmd_export(ex, out);
  } catch (const UsageError& ex2) {
    err << "error: " << ex2.what() << "\n";
    return kExitUsage;
  } catch (const IoError& ex2) {
    err << "error: " << ex2.what() << "\n";
    return kExitIo;
  } catch (const NumericError& ex2) {
    err << "error: " << ex2.what() << "\n";
    return kExitNumeric;
  } catch (const InvalidArgument& ex2) {
    err << "error: " << ex2.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace scf
