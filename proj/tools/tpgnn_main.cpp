// Command-line driver: train, eval, bench-depth, bench-batch, inspect.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tpgnn/bench.hpp"
#include "tpgnn/checkpoint.hpp"
#include "tpgnn/config.hpp"
#include "tpgnn/errors.hpp"
#include "tpgnn/events.hpp"
#include "tpgnn/report.hpp"
#include "tpgnn/synthetic.hpp"
#include "tpgnn/training.hpp"

namespace fs = std::filesystem;
using namespace tpgnn;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct DataNotFound : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliState {
  Config config;
  std::string task = "link";
  std::string neg_features = "reuse";
  bool no_layer_attention = false;
  bool no_header_skip = false;
  std::size_t synthetic_nodes = 40;
  std::size_t synthetic_events = 5000;
  std::string run_dir;
  std::string checkpoint;
  std::string csv;
  int bench_epochs = 3;
  std::vector<int> k_values{1, 2, 3, 4, 5};
  std::vector<std::size_t> b_values{100, 200, 500, 1000, 2000};
};

void finalize(CliState& s) {
  s.config.task = parse_task(s.task);
  s.config.negative_features = parse_negative_features(s.neg_features);
  s.config.layer_attention = !s.no_layer_attention;
  s.config.validate();
}

std::optional<fs::path> run_dir(const CliState& s) {
  if (!s.run_dir.empty()) return fs::path(s.run_dir);
  return run_dir_from_env();
}

EventLog load_data(const CliState& s) {
  if (s.config.data.empty()) {
    std::cerr << "no --data given; using generate_synthetic(" << s.synthetic_nodes << ", " << s.synthetic_events
              << ", seed " << s.config.seed << ")\n";
    return generate_synthetic(s.synthetic_nodes, s.synthetic_events, s.config.seed).log;
  }
  if (!fs::exists(s.config.data)) throw DataNotFound("data file not found: " + s.config.data.string());
  return load_events(s.config.data, LoadOptions{!s.no_header_skip});
}

int cmd_inspect(const CliState& s) {
  if (s.config.data.empty()) throw ConfigError("inspect needs --data");
  const EventLog log = load_data(s);
  std::cout << "edges=" << log.size() << " src=" << log.num_src() << " dst=" << log.num_dst()
            << " feat=" << log.feature_dim() << '\n';
  return 0;
}

int cmd_train(const CliState& s) {
  const EventLog log = load_data(s);
  const auto dir = run_dir(s);
  MetricsWriter writer(std::cout, dir);
  const FitResult r = fit(log, s.config.model_dims(log.feature_dim()), s.config.fit_options(),
                          [&](const RunMetrics& m) { writer.write(m); });
  if (dir) {
    const fs::path path = s.checkpoint.empty() ? *dir / "best.ckpt" : fs::path(s.checkpoint);
    save_checkpoint(path, r.best);
    std::cerr << "best epoch " << r.best_epoch << " saved to " << path.string() << '\n';
  } else if (!s.checkpoint.empty()) {
    save_checkpoint(s.checkpoint, r.best);
  }
  return 0;
}

int cmd_eval(const CliState& s) {
  fs::path path = s.checkpoint;
  if (path.empty()) {
    const auto dir = run_dir(s);
    if (!dir) throw ConfigError("eval needs --checkpoint or a run directory");
    path = *dir / "best.ckpt";
  }
  if (!fs::exists(path)) throw DataNotFound("checkpoint not found: " + path.string());
  const EventLog log = load_data(s);
  const Checkpoint ckpt = load_checkpoint_file(path);
  Model model = Model::create(ckpt.dims, s.config.seed);
  Trainer trainer(log, std::move(model), s.config.fit_options().train);
  load_checkpoint(trainer, ckpt);
  const SplitSet splits = chronological_split(log);
  if (ckpt.cursor != splits.val.end) {
    throw ConfigError("checkpoint stream position does not match the validation boundary of this log");
  }
  MetricsWriter writer(std::cout, std::nullopt);
  RunMetrics m = trainer.evaluate(splits.test, s.config.task);
  m.epoch = ckpt.epoch;
  m.split = "test";
  writer.write(m);
  return 0;
}

int cmd_bench(const CliState& s, bool depth) {
  const EventLog log = load_data(s);
  MetricsWriter writer(std::cerr, run_dir(s));
  const BenchOptions opts{s.bench_epochs};
  auto cb = [&](const RunMetrics& m) { writer.write(m); };
  const BenchReport report = depth ? bench_depth(log, s.config, s.k_values, opts, cb)
                                   : bench_batch(log, s.config, s.b_values, opts, cb);
  write_csv(std::cout, report);
  const auto dir = run_dir(s);
  if (!s.csv.empty() || dir) {
    const fs::path path = !s.csv.empty() ? fs::path(s.csv) : *dir / (depth ? "bench_depth.csv" : "bench_batch.csv");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_csv(out, report);
  }
  return 0;
}

void add_model_options(CLI::App& app, CliState& s) {
  Config& c = s.config;
  app.add_option("--data", c.data, "JODIE-format CSV event file (synthetic log when omitted)");
  app.add_option("--task", s.task, "link or node");
  app.add_option("--k", c.layers, "propagation depth / memory layers");
  app.add_option("--neighbors", c.neighbors, "temporal neighbors per hop");
  app.add_option("--dim", c.dim, "node and memory dimension");
  app.add_option("--batch-size", c.batch_size, "events per batch");
  app.add_option("--lr", c.learning_rate, "Adam learning rate");
  app.add_option("--dropout", c.dropout, "dropout rate");
  app.add_option("--heads", c.heads, "attention heads");
  app.add_option("--transformer-layers", c.transformer_layers, "encoder blocks");
  app.add_option("--patience", c.patience, "early stopping patience");
  app.add_option("--max-epochs", c.max_epochs, "epoch cap");
  app.add_option("--seed", c.seed, "random seed");
  app.add_flag("--no-layer-attention", s.no_layer_attention, "ablation: force layer biases to zero");
  app.add_option("--neg-features", s.neg_features, "reuse or zeros");
  app.add_flag("--no-header-skip", s.no_header_skip, "first CSV line is data");
  app.add_option("--synthetic-nodes", s.synthetic_nodes, "synthetic log node count");
  app.add_option("--synthetic-events", s.synthetic_events, "synthetic log event count");
  app.add_option("--run-dir", s.run_dir, "run directory (overrides $TPGNN_RUN_DIR)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"temporal graph engine"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "flat key=value file; command-line flags win");
  CliState s;
  add_model_options(app, s);

  auto* train = app.add_subcommand("train", "fit with early stopping and report test metrics");
  train->add_option("--checkpoint", s.checkpoint, "where to write the best checkpoint");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  eval->add_option("--checkpoint", s.checkpoint, "checkpoint file (default <run_dir>/best.ckpt)");
  auto* depth = app.add_subcommand("bench-depth", "sweep k at fixed epochs");
  depth->add_option("--k-values", s.k_values, "depths to sweep")->delimiter(',');
  auto* batch = app.add_subcommand("bench-batch", "sweep batch size at fixed epochs");
  batch->add_option("--b-values", s.b_values, "batch sizes to sweep")->delimiter(',');
  for (auto* sub : {depth, batch}) {
    sub->add_option("--epochs", s.bench_epochs, "epochs per sweep point");
    sub->add_option("--csv", s.csv, "write the report table here too");
  }
  auto* inspect = app.add_subcommand("inspect", "print dataset statistics");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    finalize(s);
    if (train->parsed()) return cmd_train(s);
    if (eval->parsed()) return cmd_eval(s);
    if (depth->parsed()) return cmd_bench(s, true);
    if (batch->parsed()) return cmd_bench(s, false);
    if (inspect->parsed()) return cmd_inspect(s);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
