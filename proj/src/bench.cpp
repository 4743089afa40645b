#include "tpgnn/bench.hpp"

#include <algorithm>
#include <ostream>

#include "tpgnn/errors.hpp"

namespace tpgnn {
namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

BenchPoint bench_run(const EventLog& log, const Config& config, const BenchOptions& options,
                     const MetricsCallback& on_metrics) {
  config.validate();
  if (options.epochs < 1) throw ConfigError("bench needs at least one epoch");
  const ModelDims dims = config.model_dims(log.feature_dim());
  const FitOptions fo = config.fit_options();
  Trainer trainer(log, Model::create(dims, fo.train.seed), fo.train);
  const SplitSet splits = chronological_split(log);

  std::vector<double> train_s;
  std::vector<double> infer_ms;
  BenchPoint p;
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    trainer.reset_state();
    RunMetrics train = trainer.train_epoch(splits.train, epoch);
    train.split = "train";
    if (on_metrics) on_metrics(train);
    train_s.push_back(train.train_seconds);
    if (epoch == 1) p.first_loss = train.loss;
    p.last_loss = train.loss;
    p.batches = train.batches;

    RunMetrics val = trainer.evaluate(splits.val);
    val.epoch = epoch;
    val.split = "val";
    if (on_metrics) on_metrics(val);
    infer_ms.push_back(val.infer_ms_per_batch);
  }
  RunMetrics test = trainer.evaluate(splits.test);
  test.epoch = options.epochs;
  test.split = "test";
  if (on_metrics) on_metrics(test);
  infer_ms.push_back(test.infer_ms_per_batch);

  p.train_seconds_per_epoch = median(train_s);
  p.infer_ms_per_batch = median(infer_ms);
  p.ap = test.ap;
  p.accuracy = test.accuracy;
  return p;
}

BenchReport bench_depth(const EventLog& log, const Config& config, const std::vector<int>& k_values,
                        const BenchOptions& options, const MetricsCallback& on_metrics) {
  BenchReport r;
  for (int k : k_values) {
    Config c = config;
    c.layers = k;
    BenchPoint p = bench_run(log, c, options, on_metrics);
    p.parameter = "k";
    p.value = static_cast<std::size_t>(k);
    r.points.push_back(p);
  }
  return r;
}

BenchReport bench_batch(const EventLog& log, const Config& config, const std::vector<std::size_t>& b_values,
                        const BenchOptions& options, const MetricsCallback& on_metrics) {
  BenchReport r;
  for (std::size_t b : b_values) {
    Config c = config;
    c.batch_size = b;
    BenchPoint p = bench_run(log, c, options, on_metrics);
    p.parameter = "B";
    p.value = b;
    r.points.push_back(p);
  }
  return r;
}

void write_csv(std::ostream& out, const BenchReport& report) {
  out << "parameter,value,train_s_per_epoch,infer_ms_per_batch,ap,accuracy,batches\n";
  for (const auto& p : report.points) {
    out << p.parameter << ',' << p.value << ',' << p.train_seconds_per_epoch << ',' << p.infer_ms_per_batch << ','
        << p.ap << ',' << p.accuracy << ',' << p.batches << '\n';
  }
}

}  // namespace tpgnn
