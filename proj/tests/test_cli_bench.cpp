#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tpgnn/bench.hpp"
#include "tpgnn/config.hpp"
#include "tpgnn/errors.hpp"
#include "tpgnn/report.hpp"
#include "tpgnn/synthetic.hpp"

using namespace tpgnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "tpgnn_cli_test" / name;
  fs::create_directories(p.parent_path());
  return p;
}

int run_cli(const std::string& args, const fs::path& out = {}) {
  std::string cmd = std::string("\"") + TPGNN_CLI_PATH + "\" " + args;
  cmd += out.empty() ? " >/dev/null 2>&1" : " >\"" + out.string() + "\" 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<nlohmann::json> json_lines(const fs::path& p) {
  std::vector<nlohmann::json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line.front() == '{') out.push_back(nlohmann::json::parse(line));
  return out;
}

bool same_log(const EventLog& a, const EventLog& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.src(i) != b.src(i) || a.dst(i) != b.dst(i) || a.time(i) != b.time(i)) return false;
    const auto fa = a.features(i), fb = b.features(i);
    if (!std::equal(fa.begin(), fa.end(), fb.begin(), fb.end())) return false;
  }
  return true;
}

Config tiny_config() {
  Config c;
  c.dim = 8;
  c.layers = 2;
  c.neighbors = 5;
  c.learning_rate = 1e-3;
  c.batch_size = 50;
  c.seed = 4;
  return c;
}

}  // namespace

TEST_CASE("config defaults are the reference hyperparameters") {
  const Config c;
  CHECK(c.layers == 5);
  CHECK(c.neighbors == 20);
  CHECK(c.dim == 172);
  CHECK(c.batch_size == 200);
  CHECK(c.learning_rate == 1e-4);
  CHECK(c.dropout == 0.1);
  CHECK(c.heads == 2);
  CHECK(c.transformer_layers == 1);
  CHECK(c.patience == 5);
  CHECK(c.layer_attention);
  CHECK(c.task == Task::link);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config validation") {
  auto bad = [](auto mutate) {
    Config c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  bad([](Config& c) { c.layers = 0; });
  bad([](Config& c) { c.neighbors = 0; });
  bad([](Config& c) { c.batch_size = 0; });
  bad([](Config& c) { c.dim = 171; });  // not divisible by the heads
  bad([](Config& c) { c.dropout = 1.0; });
  bad([](Config& c) { c.learning_rate = 0.0; });
  CHECK_THROWS_AS(parse_task("edge"), ConfigError);
  CHECK(parse_task("node") == Task::node);
  CHECK_THROWS_AS(parse_negative_features("maybe"), ConfigError);
}

TEST_CASE("synthetic log shape") {
  const auto s = generate_synthetic(20, 2000, 1);
  const EventLog& log = s.log;
  CHECK(log.size() == 2000);
  CHECK(log.num_src() == 10);
  CHECK(log.num_dst() == 10);
  CHECK(log.feature_dim() == 2);
  for (std::size_t i = 0; i < log.size(); ++i) {
    CHECK(log.src(i) < log.first_dst());
    CHECK(log.dst(i) >= log.first_dst());
    if (i > 0) CHECK(log.time(i - 1) <= log.time(i));
  }
}

TEST_CASE("preferred-cluster hit rate is near the planted rate") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto s = generate_synthetic(40, 5000, seed);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < s.log.size(); ++i) {
      const int c = s.dst_cluster[s.log.dst(i) - s.log.first_dst()];
      const bool hit = c == s.preferred_cluster[s.log.src(i)];
      hits += hit;
      CHECK(s.log.label(i) == (hit ? 0 : 1));
    }
    CHECK(hits == s.cluster_hits);
    CHECK(std::abs(static_cast<double>(hits) / 5000.0 - kSyntheticClusterRate) <= 0.02);
  }
}

TEST_CASE("synthetic generator seeds and errors") {
  const auto a = generate_synthetic(20, 500, 1), b = generate_synthetic(20, 500, 2), c = generate_synthetic(20, 500, 1);
  CHECK_FALSE(same_log(a.log, b.log));
  CHECK(same_log(a.log, c.log));
  CHECK_THROWS_AS(generate_synthetic(3, 10, 1), UsageError);
  CHECK_THROWS_AS(generate_synthetic(10, 0, 1), UsageError);
}

TEST_CASE("batch sweep has one row per value and survives oversized batches") {
  const auto s = generate_synthetic(20, 400, 5);
  BenchOptions o;
  o.epochs = 1;
  const BenchReport r = bench_batch(s.log, tiny_config(), {50, 5000}, o);
  REQUIRE(r.points.size() == 2);
  CHECK(r.points[0].value == 50);
  CHECK(r.points[1].batches == 1);
  for (const auto& p : r.points) {
    CHECK(p.parameter == "B");
    CHECK(p.train_seconds_per_epoch > 0.0);
    CHECK(p.infer_ms_per_batch > 0.0);
  }
  std::ostringstream csv;
  write_csv(csv, r);
  std::size_t lines = 0;
  for (char ch : csv.str()) lines += ch == '\n';
  CHECK(lines == 3);
  CHECK(csv.str().rfind("parameter,value,", 0) == 0);
}

TEST_CASE("depth sweep shares seeds across points") {
  const auto s = generate_synthetic(20, 400, 6);
  BenchOptions o;
  o.epochs = 1;
  const BenchReport a = bench_depth(s.log, tiny_config(), {1, 2}, o);
  const BenchReport b = bench_depth(s.log, tiny_config(), {2}, o);
  REQUIRE(a.points.size() == 2);
  CHECK(a.points[0].parameter == "k");
  CHECK(a.points[1].ap == b.points[0].ap);
  CHECK(a.points[1].first_loss == b.points[0].first_loss);
}

TEST_CASE("metrics json has the fixed field order") {
  RunMetrics m;
  m.epoch = 2;
  m.split = "val";
  const auto j = nlohmann::ordered_json::parse(metrics_json(m));
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  CHECK(keys == std::vector<std::string>{"epoch", "split", "loss", "acc", "ap", "auc", "train_s",
                                         "infer_ms_per_batch", "update_ms_per_batch", "batches"});
}

TEST_CASE("inspect prints the table row") {
  const fs::path data = scratch("inspect.csv"), out = scratch("inspect.out");
  std::ofstream(data) << "u,i,ts,label,f1,f2,f3\n0,0,0,0,1,2,3\n1,0,1,0,1,2,3\n2,5,2,1,1,2,3\n";
  CHECK(run_cli("inspect --data \"" + data.string() + "\"", out) == 0);
  CHECK(slurp(out).find("edges=3 src=3 dst=2 feat=3") != std::string::npos);
}

TEST_CASE("cli exit codes") {
  CHECK(run_cli("inspect --data /nonexistent/file.csv") == 1);
  CHECK(run_cli("train --k 0") == 2);
  CHECK(run_cli("train --no-such-flag") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("eval --checkpoint /nonexistent/best.ckpt --synthetic-events 200") == 1);

  const fs::path cfg = scratch("zero.cfg");
  std::ofstream(cfg) << "k=0\n";
  const fs::path data = scratch("cfg.csv");
  std::ofstream(data) << "u,i,ts,label\n0,0,0,0\n";
  CHECK(run_cli("inspect --config \"" + cfg.string() + "\" --data \"" + data.string() + "\"") == 2);
  CHECK(run_cli("inspect --config \"" + cfg.string() + "\" --k 2 --data \"" + data.string() + "\"") == 0);
}

TEST_CASE("train twice gives the same metric stream, then eval reads the checkpoint") {
  const std::string args =
      "train --synthetic-nodes 16 --synthetic-events 600 --dim 8 --k 2 --neighbors 5 --batch-size 50 "
      "--lr 1e-3 --max-epochs 2 --seed 7 --run-dir ";
  const fs::path d1 = scratch("run1"), d2 = scratch("run2");
  fs::remove_all(d1);
  fs::remove_all(d2);
  REQUIRE(run_cli(args + "\"" + d1.string() + "\"", scratch("run1.out")) == 0);
  REQUIRE(run_cli(args + "\"" + d2.string() + "\"", scratch("run2.out")) == 0);
  auto a = json_lines(d1 / "metrics.jsonl"), b = json_lines(d2 / "metrics.jsonl");
  REQUIRE(a.size() == 5);
  CHECK(json_lines(scratch("run1.out")).size() == a.size());
  for (auto* stream : {&a, &b})
    for (auto& j : *stream)
      for (const char* key : {"train_s", "infer_ms_per_batch", "update_ms_per_batch"}) j.erase(key);
  CHECK(a == b);
  CHECK(fs::exists(d1 / "best.ckpt"));
  CHECK(run_cli("eval --synthetic-nodes 16 --synthetic-events 600 --seed 7 --neighbors 5 --batch-size 50 --checkpoint \"" +
                    (d1 / "best.ckpt").string() + "\"",
                scratch("eval.out")) == 0);
  const auto ev = json_lines(scratch("eval.out"));
  REQUIRE(ev.size() == 1);
  CHECK(ev[0]["split"] == "test");
  CHECK(ev[0]["ap"] == a.back()["ap"]);
}
