#include "tpgnn/report.hpp"

#include <cstdlib>
#include <ostream>

#include <json.hpp>

namespace tpgnn {

std::optional<std::filesystem::path> run_dir_from_env() {
  const char* v = std::getenv(kRunDirEnv);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::filesystem::path(v);
}

std::string metrics_json(const RunMetrics& m) {
  nlohmann::ordered_json j;
  j["epoch"] = m.epoch;
  j["split"] = m.split;
  j["loss"] = m.loss;
  j["acc"] = m.accuracy;
  j["ap"] = m.ap;
  j["auc"] = m.auc;
  j["train_s"] = m.train_seconds;
  j["infer_ms_per_batch"] = m.infer_ms_per_batch;
  j["update_ms_per_batch"] = m.update_ms_per_batch;
  j["batches"] = m.batches;
  return j.dump();
}

MetricsWriter::MetricsWriter(std::ostream& out, const std::optional<std::filesystem::path>& run_dir) : out_(out) {
  if (run_dir) {
    std::filesystem::create_directories(*run_dir);
    file_.open(*run_dir / "metrics.jsonl", std::ios::app);
    if (!file_) throw std::runtime_error("cannot open " + (*run_dir / "metrics.jsonl").string());
  }
}

void MetricsWriter::write(const RunMetrics& m) {
  const std::string line = metrics_json(m);
  out_ << line << '\n' << std::flush;
  if (file_.is_open()) file_ << line << '\n' << std::flush;
}

}  // namespace tpgnn
