#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>

#include "tpgnn/training.hpp"

namespace tpgnn {

/// Environment variable naming the run directory.
inline constexpr const char* kRunDirEnv = "TPGNN_RUN_DIR";

/// The run directory from the environment, if set and non-empty.
std::optional<std::filesystem::path> run_dir_from_env();

/// One JSON object per line: epoch, split, loss, acc, ap, auc, train_s,
/// infer_ms_per_batch, update_ms_per_batch, batches.
std::string metrics_json(const RunMetrics& m);

/// Writes the metrics stream to `out` and, when a run directory is given,
/// appends it to `<run_dir>/metrics.jsonl`.
class MetricsWriter {
 public:
  MetricsWriter(std::ostream& out, const std::optional<std::filesystem::path>& run_dir);
  void write(const RunMetrics& m);

 private:
  std::ostream& out_;
  std::ofstream file_;
};

}  // namespace tpgnn
