#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tpgnn {

using NodeId = std::uint32_t;

/// One timestamped interaction.
struct Event {
  NodeId src = 0;
  NodeId dst = 0;
  double t = 0.0;
  std::vector<double> features;
  std::optional<int> label;
};

/// Chronologically sorted interaction stream over a bipartite node universe:
/// sources are 0..num_src-1, destinations num_src..num_src+num_dst-1.
/// Features are held as 32-bit floats in one contiguous block.
class EventLog {
 public:
  EventLog() = default;
  /// Sorts stably by timestamp (ties keep input order). Node ids must
  /// already be dense; throws FormatError on ragged features or
  /// non-finite timestamps.
  EventLog(std::vector<Event> events, std::size_t num_src, std::size_t num_dst);

  std::size_t size() const { return src_.size(); }
  bool empty() const { return src_.empty(); }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t num_src() const { return num_src_; }
  std::size_t num_dst() const { return num_dst_; }
  std::size_t num_nodes() const { return num_src_ + num_dst_; }
  NodeId first_dst() const { return static_cast<NodeId>(num_src_); }

  NodeId src(std::size_t i) const { return src_[i]; }
  NodeId dst(std::size_t i) const { return dst_[i]; }
  double time(std::size_t i) const { return t_[i]; }
  std::optional<int> label(std::size_t i) const;
  std::span<const float> features(std::size_t i) const {
    return {features_.data() + i * feature_dim_, feature_dim_};
  }
  Event event(std::size_t i) const;

  /// Rewrites one event in place (used by tests that perturb the future).
  /// The timestamp is kept, so the sort order is preserved.
  void overwrite(std::size_t i, NodeId src, NodeId dst, std::span<const double> features);

 private:
  std::vector<NodeId> src_;
  std::vector<NodeId> dst_;
  std::vector<double> t_;
  std::vector<std::int8_t> label_;  // -1 = missing
  std::vector<float> features_;
  std::size_t feature_dim_ = 0;
  std::size_t num_src_ = 0;
  std::size_t num_dst_ = 0;
};

struct LoadOptions {
  bool skip_header = true;
};

/// Reads the JODIE-style CSV format `src,dst,timestamp,state_label,f1..fn`.
/// Raw source and destination ids are remapped densely (ascending raw id
/// order) with destinations offset after sources.
EventLog load_events(const std::filesystem::path& path, LoadOptions options = {});

/// Half-open index range into an EventLog.
struct Split {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  friend bool operator==(const Split&, const Split&) = default;
};

struct SplitSet {
  Split train, val, test;
};

/// Boundaries at floor(N*r0) and floor(N*(r0+r1)).
SplitSet chronological_split(const EventLog& log, double train_ratio = 0.70, double val_ratio = 0.15,
                             double test_ratio = 0.15);

struct Batch {
  std::size_t begin = 0;
  std::size_t end = 0;
  double reference_time = 0.0;  // max timestamp in the slice
  std::size_t size() const { return end - begin; }
};

/// Yields consecutive disjoint slices of at most `batch_size` events.
class BatchCursor {
 public:
  BatchCursor(const EventLog& log, Split split, std::size_t batch_size);

  /// std::nullopt once the split is exhausted.
  std::optional<Batch> next_batch();
  std::size_t position() const { return pos_; }
  void seek(std::size_t pos);
  std::size_t batch_count() const;

 private:
  const EventLog* log_;
  Split split_;
  std::size_t batch_size_;
  std::size_t pos_;
};

}  // namespace tpgnn
