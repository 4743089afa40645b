#include "tpgnn/events.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "tpgnn/errors.hpp"

namespace tpgnn {

EventLog::EventLog(std::vector<Event> events, std::size_t num_src, std::size_t num_dst)
    : num_src_(num_src), num_dst_(num_dst) {
  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!std::isfinite(events[i].t)) throw FormatError("event " + std::to_string(i) + " has a non-finite timestamp");
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return events[a].t < events[b].t; });
  feature_dim_ = events.empty() ? 0 : events.front().features.size();
  src_.reserve(events.size());
  dst_.reserve(events.size());
  t_.reserve(events.size());
  label_.reserve(events.size());
  features_.reserve(events.size() * feature_dim_);
  for (std::size_t i : order) {
    const Event& e = events[i];
    if (e.features.size() != feature_dim_) {
      throw FormatError("event " + std::to_string(i) + " has " + std::to_string(e.features.size()) +
                        " features, expected " + std::to_string(feature_dim_));
    }
    if (e.src >= num_nodes() || e.dst >= num_nodes()) {
      throw FormatError("event " + std::to_string(i) + " references a node outside the universe");
    }
    src_.push_back(e.src);
    dst_.push_back(e.dst);
    t_.push_back(e.t);
    label_.push_back(e.label ? static_cast<std::int8_t>(*e.label) : std::int8_t{-1});
    for (double f : e.features) features_.push_back(static_cast<float>(f));
  }
}

std::optional<int> EventLog::label(std::size_t i) const {
  if (label_[i] < 0) return std::nullopt;
  return label_[i];
}

Event EventLog::event(std::size_t i) const {
  Event e;
  e.src = src_[i];
  e.dst = dst_[i];
  e.t = t_[i];
  const auto f = features(i);
  e.features.assign(f.begin(), f.end());
  e.label = label(i);
  return e;
}

void EventLog::overwrite(std::size_t i, NodeId src, NodeId dst, std::span<const double> features) {
  if (features.size() != feature_dim_) throw ConfigError("overwrite: feature length mismatch");
  src_[i] = src;
  dst_[i] = dst;
  for (std::size_t c = 0; c < feature_dim_; ++c) features_[i * feature_dim_ + c] = static_cast<float>(features[c]);
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line_no, const char* what) {
  field = trim(field);
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw FormatError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" + std::string(field) + "'");
  }
  return value;
}

struct RawEvent {
  std::int64_t src, dst;
  double t;
  std::optional<int> label;
  std::vector<double> features;
};

}  // namespace

EventLog load_events(const std::filesystem::path& path, LoadOptions options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  if (options.skip_header) {
    if (!std::getline(in, line)) throw FormatError("empty file: " + path.string());
    ++line_no;
    if (split_csv(trim(line)).size() < 4) {
      throw FormatError("line 1: header must name at least src,dst,timestamp,state_label");
    }
  }
  std::vector<RawEvent> raw;
  std::optional<std::size_t> feature_dim;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const auto fields = split_csv(text);
    if (fields.size() < 4) {
      throw FormatError("line " + std::to_string(line_no) + ": expected at least 4 fields, got " +
                        std::to_string(fields.size()));
    }
    const std::size_t nf = fields.size() - 4;
    if (!feature_dim) feature_dim = nf;
    if (nf != *feature_dim) {
      throw FormatError("line " + std::to_string(line_no) + ": ragged feature row (" + std::to_string(nf) +
                        " features, expected " + std::to_string(*feature_dim) + ")");
    }
    RawEvent e;
    e.src = parse_number<std::int64_t>(fields[0], line_no, "source id");
    e.dst = parse_number<std::int64_t>(fields[1], line_no, "destination id");
    e.t = parse_number<double>(fields[2], line_no, "timestamp");
    if (e.src < 0 || e.dst < 0) throw FormatError("line " + std::to_string(line_no) + ": negative node id");
    if (!std::isfinite(e.t) || e.t < 0) {
      throw FormatError("line " + std::to_string(line_no) + ": timestamp must be finite and nonnegative");
    }
    const std::string_view lab = trim(fields[3]);
    if (!lab.empty()) {
      const double v = parse_number<double>(lab, line_no, "state label");
      if (v != 0.0 && v != 1.0) throw FormatError("line " + std::to_string(line_no) + ": state label must be 0 or 1");
      e.label = static_cast<int>(v);
    }
    e.features.reserve(nf);
    for (std::size_t c = 0; c < nf; ++c) e.features.push_back(parse_number<double>(fields[4 + c], line_no, "feature"));
    raw.push_back(std::move(e));
  }

  std::map<std::int64_t, NodeId> src_ids, dst_ids;
  for (const auto& e : raw) {
    src_ids.emplace(e.src, 0);
    dst_ids.emplace(e.dst, 0);
  }
  NodeId next = 0;
  for (auto& [_, id] : src_ids) id = next++;
  for (auto& [_, id] : dst_ids) id = next++;

  std::vector<Event> events;
  events.reserve(raw.size());
  for (auto& r : raw) {
    events.push_back(Event{src_ids.at(r.src), dst_ids.at(r.dst), r.t, std::move(r.features), r.label});
  }
  return EventLog(std::move(events), src_ids.size(), dst_ids.size());
}

SplitSet chronological_split(const EventLog& log, double train_ratio, double val_ratio, double test_ratio) {
  if (log.empty()) throw UsageError("chronological_split: empty log");
  if (train_ratio < 0 || val_ratio < 0 || test_ratio < 0 ||
      std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9) {
    throw UsageError("chronological_split: ratios must be nonnegative and sum to 1");
  }
  const auto n = static_cast<long double>(log.size());
  // 0.7 is not representable, so 100 * 0.7 lands just under 70; a relative
  // nudge keeps exact products on the right side of the floor.
  auto boundary = [n](double ratio) {
    return static_cast<std::size_t>(std::floor(n * static_cast<long double>(ratio) * (1.0L + 1e-12L)));
  };
  const std::size_t a = boundary(train_ratio);
  const std::size_t b = std::min(boundary(train_ratio + val_ratio), log.size());
  return SplitSet{{0, a}, {a, b}, {b, log.size()}};
}

BatchCursor::BatchCursor(const EventLog& log, Split split, std::size_t batch_size)
    : log_(&log), split_(split), batch_size_(batch_size), pos_(split.begin) {
  if (batch_size == 0) throw UsageError("batch size must be at least 1");
  if (split.end > log.size() || split.begin > split.end) throw UsageError("split outside the log");
}

std::optional<Batch> BatchCursor::next_batch() {
  if (pos_ >= split_.end) return std::nullopt;
  Batch b;
  b.begin = pos_;
  b.end = std::min(pos_ + batch_size_, split_.end);
  b.reference_time = log_->time(b.end - 1);
  pos_ = b.end;
  return b;
}

void BatchCursor::seek(std::size_t pos) {
  if (pos < split_.begin || pos > split_.end) throw UsageError("seek outside the split");
  pos_ = pos;
}

std::size_t BatchCursor::batch_count() const { return (split_.size() + batch_size_ - 1) / batch_size_; }

}  // namespace tpgnn
