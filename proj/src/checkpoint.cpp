#include "tpgnn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "tpgnn/errors.hpp"

namespace tpgnn {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

constexpr std::array<char, 8> kMagic{'T', 'P', 'G', 'N', 'N', 'C', 'K', 'P'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
  void pod(const T& v) {
    static_assert(std::is_trivially_copyable_v<T>);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void u64(std::uint64_t v) { pod(v); }
  void f64(double v) { pod(v); }
  void doubles(const std::vector<double>& v) {
    u64(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  void string(const std::string& s) {
    u64(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void tensor(const Tensor& t) {
    u64(t.rows());
    u64(t.cols());
    doubles(t.storage());
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
  T pod() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw FormatError("checkpoint truncated");
    return v;
  }
  std::uint64_t u64() { return pod<std::uint64_t>(); }
  double f64() { return pod<double>(); }
  std::uint64_t length(std::uint64_t limit = (1ULL << 34)) {
    const auto n = u64();
    if (n > limit) throw FormatError("checkpoint length field out of range");
    return n;
  }
  std::vector<double> doubles() {
    std::vector<double> v(length());
    in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
    if (!in_) throw FormatError("checkpoint truncated");
    return v;
  }
  std::string string() {
    std::string s(length(1 << 20), '\0');
    in_.read(s.data(), static_cast<std::streamsize>(s.size()));
    if (!in_) throw FormatError("checkpoint truncated");
    return s;
  }
  Tensor tensor() {
    const auto rows = u64();
    const auto cols = u64();
    auto data = doubles();
    if (data.size() != rows * cols) throw FormatError("checkpoint tensor shape does not match its data");
    return Tensor(rows, cols, std::move(data));
  }

 private:
  std::istream& in_;
};

void write_dims(Writer& w, const ModelDims& d) {
  w.u64(d.dim);
  w.u64(d.edge_dim);
  w.pod<std::int32_t>(d.layers);
  w.pod<std::int32_t>(d.heads);
  w.pod<std::int32_t>(d.transformer_layers);
  w.u64(d.bias_hidden);
  w.u64(d.ffn_dim);
  w.u64(d.decoder_hidden);
  w.u64(d.classes);
  w.f64(d.dropout);
  w.pod<std::uint8_t>(d.layer_attention ? 1 : 0);
}

ModelDims read_dims(Reader& r) {
  ModelDims d;
  d.dim = r.u64();
  d.edge_dim = r.u64();
  d.layers = r.pod<std::int32_t>();
  d.heads = r.pod<std::int32_t>();
  d.transformer_layers = r.pod<std::int32_t>();
  d.bias_hidden = r.u64();
  d.ffn_dim = r.u64();
  d.decoder_hidden = r.u64();
  d.classes = r.u64();
  d.dropout = r.f64();
  d.layer_attention = r.pod<std::uint8_t>() != 0;
  d.validate();
  return d;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  Writer w(out);
  out.write(kMagic.data(), kMagic.size());
  w.pod<std::uint32_t>(kCheckpointVersion);
  write_dims(w, ckpt.dims);

  w.u64(ckpt.params.size());
  for (ParamId i = 0; i < ckpt.params.size(); ++i) {
    w.string(ckpt.params.name(i));
    w.tensor(ckpt.params[i]);
  }

  const AdamState& a = ckpt.adam;
  w.f64(a.lr);
  w.f64(a.beta1);
  w.f64(a.beta2);
  w.f64(a.eps);
  w.u64(a.step);
  w.u64(a.first_moment.size());
  for (std::size_t i = 0; i < a.first_moment.size(); ++i) {
    w.tensor(a.first_moment[i]);
    w.tensor(a.second_moment[i]);
  }

  const MemoryStore& mem = ckpt.state.memory;
  w.u64(mem.num_nodes());
  w.pod<std::int32_t>(mem.layers());
  w.u64(mem.dim());
  w.u64(mem.message_dim());
  for (NodeId n = 0; n < mem.num_nodes(); ++n) {
    const bool init = mem.initialized(n);
    w.pod<std::uint8_t>(init ? 1 : 0);
    if (!init) continue;
    const NodeState& s = mem.state(n);
    w.doubles(s.prev_repr);
    for (const auto& m : s.memories) w.doubles(m);
    w.doubles(s.last_update);
    for (const auto& slot : s.mailboxes) {
      w.doubles(slot.mean);
      w.u64(slot.count);
      w.f64(slot.latest_t);
    }
  }

  const NeighborIndex& idx = ckpt.state.index;
  w.u64(idx.num_nodes());
  w.u64(idx.edge_count());
  for (NodeId n = 0; n < idx.num_nodes(); ++n) {
    const auto& list = idx.history(n);
    w.u64(list.size());
    for (const auto& e : list) {
      w.pod<std::uint32_t>(e.neighbor);
      w.f64(e.t);
      w.u64(e.event_id);
    }
  }

  w.u64(ckpt.cursor);
  w.pod<std::int32_t>(ckpt.epoch);
  if (!out) throw std::runtime_error("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("not a checkpoint file (bad magic)");
  Reader r(in);
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint c;
  c.dims = read_dims(r);

  const auto nparams = r.length(1 << 20);
  for (std::uint64_t i = 0; i < nparams; ++i) {
    std::string name = r.string();
    c.params.add(std::move(name), r.tensor());
  }

  c.adam.lr = r.f64();
  c.adam.beta1 = r.f64();
  c.adam.beta2 = r.f64();
  c.adam.eps = r.f64();
  c.adam.step = r.u64();
  const auto nmoments = r.length(1 << 20);
  for (std::uint64_t i = 0; i < nmoments; ++i) {
    c.adam.first_moment.push_back(r.tensor());
    c.adam.second_moment.push_back(r.tensor());
  }

  const auto nodes = r.length();
  const int layers = r.pod<std::int32_t>();
  const auto dim = r.u64();
  const auto msg_dim = r.u64();
  c.state.memory = MemoryStore(nodes, layers, dim, msg_dim);
  for (NodeId n = 0; n < nodes; ++n) {
    if (r.pod<std::uint8_t>() == 0) continue;
    NodeState s;
    s.prev_repr = r.doubles();
    for (int l = 0; l < layers; ++l) s.memories.push_back(r.doubles());
    s.last_update = r.doubles();
    for (int l = 0; l < layers; ++l) {
      MailboxSlot slot;
      slot.mean = r.doubles();
      slot.count = r.u64();
      slot.latest_t = r.f64();
      s.mailboxes.push_back(std::move(slot));
    }
    c.state.memory.restore_node(n, std::move(s));
  }

  const auto index_nodes = r.length();
  const auto edges = r.u64();
  std::vector<std::vector<NeighborEntry>> lists(index_nodes);
  for (auto& list : lists) {
    list.resize(r.length());
    for (auto& e : list) {
      e.neighbor = r.pod<std::uint32_t>();
      e.t = r.f64();
      e.event_id = r.u64();
    }
  }
  c.state.index = NeighborIndex::from_lists(std::move(lists), edges);

  c.cursor = r.u64();
  c.epoch = r.pod<std::int32_t>();
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace tpgnn
