#include "nbloom/diff/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "nbloom/error.hpp"

namespace nbloom::diff {

namespace {

constexpr char kMagic[4] = {'N', 'B', 'F', '1'};

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t offset() const { return pos_; }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }

  double f64() { return std::bit_cast<double>(u64()); }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw DataError("checkpoint truncated at offset " + std::to_string(pos_));
    }
  }

  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

const Array& ParamStore::get(const std::string& name) const {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw Error("parameter not found: " + name);
  return it->second;
}

Array& ParamStore::get(const std::string& name) {
  auto it = arrays_.find(name);
  if (it == arrays_.end()) throw Error("parameter not found: " + name);
  return it->second;
}

std::size_t ParamStore::trainable_count() const {
  std::size_t n = 0;
  for (const auto& [name, a] : arrays_) {
    if (is_trainable_name(name)) n += a.size();
  }
  return n;
}

std::size_t ParamStore::total_count() const {
  std::size_t n = 0;
  for (const auto& [name, a] : arrays_) n += a.size();
  return n;
}

std::vector<std::uint8_t> ParamStore::serialize() const {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  for (const auto& [name, a] : arrays_) {
    put_u64(out, name.size());
    out.insert(out.end(), name.begin(), name.end());
    put_u64(out, a.rank());
    for (auto d : a.shape()) put_u64(out, d);
    for (double v : a.values()) put_f64(out, v);
  }
  return out;
}

ParamStore ParamStore::deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DataError("checkpoint: bad magic at offset 0 (expected NBF1)");
  }
  std::vector<std::uint8_t> body(bytes.begin() + 4, bytes.end());
  Reader r(body);
  ParamStore store;
  while (!r.done()) {
    const std::size_t record_at = r.offset() + 4;
    const auto name_len = r.u64();
    if (name_len > (1u << 20)) {
      throw DataError("checkpoint: implausible name length at offset " + std::to_string(record_at));
    }
    std::string name = r.str(name_len);
    const auto rank = r.u64();
    if (rank > 8) throw DataError("checkpoint: rank " + std::to_string(rank) + " too large for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    const std::size_t n = shape_size(shape);
    std::vector<double> values(n);
    for (auto& v : values) v = r.f64();
    try {
      store.set(name, Array(shape, std::move(values)));
    } catch (const Error& e) {
      throw DataError("checkpoint: record '" + name + "': " + e.what());
    }
  }
  return store;
}

void ParamStore::save(const std::filesystem::path& path) const {
  const auto bytes = serialize();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open checkpoint for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing checkpoint: " + path.string());
}

ParamStore ParamStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("checkpoint not found: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

Bindings::Bindings(Tape& tape, const ParamStore& params) : tape_(&tape), params_(&params) {
  for (const auto& [name, a] : params.arrays()) {
    vars_.emplace(name, ParamStore::is_trainable_name(name) ? tape.variable(a, name)
                                                             : tape.constant(a, name));
  }
}

Var Bindings::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw Error("parameter not bound: " + name);
  return it->second;
}

Gradients Bindings::gradients() const {
  Gradients g;
  for (const auto& [name, v] : vars_) {
    if (!ParamStore::is_trainable_name(name)) continue;
    if (tape_->has_grad(v.id())) g.emplace(name, tape_->grad(v.id()));
    else g.emplace(name, Array(params_->get(name).shape(), 0.0));
  }
  return g;
}

void accumulate(Gradients& into, const Gradients& g, double scale) {
  for (const auto& [name, a] : g) {
    auto it = into.find(name);
    if (it == into.end()) {
      Array scaled = a;
      for (double& v : scaled.values()) v *= scale;
      into.emplace(name, std::move(scaled));
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) it->second[i] += scale * a[i];
    }
  }
}

double global_norm(const Gradients& g) {
  double s = 0.0;
  for (const auto& [name, a] : g) {
    for (double v : a.values()) s += v * v;
  }
  return std::sqrt(s);
}

double clip_global_norm(Gradients& g, double max_norm) {
  const double norm = global_norm(g);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (auto& [name, a] : g) {
      for (double& v : a.values()) v *= scale;
    }
  }
  return norm;
}

}  // namespace nbloom::diff
