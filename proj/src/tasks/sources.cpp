#include "nbloom/tasks/sources.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "nbloom/error.hpp"
#include "nbloom/rng.hpp"

namespace nbloom::tasks {

Dataset synthetic_clusters(const ClusterSpec& spec, std::uint64_t seed) {
  if (spec.classes == 0 || spec.dim == 0 || spec.per_class == 0) {
    throw ConfigError("synthetic_clusters: classes, dim and per_class must be >= 1");
  }
  if (!(spec.noise >= 0.0)) throw ConfigError("synthetic_clusters: noise must be >= 0");
  Rng rng(seed);
  std::vector<std::vector<double>> centers(spec.classes, std::vector<double>(spec.dim));
  for (auto& c : centers) {
    double norm = 0.0;
    while (norm < 1e-12) {
      for (double& v : c) v = rng.normal();
      norm = std::sqrt(std::inner_product(c.begin(), c.end(), c.begin(), 0.0));
    }
    for (double& v : c) v /= norm;
  }
  std::vector<Item> items;
  std::vector<int> labels;
  for (std::size_t k = 0; k < spec.classes; ++k) {
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      std::vector<double> x = centers[k];
      for (double& v : x) v += spec.noise * rng.normal();
      items.emplace_back(std::move(x));
      labels.push_back(static_cast<int>(k));
    }
  }
  return Dataset(Modality::dense, std::move(items), std::move(labels));
}

Dataset synthetic_tokens(const TokenSpec& spec, std::uint64_t seed) {
  if (spec.count == 0) throw ConfigError("synthetic_tokens: count must be >= 1");
  if (spec.min_length == 0 || spec.min_length > spec.max_length) {
    throw ConfigError("synthetic_tokens: need 1 <= min_length <= max_length");
  }
  const double capacity = std::pow(26.0, static_cast<double>(spec.max_length));
  if (static_cast<double>(spec.count) > 0.5 * capacity) throw ConfigError("synthetic_tokens: count too large for lengths");
  Rng rng(seed);
  std::set<std::string> unique;
  while (unique.size() < spec.count) {
    const std::size_t len = spec.min_length + rng.index(spec.max_length - spec.min_length + 1);
    std::string s(len, 'a');
    for (char& c : s) c = static_cast<char>('a' + rng.index(26));
    unique.insert(std::move(s));
  }
  std::vector<Item> items(unique.begin(), unique.end());
  return Dataset(Modality::text, std::move(items));
}

namespace {

class BigEndianReader {
 public:
  BigEndianReader(std::span<const std::uint8_t> bytes, std::string what) : bytes_(bytes), what_(std::move(what)) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::size_t pos() const { return pos_; }
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw DataError(what_ + ": " + msg + " at offset " + std::to_string(at));
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("truncated", pos_);
  }
  std::span<const std::uint8_t> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace

IdxHeader parse_idx_header(std::span<const std::uint8_t> bytes) {
  BigEndianReader r(bytes, "idx");
  IdxHeader h;
  h.magic = r.u32();
  // Byte 2 is the element type (0x08 = unsigned byte), byte 3 the rank.
  if ((h.magic >> 16) != 0 || ((h.magic >> 8) & 0xff) != 0x08) r.fail("bad magic", 0);
  const std::uint32_t rank = h.magic & 0xff;
  if (rank == 0 || rank > 4) r.fail("unsupported rank " + std::to_string(rank), 3);
  for (std::uint32_t i = 0; i < rank; ++i) h.dims.push_back(r.u32());
  return h;
}

Dataset parse_idx(std::span<const std::uint8_t> images, std::optional<std::span<const std::uint8_t>> labels) {
  BigEndianReader img(images, "idx images");
  if (img.u32() != 0x00000803) img.fail("bad magic (expected 0x00000803)", 0);
  const std::uint32_t count = img.u32();
  const std::uint32_t rows = img.u32();
  const std::uint32_t cols = img.u32();
  if (count == 0 || rows == 0 || cols == 0) img.fail("zero dimension", 4);
  const std::size_t dim = static_cast<std::size_t>(rows) * cols;
  const auto pixels = img.take(static_cast<std::size_t>(count) * dim);
  if (img.pos() != images.size()) img.fail("trailing bytes", img.pos());

  std::vector<Item> items;
  items.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::vector<double> x(dim);
    for (std::size_t j = 0; j < dim; ++j) x[j] = pixels[i * dim + j] / 255.0;
    items.emplace_back(std::move(x));
  }
  std::vector<int> label_values;
  if (labels) {
    BigEndianReader lab(*labels, "idx labels");
    if (lab.u32() != 0x00000801) lab.fail("bad magic (expected 0x00000801)", 0);
    const std::uint32_t n = lab.u32();
    if (n != count) lab.fail("label count " + std::to_string(n) + " does not match image count " + std::to_string(count), 4);
    for (auto b : lab.take(n)) label_values.push_back(b);
    if (lab.pos() != labels->size()) lab.fail("trailing bytes", lab.pos());
  }
  return Dataset(Modality::dense, std::move(items), std::move(label_values));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Dataset load_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels) {
  const auto img = read_file_bytes(images);
  if (!labels) return parse_idx(img, std::nullopt);
  const auto lab = read_file_bytes(*labels);
  return parse_idx(img, std::span<const std::uint8_t>(lab));
}

TokenUniverse parse_token_universe(std::string_view text) {
  TokenUniverse out;
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      tokens.emplace_back(line);
      ++out.lines;
    }
    pos = end + 1;
  }
  if (tokens.empty()) throw DataError("token universe is empty");
  std::sort(tokens.begin(), tokens.end());
  const auto last = std::unique(tokens.begin(), tokens.end());
  out.duplicates_removed = static_cast<std::size_t>(tokens.end() - last);
  tokens.erase(last, tokens.end());
  out.data = Dataset(Modality::text, std::vector<Item>(tokens.begin(), tokens.end()));
  return out;
}

TokenUniverse load_token_universe(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return parse_token_universe(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string to_string(SourceKind k) {
  switch (k) {
    case SourceKind::synthetic_clusters: return "synthetic_clusters";
    case SourceKind::idx_images: return "idx_images";
    case SourceKind::token_file: return "token_file";
    case SourceKind::synthetic_tokens: return "synthetic_tokens";
  }
  return "?";
}

SourceKind parse_source_kind(const std::string& s) {
  if (s == "synthetic_clusters") return SourceKind::synthetic_clusters;
  if (s == "idx_images") return SourceKind::idx_images;
  if (s == "token_file") return SourceKind::token_file;
  if (s == "synthetic_tokens") return SourceKind::synthetic_tokens;
  throw ConfigError("unknown source kind '" + s + "'");
}

Dataset load_source(const DatasetSource& source, std::uint64_t seed) {
  Dataset data;
  switch (source.kind) {
    case SourceKind::synthetic_clusters: data = synthetic_clusters(source.clusters, seed); break;
    case SourceKind::synthetic_tokens: data = synthetic_tokens(source.tokens, seed); break;
    case SourceKind::idx_images:
      if (source.images_path.empty()) throw ConfigError("source.images_path is required for idx_images");
      data = load_idx(source.images_path, source.labels_path.empty()
                                              ? std::nullopt
                                              : std::optional<std::filesystem::path>(source.labels_path));
      break;
    case SourceKind::token_file:
      if (source.token_path.empty()) throw ConfigError("source.token_path is required for token_file");
      data = load_token_universe(source.token_path).data;
      break;
  }
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(splitmix64(seed ^ 0x7065726dULL));
  rng.shuffle(perm);
  data.set_permutation(std::move(perm));
  return data;
}

nlohmann::json dataset_manifest(const DatasetSource& source, const Dataset& data, std::uint64_t seed) {
  std::ostringstream checksum;
  checksum << std::hex << std::setw(16) << std::setfill('0') << data.checksum();
  nlohmann::json j{{"source", to_string(source.kind)},
                   {"seed", seed},
                   {"items", data.size()},
                   {"modality", data.modality() == Modality::text ? "text" : "dense"},
                   {"classes", data.classes().size()},
                   {"checksum", checksum.str()}};
  if (data.modality() == Modality::dense) j["dim"] = data.dim();
  return j;
}

}  // namespace nbloom::tasks
