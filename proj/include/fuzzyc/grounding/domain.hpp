#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fuzzyc/error.hpp"
#include "fuzzyc/lang/constraint_file.hpp"
#include "fuzzyc/lang/signature.hpp"
#include "fuzzyc/tensor.hpp"

namespace fuzzyc::grounding {

/// The sample of one data domain: `size()` elements stored as the rows of
/// a [count, element_size] matrix.
struct Domain {
  std::string name;
  lang::DomainShape shape;
  Tensor data;

  Domain() = default;
  Domain(std::string n, lang::DomainShape s, Tensor d) : name(std::move(n)), shape(std::move(s)), data(std::move(d)) {
    if (data.rank() != 2 || data.shape[1] != shape.size()) {
      throw Error(ErrorCode::ShapeMismatch, "domain '" + name + "' data " + shape_str(data.shape) +
                                                " does not hold elements of shape " + shape.str());
    }
  }

  std::size_t size() const { return data.shape.empty() ? 0 : data.shape[0]; }

  Tensor element(std::size_t i) const {
    if (i >= size()) throw Error(ErrorCode::UnknownElement, "element " + std::to_string(i) + " of domain '" + name + "'");
    const auto r = data.row(i);
    return Tensor({shape.size()}, std::vector<double>(r.begin(), r.end()));
  }

  /// Elements at `rows`, in that order.
  Domain subset(const std::vector<std::size_t>& rows) const {
    Tensor out = Tensor::zeros({rows.size(), shape.size()});
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const auto r = data.row(rows.at(k));
      std::copy(r.begin(), r.end(), out.data.begin() + static_cast<std::ptrdiff_t>(k * shape.size()));
    }
    return Domain(name, shape, std::move(out));
  }
};

using DomainMap = std::map<std::string, Domain>;

/// CSV with a `# count=N shape=S` header and one element per line.
inline std::string domain_to_csv(const Domain& d) {
  std::ostringstream out;
  out.precision(17);
  out << "# count=" << d.size() << " shape=" << d.shape.str() << "\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto r = d.data.row(i);
    for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << r[k];
    out << "\n";
  }
  return out.str();
}

inline Domain domain_from_csv(const std::string& name, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("#", 0) != 0) {
    throw Error(ErrorCode::ConfigError, "domain '" + name + "': missing '# count=N shape=S' header");
  }
  std::size_t count = 0;
  std::string shape_text;
  {
    std::istringstream hs(line.substr(1));
    std::string field;
    while (hs >> field) {
      if (field.rfind("count=", 0) == 0) count = std::stoul(field.substr(6));
      if (field.rfind("shape=", 0) == 0) shape_text = field.substr(6);
    }
  }
  if (shape_text.empty()) throw Error(ErrorCode::ConfigError, "domain '" + name + "': header lacks shape=");
  const auto shape = lang::detail::parse_shape(shape_text, {});
  std::vector<double> values;
  values.reserve(count * shape.size());
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ls(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(ls, cell, ',')) {
      auto v = lang::detail::parse_double(lang::detail::trim(cell));
      if (!v) throw Error(ErrorCode::ConfigError, "domain '" + name + "' row " + std::to_string(rows + 1) + ": bad number '" + cell + "'");
      values.push_back(*v);
      ++cols;
    }
    if (cols != shape.size()) {
      throw Error(ErrorCode::ShapeMismatch, "domain '" + name + "' row " + std::to_string(rows + 1) + " has " +
                                                std::to_string(cols) + " values, expected " + std::to_string(shape.size()));
    }
    ++rows;
  }
  if (rows != count) {
    throw Error(ErrorCode::ConfigError, "domain '" + name + "': header says " + std::to_string(count) + " rows, found " + std::to_string(rows));
  }
  return Domain(name, shape, Tensor({rows, shape.size()}, std::move(values)));
}

namespace detail {

inline constexpr char kDomainMagic[4] = {'F', 'Z', 'D', '1'};

template <class T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error(ErrorCode::IoError, "truncated domain file");
  return v;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

/// Binary layout (host byte order): magic "FZD1", u32 kind (0 vector,
/// 1 image), u32 rank, u64 dims[rank], u64 count, f64 values[count * size].
inline void save_domain_binary(const std::string& path, const Domain& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out.write(detail::kDomainMagic, 4);
  detail::write_pod<std::uint32_t>(out, d.shape.is_image() ? 1 : 0);
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(d.shape.dims.size()));
  for (auto s : d.shape.dims) detail::write_pod<std::uint64_t>(out, s);
  detail::write_pod<std::uint64_t>(out, d.size());
  out.write(reinterpret_cast<const char*>(d.data.data.data()), static_cast<std::streamsize>(d.data.size() * sizeof(double)));
}

inline Domain load_domain_binary(const std::string& name, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, detail::kDomainMagic, 4) != 0) throw Error(ErrorCode::ConfigError, "'" + path + "' is not a domain file");
  const auto kind = detail::read_pod<std::uint32_t>(in);
  const auto rank = detail::read_pod<std::uint32_t>(in);
  if (rank == 0 || rank > 3) throw Error(ErrorCode::ConfigError, "bad rank in '" + path + "'");
  lang::DomainShape shape;
  shape.kind = kind == 1 ? lang::DomainShape::Kind::Image : lang::DomainShape::Kind::Vector;
  for (std::uint32_t k = 0; k < rank; ++k) shape.dims.push_back(detail::read_pod<std::uint64_t>(in));
  const auto count = detail::read_pod<std::uint64_t>(in);
  std::vector<double> values(count * shape.size());
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw Error(ErrorCode::IoError, "truncated domain file '" + path + "'");
  return Domain(name, shape, Tensor({count, shape.size()}, std::move(values)));
}

/// Loads `.csv` as text, anything else as the binary format.
inline Domain load_domain(const std::string& name, const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") return domain_from_csv(name, detail::read_file(path));
  return load_domain_binary(name, path);
}

/// Images and labels in the big-endian IDX format of the classic
/// handwritten-digit files, keeping only the listed labels. Pixels are
/// scaled to [0,1].
struct LabeledImages {
  Domain domain;
  std::vector<int> labels;
};

inline LabeledImages load_idx(const std::string& name, const std::string& images_path, const std::string& labels_path,
                              const std::vector<int>& keep) {
  auto be32 = [](const std::string& buf, std::size_t off) {
    if (off + 4 > buf.size()) throw Error(ErrorCode::IoError, "truncated IDX header");
    return (std::uint32_t(std::uint8_t(buf[off])) << 24) | (std::uint32_t(std::uint8_t(buf[off + 1])) << 16) |
           (std::uint32_t(std::uint8_t(buf[off + 2])) << 8) | std::uint32_t(std::uint8_t(buf[off + 3]));
  };
  const auto images = detail::read_file(images_path);
  const auto labels = detail::read_file(labels_path);
  if (be32(images, 0) != 0x00000803 || be32(labels, 0) != 0x00000801) throw Error(ErrorCode::ConfigError, "not IDX image/label files");
  const std::size_t n = be32(images, 4), h = be32(images, 8), w = be32(images, 12);
  if (be32(labels, 4) != n) throw Error(ErrorCode::ConfigError, "IDX image and label counts differ");
  if (images.size() < 16 + n * h * w || labels.size() < 8 + n) throw Error(ErrorCode::IoError, "truncated IDX data");
  std::vector<double> values;
  LabeledImages out;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<unsigned char>(labels[8 + i]);
    if (std::find(keep.begin(), keep.end(), label) == keep.end()) continue;
    for (std::size_t p = 0; p < h * w; ++p) values.push_back(static_cast<unsigned char>(images[16 + i * h * w + p]) / 255.0);
    out.labels.push_back(label);
    ++kept;
  }
  out.domain = Domain(name, lang::DomainShape::image(h, w, 1), Tensor({kept, h * w}, std::move(values)));
  return out;
}

}  // namespace fuzzyc::grounding
