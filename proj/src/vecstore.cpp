#include "phrasecraft/vecstore.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "phrasecraft/error.hpp"

namespace phrasecraft {

namespace {

constexpr std::array<char, 4> kBinMagic = {'P', 'V', 'B', '1'};

void put_u16(std::ostream& out, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}

void put_f32(std::ostream& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint32_t get_u32(std::istream& in, std::size_t entry) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw ParseError("pvec-bin: truncated file at entry " + std::to_string(entry));
  }
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t get_u16(std::istream& in, std::size_t entry) {
  unsigned char b[2];
  if (!in.read(reinterpret_cast<char*>(b), 2)) {
    throw ParseError("pvec-bin: truncated file at entry " + std::to_string(entry));
  }
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

bool parse_double(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool parse_size(std::string_view s, std::size_t& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

// Splits `values` on runs of spaces into exactly `dim` doubles.
void parse_row_values(std::string_view values, std::size_t dim, std::size_t line_no,
                      std::vector<double>& out) {
  out.clear();
  std::size_t pos = 0;
  while (pos < values.size()) {
    while (pos < values.size() && values[pos] == ' ') ++pos;
    if (pos >= values.size()) break;
    std::size_t end = values.find(' ', pos);
    if (end == std::string_view::npos) end = values.size();
    double v = 0.0;
    if (!parse_double(values.substr(pos, end - pos), v)) {
      throw ParseError("malformed value '" + std::string(values.substr(pos, end - pos)) + "'",
                       line_no);
    }
    if (!std::isfinite(v)) throw ParseError("non-finite value", line_no);
    out.push_back(v);
    pos = end;
  }
  if (out.size() != dim) {
    throw ParseError("expected " + std::to_string(dim) + " values, found " +
                         std::to_string(out.size()),
                     line_no);
  }
}

void add_entry(Embeddings& e, std::string surface, std::span<const double> values,
               std::size_t line_no) {
  if (!Vocab::valid_surface(surface)) throw ParseError("invalid surface form", line_no);
  if (e.vocab.contains(surface)) {
    throw ParseError("duplicate surface form '" + surface + "'", line_no);
  }
  e.vocab.add(std::move(surface));
  e.matrix.append_row(values);
}

Embeddings load_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  strip_cr(line);
  const auto sp = line.find(' ');
  std::size_t count = 0, dim = 0;
  if (sp == std::string::npos || !parse_size(std::string_view(line).substr(0, sp), count) ||
      !parse_size(std::string_view(line).substr(sp + 1), dim)) {
    throw ParseError("header must be '<count> <dim>'", 1);
  }
  if (dim == 0) throw ParseError("dim must be >= 1", 1);

  Embeddings e;
  e.matrix = Matrix(0, dim);
  std::vector<double> values;
  values.reserve(dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("missing tab separator", line_no);
    parse_row_values(std::string_view(line).substr(tab + 1), dim, line_no, values);
    add_entry(e, line.substr(0, tab), values, line_no);
  }
  if (e.size() != count) {
    throw ParseError("header declares " + std::to_string(count) + " rows, found " +
                     std::to_string(e.size()));
  }
  return e;
}

Embeddings load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), 4) || magic != kBinMagic) {
    throw ParseError("pvec-bin: bad magic (expected PVB1)");
  }
  const std::uint32_t count = get_u32(in, 0);
  const std::uint32_t dim = get_u32(in, 0);
  if (dim == 0) throw ParseError("pvec-bin: dim must be >= 1");
  Embeddings e;
  e.matrix = Matrix(0, dim);
  std::vector<double> values(dim);
  std::string surface;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint16_t len = get_u16(in, i);
    surface.assign(len, '\0');
    if (len > 0 && !in.read(surface.data(), len)) {
      throw ParseError("pvec-bin: truncated surface form at entry " + std::to_string(i));
    }
    for (std::uint32_t j = 0; j < dim; ++j) {
      const float f = std::bit_cast<float>(get_u32(in, i));
      if (!std::isfinite(f)) {
        throw ParseError("pvec-bin: non-finite value at entry " + std::to_string(i));
      }
      values[j] = static_cast<double>(f);
    }
    if (!Vocab::valid_surface(surface)) {
      throw ParseError("pvec-bin: invalid surface form at entry " + std::to_string(i));
    }
    if (e.vocab.contains(surface)) {
      throw ParseError("pvec-bin: duplicate surface form '" + surface + "' at entry " +
                       std::to_string(i));
    }
    e.vocab.add(surface);
    e.matrix.append_row(values);
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("pvec-bin: trailing bytes after " + std::to_string(count) + " entries");
  }
  return e;
}

Embeddings load_glove(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Embeddings e;
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    while (!line.empty() && line.back() == ' ') line.pop_back();
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos) throw ParseError("missing values", line_no);
    std::string_view rest = std::string_view(line).substr(sp + 1);
    if (line_no == 1 && rest.find(' ') == std::string_view::npos) {
      std::size_t a = 0, b = 0;
      if (parse_size(std::string_view(line).substr(0, sp), a) && parse_size(rest, b)) {
        continue;  // word2vec-style "count dim" header
      }
    }
    if (dim == 0) {
      dim = static_cast<std::size_t>(std::count(rest.begin(), rest.end(), ' ')) + 1;
      e.matrix = Matrix(0, dim);
    }
    parse_row_values(rest, dim, line_no, values);
    std::string surface = line.substr(0, sp);
    if (!Vocab::valid_surface(surface) || e.vocab.contains(surface)) continue;
    e.vocab.add(std::move(surface));
    e.matrix.append_row(values);
  }
  if (dim == 0) throw ParseError("no vectors found in " + path.string());
  return e;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Vocab::Vocab(std::vector<std::string> entries) {
  for (auto& s : entries) add(std::move(s));
}

bool Vocab::valid_surface(std::string_view surface) {
  return !surface.empty() && surface.find_first_of("\t\n\r") == std::string_view::npos;
}

std::size_t Vocab::add(std::string surface) {
  if (!valid_surface(surface)) {
    throw InvalidArgument("invalid surface form '" + surface + "'");
  }
  const std::size_t id = entries_.size();
  const auto [it, inserted] = index_.emplace(surface, id);
  if (!inserted) throw InvalidArgument("duplicate surface form '" + surface + "'");
  entries_.push_back(std::move(surface));
  return id;
}

std::optional<std::size_t> Vocab::find(std::string_view surface) const {
  const auto it = index_.find(std::string(surface));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::span<const double>> Embeddings::lookup(std::string_view surface) const {
  const auto id = vocab.find(surface);
  if (!id) return std::nullopt;
  return matrix.row(*id);
}

void Embeddings::validate() const {
  if (matrix.rows() != vocab.size()) {
    throw InvalidArgument("embedding matrix has " + std::to_string(matrix.rows()) +
                          " rows for a vocabulary of " + std::to_string(vocab.size()));
  }
  if (matrix.cols() == 0) throw InvalidArgument("embedding dim must be >= 1");
  if (!all_finite(matrix.flat())) throw InvalidArgument("embedding matrix has non-finite values");
}

VectorFormat parse_vector_format(std::string_view name) {
  if (name == "pvec-text" || name == "text") return VectorFormat::PvecText;
  if (name == "pvec-bin" || name == "bin" || name == "binary") return VectorFormat::PvecBin;
  if (name == "glove" || name == "word2vec-text") return VectorFormat::Glove;
  throw InvalidArgument("unknown vector format '" + std::string(name) + "'");
}

std::string_view to_string(VectorFormat format) {
  switch (format) {
    case VectorFormat::PvecText: return "pvec-text";
    case VectorFormat::PvecBin: return "pvec-bin";
    case VectorFormat::Glove: return "glove";
  }
  return "?";
}

VectorFormat detect_vector_format(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (in.gcount() == 4 && magic == kBinMagic) return VectorFormat::PvecBin;
  in.clear();
  in.seekg(0);
  std::string first;
  std::getline(in, first);
  strip_cr(first);
  const auto sp = first.find(' ');
  std::size_t a = 0, b = 0;
  if (sp != std::string::npos && parse_size(std::string_view(first).substr(0, sp), a) &&
      parse_size(std::string_view(first).substr(sp + 1), b)) {
    // A word2vec header is followed by space-separated rows, pvec-text by tabs.
    std::string second;
    if (!std::getline(in, second) || second.find('\t') != std::string::npos) {
      return VectorFormat::PvecText;
    }
  }
  return VectorFormat::Glove;
}

Embeddings load_vectors(const std::filesystem::path& path, VectorFormat format) {
  Embeddings e;
  switch (format) {
    case VectorFormat::PvecText: e = load_text(path); break;
    case VectorFormat::PvecBin: e = load_binary(path); break;
    case VectorFormat::Glove: e = load_glove(path); break;
  }
  return e;
}

Embeddings load_vectors(const std::filesystem::path& path) {
  return load_vectors(path, detect_vector_format(path));
}

void save_vectors(const Embeddings& embeddings, const std::filesystem::path& path,
                  VectorFormat format) {
  if (embeddings.matrix.rows() != embeddings.vocab.size()) {
    throw InvalidArgument("save_vectors: vocab/matrix size mismatch");
  }
  const std::size_t dim = embeddings.dim();
  if (format == VectorFormat::PvecBin) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kBinMagic.data(), 4);
    put_u32(out, static_cast<std::uint32_t>(embeddings.size()));
    put_u32(out, static_cast<std::uint32_t>(dim));
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
      const std::string& s = embeddings.vocab.at(i);
      if (s.size() > 0xffff) throw InvalidArgument("surface form longer than 65535 bytes");
      put_u16(out, static_cast<std::uint16_t>(s.size()));
      out.write(s.data(), static_cast<std::streamsize>(s.size()));
      for (double v : embeddings.matrix.row(i)) put_f32(out, static_cast<float>(v));
    }
    if (!out) throw IoError("write failed for " + path.string());
    return;
  }
  if (format == VectorFormat::Glove) {
    throw InvalidArgument("save_vectors: glove is an import-only format");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << embeddings.size() << ' ' << dim << '\n';
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    out << embeddings.vocab.at(i) << '\t';
    const auto row = embeddings.matrix.row(i);
    for (std::size_t j = 0; j < dim; ++j) {
      if (j) out << ' ';
      out << format_double(row[j]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Metric parse_metric(std::string_view name) {
  if (name == "cosine") return Metric::Cosine;
  if (name == "l2") return Metric::L2;
  throw InvalidArgument("unknown metric '" + std::string(name) + "' (expected cosine|l2)");
}

std::string_view to_string(Metric metric) { return metric == Metric::Cosine ? "cosine" : "l2"; }

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("cosine: dimension mismatch " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
  }
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double similarity(std::span<const double> a, std::span<const double> b, Metric metric) {
  return metric == Metric::Cosine ? cosine(a, b) : -l2_distance(a, b);
}

NeighborList nearest_neighbors(std::span<const double> query, const Embeddings& embeddings,
                               std::size_t k, Metric metric,
                               std::optional<std::string_view> exclude, std::string query_label) {
  if (k == 0) throw InvalidArgument("nearest_neighbors: k must be >= 1");
  if (embeddings.size() == 0) throw InvalidArgument("nearest_neighbors: empty matrix");
  if (query.size() != embeddings.dim()) {
    throw InvalidArgument("nearest_neighbors: query has dim " + std::to_string(query.size()) +
                          ", matrix has " + std::to_string(embeddings.dim()));
  }
  std::optional<std::size_t> skip;
  if (exclude) skip = embeddings.vocab.find(*exclude);

  struct Scored {
    double key;  // smaller is better
    std::size_t id;
  };
  std::vector<Scored> scored;
  scored.reserve(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (skip && *skip == i) continue;
    const auto row = embeddings.matrix.row(i);
    const double key = metric == Metric::Cosine ? -cosine(query, row) : l2_distance(query, row);
    scored.push_back({key, i});
  }
  const auto better = [](const Scored& a, const Scored& b) {
    return a.key < b.key || (a.key == b.key && a.id < b.id);
  };
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), better);

  NeighborList out;
  out.query = query_label.empty() && exclude ? std::string(*exclude) : std::move(query_label);
  out.metric = metric;
  out.hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const auto& s = scored[i];
    out.hits.push_back({embeddings.vocab.at(s.id), s.id, metric == Metric::Cosine ? -s.key : s.key});
  }
  return out;
}

}  // namespace phrasecraft
