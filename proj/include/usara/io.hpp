#pragma once

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "usara/coverage.hpp"

namespace usara {
namespace io {

inline constexpr char kImageMagic[17] = "USARA-IMAGE-0001";  // 16 bytes on disk

namespace detail {

inline std::uint64_t to_le(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::little) return x;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r = (r << 8) | ((x >> (8 * i)) & 0xff);
  return r;
}

inline void put_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  bits = to_le(bits);
  os.write(reinterpret_cast<const char*>(&bits), 8);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  v = to_le(v);
  os.write(reinterpret_cast<const char*>(&v), 8);
}
inline void put_u32(std::ostream& os, std::uint32_t v) {
  std::uint64_t le = to_le(v);  // low 4 bytes of the LE representation
  os.write(reinterpret_cast<const char*>(&le), 4);
}

inline double get_f64(std::istream& is, std::uint64_t& offset, const char* what) {
  std::uint64_t bits;
  if (!is.read(reinterpret_cast<char*>(&bits), 8))
    throw IoError(std::string("truncated payload reading ") + what, offset);
  offset += 8;
  bits = to_le(bits);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}
inline std::uint64_t get_u64(std::istream& is, std::uint64_t& offset, const char* what) {
  std::uint64_t v;
  if (!is.read(reinterpret_cast<char*>(&v), 8))
    throw IoError(std::string("truncated payload reading ") + what, offset);
  offset += 8;
  return to_le(v);
}
inline std::uint32_t get_u32(std::istream& is, std::uint64_t& offset, const char* what) {
  std::uint32_t raw;
  if (!is.read(reinterpret_cast<char*>(&raw), 4))
    throw IoError(std::string("truncated payload reading ") + what, offset);
  offset += 4;
  std::uint64_t wide = raw;
  if constexpr (std::endian::native != std::endian::little) {
    wide = ((wide & 0xff) << 24) | ((wide & 0xff00) << 8) | ((wide >> 8) & 0xff00) |
           ((wide >> 24) & 0xff);
  }
  return std::uint32_t(wide);
}

inline std::string read_json_line(std::istream& is, std::uint64_t& offset) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("missing JSON header line", offset);
  offset += line.size() + 1;
  return line;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open file for writing: " + path.string(), 0);
  return os;
}
inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open file for reading: " + path.string(), 0);
  return is;
}

}  // namespace detail

// Image file: 16-byte magic+version, one JSON header line
// {"width":W,"height":H,"dtype":"f64le"}, then W*H little-endian doubles,
// row-major.
inline void save_image(const std::filesystem::path& path, const Image& img) {
  auto os = detail::open_out(path);
  os.write(kImageMagic, 16);
  char header[96];
  std::snprintf(header, sizeof(header), "{\"width\":%d,\"height\":%d,\"dtype\":\"f64le\"}\n",
                img.width, img.height);
  os << header;
  for (Eigen::Index i = 0; i < img.size(); ++i) detail::put_f64(os, img.v[i]);
  if (!os) throw IoError("write failed: " + path.string(), 0);
}

inline Image load_image(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  std::uint64_t offset = 0;
  char magic[16];
  if (!is.read(magic, 16)) throw IoError("file too short for magic", offset);
  if (std::memcmp(magic, kImageMagic, 16) != 0) throw IoError("bad image magic", 0);
  offset = 16;
  const std::uint64_t header_at = offset;
  const std::string line = detail::read_json_line(is, offset);
  int w = 0, h = 0;
  try {
    auto j = nlohmann::json::parse(line);
    w = j.at("width").get<int>();
    h = j.at("height").get<int>();
    if (j.at("dtype").get<std::string>() != "f64le")
      throw IoError("unsupported dtype", header_at);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed image header: ") + e.what(), header_at);
  }
  if (w <= 0 || h <= 0) throw IoError("invalid image dimensions in header", header_at);
  Image img(w, h);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.v[i] = detail::get_f64(is, offset, "pixel");
  // header/payload consistency: exactly w*h doubles then EOF
  char extra;
  if (is.read(&extra, 1))
    throw IoError("payload longer than width*height declared in header", offset);
  img.nonneg = (img.v >= 0.0).all();
  return img;
}

// Coefficient/debug vectors reuse the image container with height 1.
inline void save_vector(const std::filesystem::path& path, const Eigen::ArrayXd& v) {
  save_image(path, Image(int(v.size()), 1, v));
}
inline Eigen::ArrayXd load_vector(const std::filesystem::path& path) {
  return load_image(path).v;
}

// Visibility file: one JSON header line {"m":...,"tracks":T,"baselines":[...]}
// followed by m binary records (u f64, v f64, re f64, im f64, track u32),
// little-endian. The per-track baseline lengths ride along in the header so a
// loaded coverage supports baseline-ordered selection.
inline void save_visibilities(const std::filesystem::path& path, const VisibilitySet& vis) {
  require(vis.coverage != nullptr, "save_visibilities: missing coverage");
  const UVCoverage& cov = *vis.coverage;
  require(std::size_t(vis.values.size()) == cov.size(),
          "save_visibilities: values/coverage size mismatch");
  auto os = detail::open_out(path);
  nlohmann::json j;
  j["m"] = cov.size();
  j["tracks"] = cov.baseline_m.size();
  j["baselines"] = cov.baseline_m;
  os << j.dump() << "\n";
  for (std::size_t i = 0; i < cov.size(); ++i) {
    detail::put_f64(os, cov.u[i]);
    detail::put_f64(os, cov.v[i]);
    detail::put_f64(os, vis.values[Eigen::Index(i)].real());
    detail::put_f64(os, vis.values[Eigen::Index(i)].imag());
    detail::put_u32(os, cov.track[i]);
  }
  if (!os) throw IoError("write failed: " + path.string(), 0);
}

inline VisibilitySet load_visibilities(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  std::uint64_t offset = 0;
  const std::string line = detail::read_json_line(is, offset);
  std::uint64_t m = 0, tracks = 0;
  auto cov = std::make_shared<UVCoverage>();
  try {
    auto j = nlohmann::json::parse(line);
    m = j.at("m").get<std::uint64_t>();
    tracks = j.at("tracks").get<std::uint64_t>();
    if (j.contains("baselines")) cov->baseline_m = j.at("baselines").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed visibility header: ") + e.what(), 0);
  }
  if (cov->baseline_m.empty()) cov->baseline_m.assign(tracks, 0.0);
  if (cov->baseline_m.size() != tracks)
    throw IoError("visibility header: baselines length != tracks", 0);
  VisibilitySet out;
  out.values.resize(Eigen::Index(m));
  cov->u.resize(m);
  cov->v.resize(m);
  cov->track.resize(m);
  for (std::uint64_t i = 0; i < m; ++i) {
    cov->u[i] = detail::get_f64(is, offset, "u");
    cov->v[i] = detail::get_f64(is, offset, "v");
    const double re = detail::get_f64(is, offset, "re");
    const double im = detail::get_f64(is, offset, "im");
    const std::uint32_t t = detail::get_u32(is, offset, "track");
    if (t >= tracks) throw IoError("track id out of range", offset - 4);
    out.values[Eigen::Index(i)] = {re, im};
    cov->track[i] = t;
  }
  out.coverage = std::move(cov);
  return out;
}

// Antenna positions: CSV "east,north,up" in meters, one antenna per line.
// Blank lines and lines starting with '#' are skipped.
inline void save_antennas(const std::filesystem::path& path, const AntennaArray& a) {
  auto os = detail::open_out(path);
  os << "# east_m,north_m,up_m\n";
  char buf[128];
  for (const auto& p : a.positions) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", p.x(), p.y(), p.z());
    os << buf;
  }
}

inline AntennaArray load_antennas(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  AntennaArray a;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(is, line)) {
    const std::uint64_t line_at = offset;
    offset += line.size() + 1;
    if (line.empty() || line[0] == '#') continue;
    double e, n, u;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &e, &n, &u) != 3)
      throw IoError("malformed antenna line: " + line, line_at);
    a.positions.emplace_back(e, n, u);
  }
  a.validate();
  return a;
}

// Selector export: one JSON header line {"count":K}, then K little-endian u64
// indices in ascending order.
inline void save_selector(const std::filesystem::path& path,
                          const std::vector<std::uint64_t>& indices) {
  auto os = detail::open_out(path);
  os << "{\"count\":" << indices.size() << "}\n";
  for (auto i : indices) detail::put_u64(os, i);
}

inline std::vector<std::uint64_t> load_selector(const std::filesystem::path& path) {
  auto is = detail::open_in(path);
  std::uint64_t offset = 0;
  const std::string line = detail::read_json_line(is, offset);
  std::uint64_t count = 0;
  try {
    count = nlohmann::json::parse(line).at("count").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed selector header: ") + e.what(), 0);
  }
  std::vector<std::uint64_t> out(count);
  for (auto& i : out) i = detail::get_u64(is, offset, "index");
  return out;
}

// Sparse matrix debug dump, coordinate text format: "row col re im" per line.
inline void save_sparse_coo(const std::filesystem::path& path, const SparseInterp& G) {
  auto os = detail::open_out(path);
  char buf[160];
  for (int r = 0; r < G.outerSize(); ++r)
    for (SparseInterp::InnerIterator it(G, r); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%lld %lld %.17g %.17g\n", (long long)it.row(),
                    (long long)it.col(), it.value().real(), it.value().imag());
      os << buf;
    }
}

inline SparseInterp load_sparse_coo(const std::filesystem::path& path, Eigen::Index rows,
                                    Eigen::Index cols) {
  auto is = detail::open_in(path);
  std::vector<Eigen::Triplet<std::complex<double>>> trips;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(is, line)) {
    const std::uint64_t line_at = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    long long r, c;
    double re, im;
    if (std::sscanf(line.c_str(), "%lld %lld %lf %lf", &r, &c, &re, &im) != 4)
      throw IoError("malformed sparse entry: " + line, line_at);
    if (r < 0 || r >= rows || c < 0 || c >= cols)
      throw IoError("sparse entry out of bounds: " + line, line_at);
    trips.emplace_back(Eigen::Index(r), Eigen::Index(c), std::complex<double>(re, im));
  }
  SparseInterp G(rows, cols);
  G.setFromTriplets(trips.begin(), trips.end());
  G.makeCompressed();
  return G;
}

// 16-bit PGM export for quick viewing, log-scaled: pixels are
// round(65535 * min(1, log10(1e3 * x/peak + 1)/3)) with x clamped to >= 0.
inline void save_pgm16_log(const std::filesystem::path& path, const Image& img) {
  auto os = detail::open_out(path);
  os << "P5\n" << img.width << " " << img.height << "\n65535\n";
  const double peak = std::max(img.v.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const double t = peak > 0.0 ? std::max(img.v[i], 0.0) / peak : 0.0;
    const double r = std::min(1.0, std::log10(1e3 * t + 1.0) / 3.0);
    const auto p = std::uint16_t(std::lround(r * 65535.0));
    const unsigned char hi = (unsigned char)(p >> 8), lo = (unsigned char)(p & 0xff);
    os.put(char(hi)).put(char(lo));  // PGM 16-bit is big-endian
  }
}

}  // namespace io
}  // namespace usara
