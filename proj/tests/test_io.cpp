#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "usara/io.hpp"

using namespace usara;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("usara_io_test_" + std::to_string(Catch::rngSeed()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Image random_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Image x(w, h);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.v[i] = g(rng);
  return x;
}

}  // namespace

TEST_CASE("image file round trip is bit exact") {
  TempDir tmp;
  Image x = random_image(7, 5, 3);
  x.v[0] = -0.0;
  x.v[1] = 1e-308;  // subnormal-adjacent values survive
  const auto p = tmp.path / "img.bin";
  io::save_image(p, x);
  Image y = io::load_image(p);
  REQUIRE(y.width == 7);
  REQUIRE(y.height == 5);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    std::uint64_t a, b;
    std::memcpy(&a, &x.v[i], 8);
    std::memcpy(&b, &y.v[i], 8);
    REQUIRE(a == b);
  }
}

TEST_CASE("image loader reports structured errors with byte offsets") {
  TempDir tmp;
  const auto p = tmp.path / "img.bin";
  Image x = random_image(4, 4, 9);
  io::save_image(p, x);

  SECTION("bad magic") {
    auto data = [&] {
      std::ifstream is(p, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(is), {});
    }();
    data[0] = 'X';
    std::ofstream(p, std::ios::binary) << data;
    try {
      io::load_image(p);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      REQUIRE(e.byte_offset == 0);
    }
  }

  SECTION("truncated payload") {
    auto size = fs::file_size(p);
    fs::resize_file(p, size - 11);
    try {
      io::load_image(p);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      REQUIRE(e.byte_offset > 16);
      REQUIRE_THAT(e.what(), Catch::Matchers::ContainsSubstring("truncated"));
    }
  }

  SECTION("payload longer than header dims") {
    std::ofstream os(p, std::ios::binary | std::ios::app);
    os.put('\0');
    os.close();
    REQUIRE_THROWS_AS(io::load_image(p), IoError);
  }

  SECTION("malformed json header") {
    std::ofstream os(p, std::ios::binary);
    os.write(io::kImageMagic, 16);
    os << "{\"width\":4,\"height\"\n";
    os.close();
    try {
      io::load_image(p);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      REQUIRE(e.byte_offset == 16);
    }
  }
}

TEST_CASE("visibility file round trip preserves tracks and payload") {
  TempDir tmp;
  Rng rng(5);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  auto cov = std::make_shared<UVCoverage>();
  const std::size_t m = 137;
  for (std::size_t i = 0; i < m; ++i) {
    cov->u.push_back(unif(rng));
    cov->v.push_back(unif(rng));
    cov->track.push_back(std::uint32_t((i * 7) % 5));
  }
  cov->baseline_m = {11.5, 3.25, 99.0, 42.0, 7.0};
  VisibilitySet vis;
  vis.coverage = cov;
  vis.values.resize(Eigen::Index(m));
  for (Eigen::Index i = 0; i < vis.values.size(); ++i) vis.values[i] = {unif(rng), unif(rng)};

  const auto p = tmp.path / "vis.bin";
  io::save_visibilities(p, vis);
  VisibilitySet back = io::load_visibilities(p);
  REQUIRE(back.size() == Eigen::Index(m));
  REQUIRE(back.coverage->track == cov->track);
  REQUIRE(back.coverage->baseline_m == cov->baseline_m);
  REQUIRE((back.values - vis.values).norm() == 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    REQUIRE(back.coverage->u[i] == cov->u[i]);
    REQUIRE(back.coverage->v[i] == cov->v[i]);
  }

  SECTION("truncation is detected with an offset") {
    fs::resize_file(p, fs::file_size(p) - 2);
    REQUIRE_THROWS_AS(io::load_visibilities(p), IoError);
  }
}

TEST_CASE("antenna csv round trip") {
  TempDir tmp;
  AntennaArray a;
  a.positions = {{1.5, -2.25, 0.125}, {100.0, 200.0, 3.0}, {-7.0, 8.0, 9.0}};
  const auto p = tmp.path / "ant.csv";
  io::save_antennas(p, a);
  AntennaArray b = io::load_antennas(p);
  REQUIRE(b.count() == 3);
  for (std::size_t i = 0; i < 3; ++i) REQUIRE((a.positions[i] - b.positions[i]).norm() == 0.0);

  std::ofstream(p) << "1.0,2.0\n";
  REQUIRE_THROWS_AS(io::load_antennas(p), IoError);
}

TEST_CASE("selector round trip") {
  TempDir tmp;
  std::vector<std::uint64_t> idx = {0, 5, 6, 7, 1000000007ULL};
  const auto p = tmp.path / "sel.bin";
  io::save_selector(p, idx);
  REQUIRE(io::load_selector(p) == idx);
}

TEST_CASE("sparse coordinate text round trip") {
  TempDir tmp;
  SparseInterp G(3, 4);
  std::vector<Eigen::Triplet<std::complex<double>>> t = {
      {0, 0, {1.0, 0.0}}, {1, 2, {0.5, -0.25}}, {2, 3, {1e-17, 3.0}}};
  G.setFromTriplets(t.begin(), t.end());
  const auto p = tmp.path / "g.coo";
  io::save_sparse_coo(p, G);
  SparseInterp back = io::load_sparse_coo(p, 3, 4);
  REQUIRE((Eigen::MatrixXcd(back) - Eigen::MatrixXcd(G)).norm() == 0.0);

  std::ofstream(p) << "0 0 nope\n";
  REQUIRE_THROWS_AS(io::load_sparse_coo(p, 3, 4), IoError);
}

TEST_CASE("vector dump reuses the image format") {
  TempDir tmp;
  Eigen::ArrayXd v = random_image(9, 1, 77).v;
  const auto p = tmp.path / "vec.bin";
  io::save_vector(p, v);
  REQUIRE((io::load_vector(p) - v).abs().maxCoeff() == 0.0);
}

TEST_CASE("pgm export writes a well-formed 16-bit file") {
  TempDir tmp;
  Image x(4, 2, (Eigen::ArrayXd(8) << 0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 0.999, 1.0).finished());
  const auto p = tmp.path / "img.pgm";
  io::save_pgm16_log(p, x);
  std::ifstream is(p, std::ios::binary);
  std::string magic, dims1, dims2, maxval;
  is >> magic >> dims1 >> dims2 >> maxval;
  REQUIRE(magic == "P5");
  REQUIRE(dims1 == "4");
  REQUIRE(dims2 == "2");
  REQUIRE(maxval == "65535");
  is.get();  // single whitespace after maxval
  std::vector<std::uint16_t> px(8);
  std::uint16_t prev = 0;
  for (auto& v : px) {
    const int hi = is.get(), lo = is.get();
    REQUIRE(hi != EOF);
    v = std::uint16_t((hi << 8) | lo);
    REQUIRE(v >= prev);  // log transform is monotone
    prev = v;
  }
  REQUIRE(px[0] == 0);
  REQUIRE(px[7] == 65535);
}
