#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace glinv;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {
fs::path temp_dir() {
  const fs::path dir = fs::temp_directory_path() / "glinv_io_tests";
  fs::create_directories(dir);
  return dir;
}
std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}
}  // namespace

TEST_CASE("fnv1a64 known values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(hex64(0xcbf29ce484222325ull) == "cbf29ce484222325");
}

TEST_CASE("GLF1 dumps round-trip bitwise") {
  const Grid2D g = build_grid(1, 2, 1, 9, 7, 3);
  const Field v = complex_gaussian_field(g.m, 77);
  const fs::path path = temp_dir() / "field.glf1";
  write_field_glf1(path, g, v);
  const Glf1Field back = read_field_glf1(path);
  CHECK(back.nx_interior == static_cast<std::uint32_t>(g.Nx - 1));
  CHECK(back.ny_interior == static_cast<std::uint32_t>(g.Ny - 1));
  REQUIRE(back.values.size() == v.size());
  for (int k = 0; k < g.m; ++k) {
    CHECK(back.values[k].real() == v[k].real());
    CHECK(back.values[k].imag() == v[k].imag());
  }

  const fs::path bad = temp_dir() / "not_glf1.bin";
  std::ofstream(bad) << "nope";
  CHECK_THROWS_AS(read_field_glf1(bad), std::runtime_error);
}

TEST_CASE("field CSV carries the stamp header and one row per node") {
  const Grid2D g = build_grid(1, 1, 1, 5, 4, 2);
  const Field v = complex_gaussian_field(g.m, 3);
  ArtifactStamp stamp;
  stamp.config_hash = "00000000deadbeef";
  stamp.seed = 42;
  const fs::path path = temp_dir() / "field.csv";
  write_field_csv(path, g, v, stamp);
  const auto lines = read_lines(path);
  REQUIRE(static_cast<int>(lines.size()) == g.m + 2);
  CHECK(lines[0] == "# glinv 0.1.0 config=00000000deadbeef seed=42");
  CHECK(lines[1] == "i,j,x,y,re,im");
  CHECK(lines[2].rfind("1,1,", 0) == 0);
}

TEST_CASE("history and metrics CSVs are well-formed") {
  RunReport rep;
  IterationRecord rec;
  rec.k = 0;
  rec.J = 0.5;
  rec.misfit = 0.25;
  rec.grad_norm = 1e-3;
  rec.alpha = 1.0;
  rec.beta = 0.0;
  rec.backtracks = 2;
  rep.history.push_back(rec);
  rep.iterations = 1;

  const fs::path hpath = temp_dir() / "history.csv";
  write_history_csv(hpath, rep, ArtifactStamp{});
  auto lines = read_lines(hpath);
  REQUIRE(lines.size() == 3);
  CHECK(lines[1] == "k,J,misfit,grad_norm,alpha,beta,backtracks");
  CHECK(lines[2] == "0,0.5,0.25,0.001,1,0,2");

  Metrics m;
  m.iterations = 7;
  m.misfit_sq_ratio = 1e-5;
  m.q_err_sq_ratio = 2e-5;
  const fs::path mpath = temp_dir() / "metrics.csv";
  write_metrics_csv(mpath, m, StopReason::tolerance, ArtifactStamp{});
  lines = read_lines(mpath);
  REQUIRE(lines.size() == 3);
  CHECK(lines[2] == "7,1.0000000000000001e-05,2.0000000000000002e-05,nan,tolerance");
}
