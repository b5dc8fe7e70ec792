// Exercises the installed command-line tool end to end through a shell.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

namespace fs = std::filesystem;

namespace {

#ifndef GLINV_CLI_PATH
#error "GLINV_CLI_PATH must point at the built CLI binary"
#endif

const std::string kCli = GLINV_CLI_PATH;

int run_cli(const std::string& args) {
  const std::string cmd = "\"" + kCli + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "glinv_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli rejects bad configuration with exit code 1") {
  CHECK(run_cli("run example1 --nt 0") == 1);
  CHECK(run_cli("run example9") == 1);
  CHECK(run_cli("table T9") == 1);
  CHECK(run_cli("run example1 --grid 5,5") == 1);
  CHECK(run_cli("nonsense") == 1);
}

TEST_CASE("cli run produces the documented artifacts deterministically") {
  const fs::path dir_a = fresh_dir("run_a");
  const fs::path dir_b = fresh_dir("run_b");
  const std::string common =
      "run example1 --grid 12,12,10 --tau 1e-4 --eps 1e-5 --kmax 80 --seed 3 --quiet --out ";
  REQUIRE(run_cli(common + dir_a.string()) == 0);
  REQUIRE(run_cli(common + dir_b.string()) == 0);

  for (const char* name : {"config.json", "history.csv", "metrics.csv", "final_state.csv",
                           "final_state.glf1", "q_rec.csv", "q_rec.glf1", "q_true.csv"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(dir_a / name));
  }
  // different --out, byte-identical science artifacts
  for (const char* name :
       {"history.csv", "metrics.csv", "final_state.csv", "final_state.glf1", "q_rec.csv",
        "q_rec.glf1"}) {
    CAPTURE(name);
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));
  }
  // artifact header carries the stamp
  const std::string history = slurp(dir_a / "history.csv");
  CHECK(history.rfind("# glinv 0.1.0 config=", 0) == 0);
}

TEST_CASE("cli run accepts a JSON config file with flag overrides") {
  const fs::path dir = fresh_dir("run_json");
  const fs::path cfg = dir / "cfg.json";
  std::ofstream(cfg) << R"({"example": "ex3", "nx": 12, "ny": 12, "nt": 10,
                            "tau": 1e-4, "k_max": 60})";
  REQUIRE(run_cli("run " + cfg.string() + " --eps 1e-6 --quiet --out " + dir.string()) == 0);
  const std::string snapshot = slurp(dir / "config.json");
  CHECK(snapshot.find("\"example\": \"ex3\"") != std::string::npos);
  CHECK(snapshot.find("\"eps\": 1e-06") != std::string::npos);
  CHECK(snapshot.find("\"nx\": 12") != std::string::npos);
}

TEST_CASE("cli full-mode run dumps the recovered forcing") {
  const fs::path dir = fresh_dir("run_ex4");
  REQUIRE(run_cli("run example4 --grid 9,9,6 --tau 1e-4 --kmax 40 --quiet --out " +
                  dir.string()) == 0);
  CHECK(fs::exists(dir / "f_rec_final.csv"));
  CHECK(fs::exists(dir / "f_rec_final.glf1"));
  const std::string metrics = slurp(dir / "metrics.csv");
  CHECK(metrics.find("f_err_sq_ratio") != std::string::npos);
}

namespace {
std::string drop_wall_column(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto cut = line.find_last_of(',');
    out << (cut == std::string::npos ? line : line.substr(0, cut)) << "\n";
  }
  return out.str();
}
}  // namespace

TEST_CASE("cli table runs are seed-reproducible up to the timing column") {
  const fs::path dir_a = fresh_dir("table_a");
  const fs::path dir_b = fresh_dir("table_b");
  REQUIRE(run_cli("table T2 --scale desk --seed 7 --out " + dir_a.string()) == 0);
  REQUIRE(run_cli("table T2 --scale desk --seed 7 --out " + dir_b.string()) == 0);
  const std::string a = slurp(dir_a / "table_T2.csv");
  const std::string b = slurp(dir_b / "table_T2.csv");
  CHECK(drop_wall_column(a) == drop_wall_column(b));
  CHECK(a.rfind("# glinv 0.1.0 config=", 0) == 0);
  CHECK(a.find("label,example,nx,ny,nt,eps,tau,delta,seed,iterations") != std::string::npos);

  CHECK(run_cli("table T1 --scale nonsense --out " + dir_b.string()) == 1);
}

TEST_CASE("cli checks pass and exit zero") {
  CHECK(run_cli("check duality") == 0);
  CHECK(run_cli("check gradient") == 0);
  CHECK(run_cli("check nonsense") == 1);
}

TEST_CASE("cli convergence study writes a CSV when asked") {
  const fs::path dir = fresh_dir("conv");
  REQUIRE(run_cli("convergence --rule trapezoid --out " + dir.string()) == 0);
  const std::string csv = slurp(dir / "convergence_trapezoid.csv");
  CHECK(csv.find("sweep,resolution,error") != std::string::npos);
  CHECK(csv.find("spatial,8,") != std::string::npos);
  CHECK(csv.find("temporal,32,") != std::string::npos);
}
