#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace {

namespace fs = std::filesystem;

const char* cli_path() { return LUMISEC_CLI_PATH; }

int run(const std::string& args) {
  const std::string cmd =
      std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> data_rows(const std::string& csv) {
  std::vector<std::string> rows;
  std::istringstream in(csv);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    rows.push_back(line);
  }
  return rows;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lumisec_cli_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

fs::path write_scenario(const fs::path& dir) {
  const fs::path file = dir / "scenario.json";
  std::ofstream out(file);
  out << R"({
    "bob": [2.5, 2.5, 0.75],
    "eves": [[4.5, 4.5, 0.75]],
    "irs": {"rows": 2, "cols": 2}
  })";
  return file;
}

}  // namespace

TEST_CASE("simulate writes a deterministic rates table") {
  TempDir tmp;
  const fs::path scenario = write_scenario(tmp.path);
  const fs::path out = tmp.path / "sim";
  const std::string args = "simulate --scenario " + scenario.string() +
                           " --power 2,1 --panels 512 --out " + out.string();
  REQUIRE(run(args) == 0);

  const fs::path csv = out / "rates_vs_power.csv";
  REQUIRE(fs::exists(csv));
  const std::string first = slurp(csv);
  CHECK(first.rfind("# lumisec v", 0) == 0);
  CHECK(first.find("power_w,user,rate_los_bps,rate_irs_bps,gain_pct") !=
        std::string::npos);

  const auto rows = data_rows(first);
  REQUIRE(rows.size() == 4);  // two powers x {B, E1}
  CHECK(rows[0].rfind("1,B,", 0) == 0);
  CHECK(rows[1].rfind("1,E1,", 0) == 0);
  CHECK(rows[2].rfind("2,B,", 0) == 0);

  // all-bob leaves the eavesdropper at her LoS rate: zero gain
  CHECK(rows[1].substr(rows[1].size() - 2) == ",0");

  REQUIRE(run(args) == 0);
  CHECK(slurp(csv) == first);
}

TEST_CASE("simulate rejects a bad sweep without writing") {
  TempDir tmp;
  const fs::path scenario = write_scenario(tmp.path);
  const fs::path out = tmp.path / "sim";
  CHECK(run("simulate --scenario " + scenario.string() +
            " --power 0 --out " + out.string()) == 1);
  CHECK(!fs::exists(out / "rates_vs_power.csv"));
  CHECK(run("simulate --scenario " + scenario.string() + " --power --out " +
            out.string()) == 1);
  CHECK(run("simulate --scenario " + scenario.string() +
            " --mode sideways --out " + out.string()) == 1);
}

TEST_CASE("config errors exit with the usage code") {
  TempDir tmp;
  const fs::path bad = tmp.path / "bad.json";
  std::ofstream(bad) << R"({"bogus_key": 1})";
  CHECK(run("simulate --scenario " + bad.string() + " --power 1") == 1);
  CHECK(run("simulate --scenario " + (tmp.path / "missing.json").string() +
            " --power 1") == 1);
  CHECK(run("bogus-subcommand") == 1);
}

TEST_CASE("oracle emits the full enumeration with the argmax flagged") {
  TempDir tmp;
  const fs::path scenario = write_scenario(tmp.path);
  const fs::path out = tmp.path / "oracle";
  REQUIRE(run("oracle --scenario " + scenario.string() +
              " --power 3 --panels 512 --out " + out.string()) == 0);
  const fs::path csv = out / "oracle_p3.csv";
  REQUIRE(fs::exists(csv));
  const std::string text = slurp(csv);
  CHECK(text.find("# argmax alloc=") != std::string::npos);
  const auto rows = data_rows(text);
  REQUIRE(rows.size() == 16);  // 2^4 for one eavesdropper and four elements

  // the argmax value dominates the all-Bob row
  double allbob = -1.0, best = -1.0;
  for (const std::string& row : rows) {
    const auto comma = row.find(',');
    const double value = std::stod(row.substr(comma + 1));
    best = std::max(best, value);
    if (row.substr(0, comma) == "BBBB") allbob = value;
  }
  CHECK(allbob >= 0.0);
  CHECK(best >= allbob);

  SUBCASE("oversized spaces are refused") {
    CHECK(run("oracle --scenario " + scenario.string() +
              " --power 3 --max-size 4 --out " + out.string()) == 1);
  }
}

TEST_CASE("optimize writes per-seed curves and best allocations") {
  TempDir tmp;
  const fs::path scenario = write_scenario(tmp.path);
  const fs::path out = tmp.path / "opt";
  const std::string args = "optimize --scenario " + scenario.string() +
                           " --power 3 --seeds 5 --episodes 12 --panels 512" +
                           " --out " + out.string();
  REQUIRE(run(args) == 0);

  const fs::path csv = out / "convergence_p3_s5.csv";
  REQUIRE(fs::exists(csv));
  const std::string first = slurp(csv);
  const auto rows = data_rows(first);
  REQUIRE(rows.size() == 12);
  CHECK(first.find("episode,reward_bits_per_s,best_so_far_bits_per_s,"
                   "allbob_bits_per_s") != std::string::npos);

  const fs::path best = out / "best_allocation_p3_s5.txt";
  REQUIRE(fs::exists(best));
  const std::string best_text = slurp(best);
  CHECK(best_text.find("integral_bits_per_s=") != std::string::npos);
  CHECK(best_text.find("capacity_bits_per_s=") != std::string::npos);

  REQUIRE(run(args) == 0);
  CHECK(slurp(csv) == first);
  CHECK(slurp(best) == best_text);
}

TEST_CASE("validate reports suite status") {
  CHECK(run("validate") == 0);
  CHECK(run("validate --inject-fault expansion-cosine") == 3);
  CHECK(run("validate --inject-fault bogus") == 1);
}
