#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

// Drives the real binary. VPR_CLI_BIN is injected by the build.
namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(VPR_CLI_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// mean_ns (column 7 of 8) jitters between runs; strip it before diffing
std::string without_ns_column(const std::string& csv) {
  std::istringstream is(csv);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line)) {
    std::size_t commas = 0, cut_from = std::string::npos, cut_to = std::string::npos;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] != ',') continue;
      ++commas;
      if (commas == 6) cut_from = i;
      if (commas == 7) cut_to = i;
    }
    if (cut_from != std::string::npos && cut_to != std::string::npos) {
      line = line.substr(0, cut_from) + line.substr(cut_to);
    }
    os << line << '\n';
  }
  return os.str();
}

}  // namespace

TEST_CASE("cli pipeline: synth, select, inspect, query, bench") {
  testutil::TempDir dir("cli");
  const std::string d = dir.path.string();

  REQUIRE(run("synth --out " + d + " --frames 200 --dim 16 --clusters 10 --seed 11") == 0);
  CHECK(std::filesystem::exists(dir.path / "db.vprf"));
  CHECK(std::filesystem::exists(dir.path / "queries.vprf"));
  CHECK(std::filesystem::exists(dir.path / "geotags.csv"));
  CHECK(std::filesystem::exists(dir.path / "truth.csv"));

  REQUIRE(run("select --db " + d + "/db.vprf --strategy medoid --ratio 0.1 --init fixed_rate "
              "--seed 11 --out " + d + "/kf.json") == 0);
  const auto kf = nlohmann::json::parse(slurp(dir.path / "kf.json"));
  CHECK(kf.at("strategy") == "medoid");
  CHECK(kf.at("indices").size() == 20);  // 200 frames at ratio 0.1
  CHECK(kf.at("ams").is_number());

  CHECK(run("inspect --db " + d + "/db.vprf --keyframes " + d + "/kf.json") == 0);

  REQUIRE(run("query --db " + d + "/db.vprf --keyframes " + d + "/kf.json --queries " + d +
              "/queries.vprf --task seq2seq --seq-len 3 --out " + d + "/hits.jsonl") == 0);
  std::ifstream hits(dir.path / "hits.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(hits, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("query"));
    CHECK(j.contains("best"));
    CHECK(j.contains("comparisons"));
    ++lines;
  }
  CHECK(lines == 200 - 3 + 1);

  REQUIRE(run("bench --db " + d + "/db.vprf --geotags " + d + "/geotags.csv --queries " + d +
              "/queries.vprf --truth " + d + "/truth.csv --ratios 0.1,0.2,0.3,0.4,0.5 "
              "--tasks im2im,seq2seq --seed 11 --out " + d + "/bench.csv") == 0);
  const std::string csv = slurp(dir.path / "bench.csv");
  std::istringstream is(csv);
  std::getline(is, line);
  CHECK(line == "strategy,task,ratio,accuracy,auc,mean_comparisons,mean_ns,ams");
  std::size_t rows = 0;
  while (std::getline(is, line)) ++rows;
  // 4 strategies x 5 ratios x 2 tasks + 2 baseline rows
  CHECK(rows == 4 * 5 * 2 + 2);
}

TEST_CASE("cli determinism: identical flags give identical artifacts") {
  testutil::TempDir dir("clidet");
  const std::string d = dir.path.string();
  REQUIRE(run("synth --out " + d + "/a --frames 120 --dim 8 --clusters 6 --seed 3") == 0);
  REQUIRE(run("synth --out " + d + "/b --frames 120 --dim 8 --clusters 6 --seed 3") == 0);
  CHECK(slurp(dir.path / "a/db.vprf") == slurp(dir.path / "b/db.vprf"));
  CHECK(slurp(dir.path / "a/geotags.csv") == slurp(dir.path / "b/geotags.csv"));

  for (const char* tag : {"a", "b"}) {
    REQUIRE(run(std::string("select --db ") + d + "/a/db.vprf --strategy medoid --ratio 0.1 "
                "--seed 5 --out " + d + "/" + tag + "/kf.json") == 0);
  }
  CHECK(slurp(dir.path / "a/kf.json") == slurp(dir.path / "b/kf.json"));

  for (const char* tag : {"a", "b"}) {
    REQUIRE(run(std::string("bench --db ") + d + "/a/db.vprf --queries " + d +
                "/a/queries.vprf --truth " + d + "/a/truth.csv --ratios 0.1,0.3 "
                "--strategies medoid,fixed_rate --seed 5 --out " + d + "/" + tag +
                "/bench.csv") == 0);
  }
  CHECK(without_ns_column(slurp(dir.path / "a/bench.csv")) ==
        without_ns_column(slurp(dir.path / "b/bench.csv")));
}

TEST_CASE("cli exit codes: 1 for usage, 2 for data errors") {
  testutil::TempDir dir("clierr");
  const std::string d = dir.path.string();
  CHECK(run("select --frobnicate") == 1);                       // unknown flag
  CHECK(run("nonsense-subcommand") == 1);                       // unknown subcommand
  CHECK(run("") == 1);                                          // missing subcommand
  CHECK(run("select --db " + d + "/missing.vprf --strategy medoid --ratio 0.1 --out " + d +
            "/kf.json") == 2);                                  // missing file
  REQUIRE(run("synth --out " + d + " --frames 40 --dim 8 --clusters 4 --seed 2") == 0);
  CHECK(run("select --db " + d + "/db.vprf --strategy medoid --ratio 1.0 --out " + d +
            "/kf.json") == 1);                                  // k = N usage error
  CHECK(run("select --db " + d + "/db.vprf --strategy distance --ratio 0.2 --out " + d +
            "/kf.json") == 2);                                  // geotags missing: data error
  CHECK(run("--help") == 0);
}
