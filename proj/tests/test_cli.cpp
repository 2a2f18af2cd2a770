#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "tiltnet/io.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBin = TILTNET_BIN;

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("tiltnet_cli_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = kBin + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') n++;
  return n;
}

}  // namespace

TEST_CASE("generate") {
  Sandbox sb;
  SUBCASE("deterministic byte-identical output") {
    CHECK(run("generate --stations 9 --seed 42 -o " + sb.path("a.json")) == 0);
    CHECK(run("generate --stations 9 --seed 42 -o " + sb.path("b.json")) == 0);
    CHECK(slurp(sb.path("a.json")) == slurp(sb.path("b.json")));
    const auto j = tiltnet::io::read_artifact(sb.path("a.json"), "deployment");
    CHECK(j.at("cells").size() == 27);
  }
  SUBCASE("invalid station count is a usage error") {
    CHECK(run("generate --stations 0 -o " + sb.path("x.json")) != 0);
    CHECK_FALSE(fs::exists(sb.path("x.json")));
  }
}

TEST_CASE("graph command") {
  Sandbox sb;
  REQUIRE(run("generate --stations 9 --seed 42 -o " + sb.path("dep.json")) == 0);
  REQUIRE(run("graph --deployment " + sb.path("dep.json") + " --topology complete --users 200 -o " +
              sb.path("complete.json")) == 0);
  REQUIRE(run("graph --deployment " + sb.path("dep.json") + " --topology tree --users 200 -o " +
              sb.path("tree.json")) == 0);
  REQUIRE(run("graph --deployment " + sb.path("dep.json") + " --topology sparse --users 200 -o " +
              sb.path("sparse.json")) == 0);
  REQUIRE(run("graph --deployment " + sb.path("dep.json") + " --topology dense --users 200 -o " +
              sb.path("dense.json")) == 0);

  const auto complete = tiltnet::io::read_artifact(sb.path("complete.json"), "graph");
  CHECK(complete.at("edges").size() == 27 * 26 / 2);

  const auto tree =
      tiltnet::io::graph_from_json(tiltnet::io::read_artifact(sb.path("tree.json"), "graph"));
  CHECK(tree.n_edges() == tree.n_nodes - static_cast<int>(tree.components.size()));

  const auto sparse = tiltnet::io::read_artifact(sb.path("sparse.json"), "graph");
  const auto dense = tiltnet::io::read_artifact(sb.path("dense.json"), "graph");
  std::set<std::pair<int, int>> se, de;
  for (const auto& e : sparse.at("edges")) se.insert({e.at(0).get<int>(), e.at(1).get<int>()});
  for (const auto& e : dense.at("edges")) de.insert({e.at(0).get<int>(), e.at(1).get<int>()});
  CHECK(se.size() < de.size());
  CHECK(std::includes(de.begin(), de.end(), se.begin(), se.end()));

  SUBCASE("missing deployment file") {
    CHECK(run("graph --deployment " + sb.path("nope.json") + " -o " + sb.path("g.json")) != 0);
  }
}

TEST_CASE("train, eval, bench pipeline") {
  Sandbox sb;
  const std::string dep = sb.path("dep.json");
  const std::string gr = sb.path("g.json");
  const std::string nm = sb.path("norm.json");
  REQUIRE(run("generate --stations 2 --seed 42 -o " + dep) == 0);
  REQUIRE(run("graph --deployment " + dep + " --users 200 -o " + gr) == 0);
  REQUIRE(run("calibrate --deployment " + dep + " --configs 50 --users 150 -o " + nm) == 0);

  const std::string train_args = "train --deployment " + dep + " --graph " + gr + " --norm " + nm +
                                 " --algo ps-crl --seeds 1,2 --budget 60 --eval-every 30 "
                                 "--eval-drops 2 --users 150 -o ";

  SUBCASE("rerun with identical config produces bitwise identical CSV") {
    REQUIRE(run(train_args + sb.path("r1")) == 0);
    REQUIRE(run(train_args + sb.path("r2")) == 0);
    CHECK(slurp(sb.path("r1/metrics.csv")) == slurp(sb.path("r2/metrics.csv")));
    CHECK(slurp(sb.path("r1/checkpoint_final_s1.json")) ==
          slurp(sb.path("r2/checkpoint_final_s1.json")));

    const std::string eval_args = "eval --checkpoint " + sb.path("r1/checkpoint_best_s1.json") +
                                  " --deployment " + dep + " --graph " + gr +
                                  " --drops 3 --users 150 -o ";
    REQUIRE(run(eval_args + sb.path("e1")) == 0);
    REQUIRE(run(eval_args + sb.path("e2")) == 0);
    CHECK(slurp(sb.path("e1/eval.csv")) == slurp(sb.path("e2/eval.csv")));
    CHECK(slurp(sb.path("e1/throughput_cdf.csv")) == slurp(sb.path("e2/throughput_cdf.csv")));
    CHECK(count_lines(slurp(sb.path("e1/throughput_cdf.csv"))) == 2 + 3 * 150);
    CHECK(count_lines(slurp(sb.path("e1/eval.csv"))) == 2 + 3);

    const auto echo = tiltnet::io::read_artifact(sb.path("r1/config_echo.json"), "config_echo");
    for (const char* key : {"algorithm", "seeds", "budget", "gamma", "learning_rate", "batch_size",
                            "replay_capacity", "mp_max_iters", "config_hash"})
      CHECK(echo.contains(key));
  }

  SUBCASE("sweep emits single-shot rows") {
    REQUIRE(run("train --deployment " + dep + " --norm " + nm +
                " --algo sweep --seeds 3 --users 150 -o " + sb.path("sw")) == 0);
    const std::string csv = slurp(sb.path("sw/metrics.csv"));
    CHECK(count_lines(csv) == 3);  // comment + header + one row
    CHECK(csv.find("sweep,0,") != std::string::npos);
    CHECK(run("eval --checkpoint " + sb.path("sw/checkpoint_final_s3.json") + " --deployment " +
              dep + " --drops 1 --users 150 -o " + sb.path("swe")) == 0);
  }

  SUBCASE("graph artifact mixing is rejected") {
    REQUIRE(run(train_args + sb.path("r3")) == 0);
    REQUIRE(run("graph --deployment " + dep + " --topology tree --users 200 -o " +
                sb.path("other.json")) == 0);
    CHECK(run("eval --checkpoint " + sb.path("r3/checkpoint_final_s1.json") + " --deployment " +
              dep + " --graph " + sb.path("other.json") + " --drops 1 --users 100 -o " +
              sb.path("bad")) != 0);
  }

  SUBCASE("unknown config keys are rejected") {
    std::ofstream cfg(sb.path("cfg.json"));
    cfg << R"({"algorithm":"ps-crl","no_such_knob":1})";
    cfg.close();
    CHECK(run("train --deployment " + dep + " --graph " + gr + " --norm " + nm + " --config " +
              sb.path("cfg.json") + " -o " + sb.path("r4")) != 0);
  }

  SUBCASE("bench usage and output") {
    REQUIRE(run(train_args + sb.path("r5")) == 0);
    CHECK(run("bench --checkpoint " + sb.path("r5/checkpoint_final_s1.json") + " --deployment " +
              dep + " --selections 0 -o " + sb.path("b.csv")) != 0);
    REQUIRE(run("bench --checkpoint " + sb.path("r5/checkpoint_final_s1.json") + " --deployment " +
                dep + " --selections 2 --users 150 -o " + sb.path("b.csv")) == 0);
    const std::string csv = slurp(sb.path("b.csv"));
    CHECK(csv.find("topology,mean_ms,p95_ms,mean_iterations") != std::string::npos);
    CHECK(count_lines(csv) == 2 + 4);

    // Reruns: latencies are noise, iteration counts are deterministic.
    REQUIRE(run("bench --checkpoint " + sb.path("r5/checkpoint_final_s1.json") + " --deployment " +
                dep + " --selections 2 --users 150 -o " + sb.path("b2.csv")) == 0);
    const auto iters_of = [](const std::string& text) {
      std::vector<std::string> out;
      std::stringstream ss(text);
      std::string line;
      while (std::getline(ss, line)) {
        const auto pos = line.rfind(',');
        if (pos != std::string::npos) out.push_back(line.substr(pos + 1));
      }
      return out;
    };
    CHECK(iters_of(csv) == iters_of(slurp(sb.path("b2.csv"))));
  }
}
