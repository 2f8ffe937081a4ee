#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tgcca/io.hpp"

using namespace tgcca;
namespace fs = std::filesystem;

namespace {

#ifndef TGCCA_CLI_PATH
#error "TGCCA_CLI_PATH must point at the command-line binary"
#endif

const std::string kCli = TGCCA_CLI_PATH;

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() /
          ("tgcca_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workspace() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string path(const std::string& name) const {
    return (dir / name).string();
  }
};

int run(const std::string& args) {
  const std::string cmd =
      "TGCCA_DETERMINISTIC=1 " + kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_capture(const std::string& args, const std::string& stdout_path) {
  const std::string cmd =
      kCli + " " + args + " > " + stdout_path + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSimConfig = R"({
  "n": 60, "folds": 2, "seed": 11, "eta": 1.0,
  "blocks": [
    {"dims": [6, 5], "shape": "rect", "rho": 0.8},
    {"dims": [7], "shape_file": "VEC_SHAPE"}
  ]
})";

const char* kFitConfig = R"({
  "ranks": [1, 1],
  "tau": 0.01,
  "n_starts": 2,
  "seed": 5,
  "components": 1
})";

std::vector<std::vector<std::string>> parse_csv(const std::string& path) {
  std::istringstream is(read_text_file(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

void write_vec_shape(const std::string& path) {
  DenseTensor t({7});
  t.data().setZero();
  t.data()[2] = 1.0;
  t.data()[3] = 1.0;
  write_tensor(path, t);
}

std::string sim_config_text(const Workspace& ws) {
  std::string text = kSimConfig;
  const std::string shape_path = ws.path("vec_shape.tnsr");
  write_vec_shape(shape_path);
  text.replace(text.find("VEC_SHAPE"), 9, shape_path);
  return text;
}

}  // namespace

TEST_CASE("simulate writes one tensor per fold and block plus truth and a "
          "manifest") {
  Workspace ws;
  write_text_file(ws.path("sim.json"), sim_config_text(ws));
  REQUIRE(run("simulate --config " + ws.path("sim.json") + " --out " +
              ws.path("data")) == 0);
  for (const char* f : {"true_block1.tnsr", "true_block2.tnsr",
                        "fold1_block1.tnsr", "fold1_block2.tnsr",
                        "fold2_block1.tnsr", "fold2_block2.tnsr",
                        "manifest.json"})
    CHECK(fs::exists(ws.path("data/" + std::string(f))));
  // fold tensors are sample-stacked: 3 modes for the matrix block
  DenseTensor t = read_tensor(ws.path("data/fold1_block1.tnsr"));
  CHECK(t.dims() == std::vector<Index>{60, 6, 5});
  DenseTensor truth = read_tensor(ws.path("data/true_block1.tnsr"));
  CHECK(truth.dims() == std::vector<Index>{6, 5});
}

TEST_CASE("simulate is byte-identical when re-run with the same config") {
  Workspace ws;
  write_text_file(ws.path("sim.json"), sim_config_text(ws));
  REQUIRE(run("simulate --config " + ws.path("sim.json") + " --out " +
              ws.path("a")) == 0);
  REQUIRE(run("simulate --config " + ws.path("sim.json") + " --out " +
              ws.path("b")) == 0);
  for (const auto& entry : fs::directory_iterator(ws.path("a"))) {
    const std::string name = entry.path().filename().string();
    CHECK(read_text_file(ws.path("a/" + name)) ==
          read_text_file(ws.path("b/" + name)));
  }
}

TEST_CASE("fit consumes a dataset manifest and writes a results table") {
  Workspace ws;
  write_text_file(ws.path("sim.json"), sim_config_text(ws));
  REQUIRE(run("simulate --config " + ws.path("sim.json") + " --out " +
              ws.path("data")) == 0);
  write_text_file(ws.path("fit.json"), kFitConfig);
  REQUIRE(run("fit --config " + ws.path("fit.json") + " --data " +
              ws.path("data") + " --out " + ws.path("run")) == 0);
  REQUIRE(fs::exists(ws.path("run/results.csv")));
  CHECK(fs::exists(ws.path("run/run.json")));

  auto rows = parse_csv(ws.path("run/results.csv"));
  REQUIRE(!rows.empty());
  CHECK(rows[0] == std::vector<std::string>{"model", "block", "fold",
                                            "component", "cosine",
                                            "criterion", "seconds"});
  // 2 folds x 2 blocks x 1 component data rows + 3 summary rows per block
  int data_rows = 0, summary_rows = 0;
  for (size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 7);
    if (rows[i][2] == "median" || rows[i][2] == "q2.5" ||
        rows[i][2] == "q97.5")
      ++summary_rows;
    else
      ++data_rows;
    const double cosine = std::stod(rows[i][4]);
    CHECK(cosine >= 0.0);
    CHECK(cosine <= 1.0);
  }
  CHECK(data_rows == 4);
  CHECK(summary_rows == 6);
}

TEST_CASE("fit output is byte-identical across reruns with pinned timing") {
  Workspace ws;
  write_text_file(ws.path("sim.json"), sim_config_text(ws));
  REQUIRE(run("simulate --config " + ws.path("sim.json") + " --out " +
              ws.path("data")) == 0);
  write_text_file(ws.path("fit.json"), kFitConfig);
  REQUIRE(run("fit --config " + ws.path("fit.json") + " --data " +
              ws.path("data") + " --out " + ws.path("r1")) == 0);
  REQUIRE(run("fit --config " + ws.path("fit.json") + " --data " +
              ws.path("data") + " --out " + ws.path("r2")) == 0);
  CHECK(read_text_file(ws.path("r1/results.csv")) ==
        read_text_file(ws.path("r2/results.csv")));
}

TEST_CASE("identity-regularized fits agree across regimes in the table") {
  Workspace ws;
  write_text_file(ws.path("sim.json"), sim_config_text(ws));
  REQUIRE(run("simulate --config " + ws.path("sim.json") + " --out " +
              ws.path("data")) == 0);
  const char* base = R"({
    "ranks": [1, 1], "n_starts": 1, "seed": 2, "identity_m": true,
    "use_tandem": false, "regime": ")";
  write_text_file(ws.path("sep.json"),
                  std::string(base) + "separable\"}");
  write_text_file(ws.path("non.json"),
                  std::string(base) + "nonseparable\"}");
  REQUIRE(run("fit --config " + ws.path("sep.json") + " --data " +
              ws.path("data") + " --out " + ws.path("sep")) == 0);
  REQUIRE(run("fit --config " + ws.path("non.json") + " --data " +
              ws.path("data") + " --out " + ws.path("non")) == 0);
  auto a = parse_csv(ws.path("sep/results.csv"));
  auto b = parse_csv(ws.path("non/results.csv"));
  REQUIRE(a.size() == b.size());
  for (size_t i = 1; i < a.size(); ++i) {
    CHECK(std::abs(std::stod(a[i][4]) - std::stod(b[i][4])) <= 1e-9);
    CHECK(std::abs(std::stod(a[i][5]) - std::stod(b[i][5])) <= 1e-9);
  }
}

TEST_CASE("bad configs exit with status 2") {
  Workspace ws;
  write_text_file(ws.path("bad.json"), "{not json");
  CHECK(run("simulate --config " + ws.path("bad.json") + " --out " +
            ws.path("x")) == 2);
  write_text_file(ws.path("bad2.json"), R"({"n": 10, "blocks": []})");
  CHECK(run("simulate --config " + ws.path("bad2.json") + " --out " +
            ws.path("x")) == 2);
  write_text_file(ws.path("bad3.json"), R"({"scheme": "cubic"})");
  CHECK(run("fit --config " + ws.path("bad3.json") + " --out " +
            ws.path("x")) == 2);
  CHECK(run("fit --config " + ws.path("missing.json") + " --out " +
            ws.path("x")) == 2);
}

TEST_CASE("bench reports matching whitening outputs on small grids") {
  Workspace ws;
  write_text_file(ws.path("bench.json"),
                  R"({"q": [4], "d": [1, 2], "n": 12})");
  REQUIRE(run_capture("bench --config " + ws.path("bench.json"),
                      ws.path("bench.csv")) == 0);
  auto rows = parse_csv(ws.path("bench.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{
                       "q", "d", "p", "separable_seconds",
                       "explicit_seconds", "ratio", "max_abs_diff"});
  for (size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 7);
    CHECK(std::stod(rows[i][6]) <= 1e-10);  // both paths whiten identically
    CHECK(std::stod(rows[i][5]) > 0.0);
  }
}

TEST_CASE("eval merges fit tables and rebuilds the quantile summary") {
  Workspace ws;
  write_text_file(ws.path("sim.json"), sim_config_text(ws));
  REQUIRE(run("simulate --config " + ws.path("sim.json") + " --out " +
              ws.path("data")) == 0);
  write_text_file(ws.path("fit.json"), kFitConfig);
  REQUIRE(run("fit --config " + ws.path("fit.json") + " --data " +
              ws.path("data") + " --out " + ws.path("run")) == 0);
  write_text_file(ws.path("eval.json"),
                  R"({"inputs": [")" + ws.path("run/results.csv") +
                      R"(", ")" + ws.path("run/results.csv") + R"("]})");
  REQUIRE(run("eval --config " + ws.path("eval.json") + " --out " +
              ws.path("merged")) == 0);
  auto rows = parse_csv(ws.path("merged/summary.csv"));
  int data_rows = 0;
  for (size_t i = 1; i < rows.size(); ++i)
    if (rows[i][2] != "median" && rows[i][2] != "q2.5" &&
        rows[i][2] != "q97.5")
      ++data_rows;
  CHECK(data_rows == 8);  // both inputs' per-fold rows survive the merge
}
