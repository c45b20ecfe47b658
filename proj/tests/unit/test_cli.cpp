#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "lirdrec/container.hpp"
#include "lirdrec/dataio.hpp"
#include "support/fixtures.hpp"

namespace fs = std::filesystem;
using namespace lirdrec;

namespace {

int run_cli(const std::string& args, std::string* err_out = nullptr) {
  const fs::path errfile = fs::temp_directory_path() / ("lirdrec_cli_err_" +
                                                        std::to_string(::getpid()) + ".txt");
  const std::string cmd =
      std::string(LIRDREC_CLI_PATH) + " " + args + " 2>" + errfile.string() + " >/dev/null";
  const int status = std::system(cmd.c_str());
  if (err_out != nullptr) {
    std::ifstream f(errfile);
    std::stringstream ss;
    ss << f.rdbuf();
    *err_out = ss.str();
  }
  fs::remove(errfile);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct CliFixture {
  fs::path dir;

  CliFixture() {
    dir = fs::temp_directory_path() /
          ("lirdrec_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(dir);

    const Dataset ds = testing::make_random_dataset(20, 30, 6, 0, 0, 11);
    // write unsplit interactions
    std::ofstream tsv(dir / "interactions.tsv");
    tsv << "user\titem\n";
    for (const auto& r : ds.records) tsv << ds.user_ids[r.user] << '\t' << ds.item_ids[r.item] << '\n';
    tsv.close();

    Rng rng(13);
    FeatureMatrix mv, mt;
    mv.modality_id = "visual";
    mv.values = Tensor<float>::randn(30, 8, rng);
    mt.modality_id = "textual";
    mt.values = Tensor<float>::randn(30, 5, rng);
    store_features(mv, (dir / "visual.fmx").string());
    store_features(mt, (dir / "textual.fmx").string());

    std::ofstream cfg(dir / "config.json");
    cfg << R"({
  "data": {
    "interactions": ")" << (dir / "interactions.tsv").string() << R"(",
    "features": [
      {"modality": "visual", "path": ")" << (dir / "visual.fmx").string() << R"("},
      {"modality": "textual", "path": ")" << (dir / "textual.fmx").string() << R"("}
    ],
    "split_seed": 5
  },
  "graph": {"knn_k": 4},
  "model": {"d": 4, "d1": 8, "d_h": 4, "l_ui": 1},
  "train": {"batch_size": 32, "max_epochs": 3, "patience": 10, "seed": 21},
  "eval": {"ks": [5, 10]}
})";
  }

  ~CliFixture() { fs::remove_all(dir); }

  static int& counter() {
    static int c = 0;
    return c;
  }

  std::string config() const { return (dir / "config.json").string(); }
  std::string out(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("cli pipeline: preprocess, build-graph, train, eval") {
  CliFixture fx;
  CHECK(run_cli("preprocess --config " + fx.config() + " --out " + fx.out("caches")) == 0);
  CHECK(fs::exists(fx.out("caches/dct_visual.fmx")));
  CHECK(fs::exists(fx.out("caches/dct_textual.fmx")));
  CHECK(fs::exists(fx.out("caches/run.json")));

  CHECK(run_cli("build-graph --config " + fx.config() + " --out " + fx.out("caches")) == 0);
  CHECK(fs::exists(fx.out("caches/adjacency.grx")));
  CHECK(fs::exists(fx.out("caches/item_graph.grx")));

  CHECK(run_cli("train --config " + fx.config() + " --out " + fx.out("run1") + " --caches " +
                fx.out("caches")) == 0);
  CHECK(fs::exists(fx.out("run1/checkpoint.ckpt")));
  CHECK(fs::exists(fx.out("run1/checkpoint.ckpt.json")));
  CHECK(fs::exists(fx.out("run1/train_log.csv")));
  CHECK(fs::exists(fx.out("run1/run.json")));

  CHECK(run_cli("eval --checkpoint " + fx.out("run1/checkpoint.ckpt") + " --caches " +
                fx.out("caches") + " --split test --out " + fx.out("eval1")) == 0);
  CHECK(fs::exists(fx.out("eval1/report.csv")));
}

TEST_CASE("cli: identical train runs produce identical logs") {
  CliFixture fx;
  REQUIRE(run_cli("preprocess --config " + fx.config() + " --out " + fx.out("caches")) == 0);
  REQUIRE(run_cli("build-graph --config " + fx.config() + " --out " + fx.out("caches")) == 0);
  REQUIRE(run_cli("train --config " + fx.config() + " --out " + fx.out("a") + " --caches " +
                  fx.out("caches")) == 0);
  REQUIRE(run_cli("train --config " + fx.config() + " --out " + fx.out("b") + " --caches " +
                  fx.out("caches")) == 0);
  auto slurp = [](const std::string& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    std::string s = ss.str();
    // wallclock column varies; strip it
    std::string out;
    for (std::stringstream lines(s); std::getline(lines, s);)
      out += s.substr(0, s.rfind(',')) + "\n";
    return out;
  };
  CHECK(slurp(fx.out("a/train_log.csv")) == slurp(fx.out("b/train_log.csv")));
}

TEST_CASE("cli: eval without a checkpoint names the producing subcommand") {
  CliFixture fx;
  std::string err;
  const int code = run_cli("eval --checkpoint " + fx.out("nope.ckpt") + " --out " + fx.out("e"),
                           &err);
  CHECK(code == 3);
  CHECK(err.find("train") != std::string::npos);
}

TEST_CASE("cli: train without caches names build-graph or preprocess") {
  CliFixture fx;
  std::string err;
  const int code = run_cli("train --config " + fx.config() + " --out " + fx.out("t") +
                               " --caches " + fx.out("missing"),
                           &err);
  CHECK(code == 3);
  const bool mentions = err.find("preprocess") != std::string::npos ||
                        err.find("build-graph") != std::string::npos;
  CHECK(mentions);
}

TEST_CASE("cli: config schema violations exit with code 2 and a field path") {
  CliFixture fx;
  std::ofstream bad(fx.dir / "bad.json");
  bad << R"({"train": {"learning_rate": 0.1}})";
  bad.close();
  std::string err;
  const int code = run_cli("train --config " + (fx.dir / "bad.json").string() + " --out " +
                               fx.out("x"),
                           &err);
  CHECK(code == 2);
  CHECK(err.find("learning_rate") != std::string::npos);
}

TEST_CASE("cli: coldstart ground truth contains only held-out items") {
  CliFixture fx;
  REQUIRE(run_cli("coldstart --config " + fx.config() + " --out " + fx.out("cold")) == 0);
  const Dataset split = load_interactions(fx.out("cold/split.tsv"));
  std::set<int32_t> train_items, heldout;
  for (const auto& r : split.records) {
    if (r.split == Split::train)
      train_items.insert(r.item);
    else
      heldout.insert(r.item);
  }
  for (const int32_t i : heldout) CHECK(train_items.count(i) == 0);
  CHECK(fs::exists(fx.out("cold/report.csv")));
}

TEST_CASE("cli: run.json records config echo and input hashes") {
  CliFixture fx;
  REQUIRE(run_cli("preprocess --config " + fx.config() + " --out " + fx.out("c")) == 0);
  std::ifstream f(fx.out("c/run.json"));
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string j = ss.str();
  CHECK(j.find("\"subcommand\": \"preprocess\"") != std::string::npos);
  CHECK(j.find("interactions.tsv") != std::string::npos);
  CHECK(j.find("\"knn_k\": 4") != std::string::npos);
}

TEST_CASE("cli: diagnose runs on synthetic data") {
  CliFixture fx;
  CHECK(run_cli("diagnose --kind disparity --epochs 1 --synthetic --out " + fx.out("d")) == 0);
  CHECK(fs::exists(fx.out("d/diagnose_disparity.csv")));
  std::ifstream f(fx.out("d/diagnose_disparity.csv"));
  std::string header;
  std::getline(f, header);
  CHECK(header == "epoch,series,value");
}

TEST_CASE("cli: grid emits a leaderboard over the config grid") {
  CliFixture fx;
  std::ofstream cfg(fx.dir / "grid.json");
  cfg << R"({
  "data": {
    "interactions": ")" << (fx.dir / "interactions.tsv").string() << R"(",
    "features": [
      {"modality": "visual", "path": ")" << (fx.dir / "visual.fmx").string() << R"("},
      {"modality": "textual", "path": ")" << (fx.dir / "textual.fmx").string() << R"("}
    ]
  },
  "model": {"name": "mf", "d": 4},
  "train": {"batch_size": 32, "max_epochs": 2, "seed": 9},
  "eval": {"ks": [5]},
  "grid": {"lambda": [0.001, 0.1], "lr": [0.01, 0.001]}
})";
  cfg.close();
  REQUIRE(run_cli("grid --config " + (fx.dir / "grid.json").string() + " --out " + fx.out("g")) ==
          0);
  std::ifstream f(fx.out("g/leaderboard.csv"));
  std::string line;
  int rows = 0;
  std::getline(f, line);
  CHECK(line == "lambda,lr,tau0,gamma,l_ui,best_val_recall,best_epoch");
  while (std::getline(f, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 4);  // exhaustive 2x2 product
}

TEST_CASE("cli: eval --k overrides the cutoffs") {
  CliFixture fx;
  REQUIRE(run_cli("preprocess --config " + fx.config() + " --out " + fx.out("caches")) == 0);
  REQUIRE(run_cli("build-graph --config " + fx.config() + " --out " + fx.out("caches")) == 0);
  REQUIRE(run_cli("train --config " + fx.config() + " --out " + fx.out("r") + " --caches " +
                  fx.out("caches")) == 0);
  REQUIRE(run_cli("eval --checkpoint " + fx.out("r/checkpoint.ckpt") + " --caches " +
                  fx.out("caches") + " --split valid --k 7 --out " + fx.out("e")) == 0);
  std::ifstream f(fx.out("e/report.csv"));
  std::string all, line;
  while (std::getline(f, line)) all += line + "\n";
  CHECK(all.find(",recall,7,") != std::string::npos);
  CHECK(all.find(",recall,10,") == std::string::npos);
}

TEST_CASE("cli: baseline models train without caches") {
  CliFixture fx;
  std::ofstream cfg(fx.dir / "mf.json");
  cfg << R"({
  "data": {
    "interactions": ")" << (fx.dir / "interactions.tsv").string() << R"(",
    "features": [
      {"modality": "visual", "path": ")" << (fx.dir / "visual.fmx").string() << R"("},
      {"modality": "textual", "path": ")" << (fx.dir / "textual.fmx").string() << R"("}
    ]
  },
  "model": {"name": "mf", "d": 4},
  "train": {"batch_size": 32, "max_epochs": 2, "seed": 3},
  "eval": {"ks": [5]}
})";
  cfg.close();
  CHECK(run_cli("train --config " + (fx.dir / "mf.json").string() + " --out " + fx.out("mf")) == 0);
  CHECK(fs::exists(fx.out("mf/checkpoint.ckpt")));
}
