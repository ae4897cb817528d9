#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rulgn/cli.hpp"
#include "rulgn/models.hpp"
#include "rulgn/runconfig.hpp"
#include "rulgn/trainer.hpp"

#include "testutil.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rulgn;
namespace fs = std::filesystem;

namespace {

// Desk-scale configuration shared by the CLI round-trip tests.
const char* kTinyConfig = R"(
# simulated process, scaled down
sim.n_steps = 60
sim.segment_length = 32
sim.train_experiments = 3
sim.test_experiments = 1

sampler.window = 0.4
sampler.min_spacing = 0.02
sampler.schedule = 1,2
sampler.eval_past_count = 4

model.latent_width = 4
model.hidden_width = 5
model.core_steps = 1
model.dropout_rate = 0.1
model.time_scale = 1.0

train.base_lr = 0.01
train.burn_in_epochs = 1
train.max_epochs = 2
train.batch_size = 8
train.samples_per_experiment = 4
)";

std::string write_config(const fs::path& dir) {
  const std::string path = (dir / "tiny.conf").string();
  std::ofstream os(path);
  os << kTinyConfig;
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  testutil::TempDir dir("rulgn-conf");
  const std::string path = write_config(dir.path());
  RunConfig cfg = RunConfig::from_file(path);
  CHECK(cfg.sim.n_steps == 60);
  CHECK(cfg.sampler.schedule == std::vector<int>{1, 2});
  CHECK(cfg.model.time_scale == 1.0);
  CHECK(cfg.train.max_epochs == 2);

  RunConfig bad;
  CHECK_THROWS_AS(bad.apply("nope.key", "1"), std::invalid_argument);
  CHECK_THROWS_AS(bad.apply("sim.n_steps", "abc"), std::invalid_argument);
  CHECK_THROWS_AS(RunConfig::from_file((dir.path() / "missing.conf").string()),
                  std::invalid_argument);
}

TEST_CASE("simulate then train then evaluate then plot") {
  testutil::TempDir dir("rulgn-cli");
  const std::string conf = write_config(dir.path());
  const std::string data = (dir.path() / "data").string();
  const std::string run = (dir.path() / "run").string();
  const std::string eval_dir = (dir.path() / "eval").string();
  const std::string plots = (dir.path() / "plots").string();

  REQUIRE(cli_run({"simulate", "--config", conf, "--out", data, "--seed", "5"}) == 0);
  CHECK(fs::exists(fs::path(data) / "summary.csv"));
  CHECK(fs::exists(fs::path(data) / "train"));
  int train_dirs = 0;
  for (const auto& e : fs::directory_iterator(fs::path(data) / "train")) {
    train_dirs += e.is_directory();
  }
  CHECK(train_dirs == 3);

  REQUIRE(cli_run({"train", "--config", conf, "--data", data, "--out", run, "--seed", "5",
                   "--model", "gnn-tcnn"}) == 0);
  CHECK(fs::exists(fs::path(run) / "model.bin"));
  CHECK(fs::exists(fs::path(run) / "model.manifest.txt"));
  CHECK(fs::exists(fs::path(run) / "model.config.txt"));
  {
    std::ifstream is(fs::path(run) / "history.csv");
    std::string header;
    std::getline(is, header);
    CHECK(header == "epoch,lr,train_nll,val_nll,n_past");
    int rows = 0;
    std::string line;
    while (std::getline(is, line)) rows += !line.empty();
    CHECK(rows == 2);
  }

  REQUIRE(cli_run({"evaluate", "--config", conf, "--checkpoint", run, "--data", data, "--out",
                   eval_dir, "--seed", "5", "--n-past", "2"}) == 0);
  CHECK(fs::exists(fs::path(eval_dir) / "report.csv"));
  CHECK(fs::exists(fs::path(eval_dir) / "report_summary.csv"));
  auto rows = read_report_csv((fs::path(eval_dir) / "report.csv").string());
  CHECK(!rows.empty());

  // reports for different past counts stay comparable: same anchors, same schema
  for (int n_past : {1, 3}) {
    const std::string dir_np = (dir.path() / ("eval_np" + std::to_string(n_past))).string();
    REQUIRE(cli_run({"evaluate", "--config", conf, "--checkpoint", run, "--data", data, "--out",
                     dir_np, "--seed", "5", "--n-past", std::to_string(n_past)}) == 0);
    auto np_rows = read_report_csv((fs::path(dir_np) / "report.csv").string());
    REQUIRE(np_rows.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
      CHECK(np_rows[i].experiment == rows[i].experiment);
      CHECK(np_rows[i].timestamp == rows[i].timestamp);
      CHECK(np_rows[i].true_rul == rows[i].true_rul);
    }
  }

  REQUIRE(cli_run({"plot", "--report", (fs::path(eval_dir) / "report.csv").string(), "--out",
                   plots}) == 0);
  int svgs = 0;
  for (const auto& e : fs::directory_iterator(plots)) {
    svgs += e.path().extension() == ".svg";
  }
  CHECK(svgs == 1);  // one test experiment in the report

  // band edges in the SVG come verbatim from the q05/q95 columns
  const std::string svg = slurp(fs::directory_iterator(plots)->path());
  CHECK(svg.find("polygon") != std::string::npos);
  CHECK(svg.find("RUL") != std::string::npos);
}

TEST_CASE("simulate with no config uses the full defaults") {
  testutil::TempDir dir("rulgn-cli-default");
  const std::string data = (dir.path() / "data").string();
  REQUIRE(cli_run({"simulate", "--out", data, "--seed", "2"}) == 0);
  int train_dirs = 0, test_dirs = 0;
  for (const auto& e : fs::directory_iterator(fs::path(data) / "train")) {
    train_dirs += e.is_directory();
  }
  for (const auto& e : fs::directory_iterator(fs::path(data) / "test")) {
    test_dirs += e.is_directory();
  }
  CHECK(train_dirs == 12);
  CHECK(test_dirs == 3);
}

TEST_CASE("the recurrent baseline trains from the command line") {
  testutil::TempDir dir("rulgn-cli-lstm");
  const std::string conf = write_config(dir.path());
  const std::string data = (dir.path() / "data").string();
  const std::string run = (dir.path() / "run").string();
  REQUIRE(cli_run({"simulate", "--config", conf, "--out", data, "--seed", "9"}) == 0);
  REQUIRE(cli_run({"train", "--config", conf, "--data", data, "--out", run, "--seed", "9",
                   "--model", "lstm-tcnn"}) == 0);
  LoadedModel m = load_model(run);
  CHECK(m.kind == ModelKind::LstmTcnn);
  CHECK(cli_run({"train", "--config", conf, "--data", data, "--out", run, "--model",
                 "unknown-model"}) == 2);
}

TEST_CASE("byte-identical outputs under a fixed seed") {
  testutil::TempDir dir("rulgn-cli-det");
  const std::string conf = write_config(dir.path());

  auto one_round = [&](const std::string& tag) {
    const std::string data = (dir.path() / ("data" + tag)).string();
    const std::string run = (dir.path() / ("run" + tag)).string();
    const std::string ev = (dir.path() / ("eval" + tag)).string();
    REQUIRE(cli_run({"simulate", "--config", conf, "--out", data, "--seed", "11"}) == 0);
    REQUIRE(cli_run({"train", "--config", conf, "--data", data, "--out", run, "--seed", "11"}) == 0);
    REQUIRE(cli_run({"evaluate", "--config", conf, "--checkpoint", run, "--data", data, "--out",
                     ev, "--seed", "11", "--n-past", "2"}) == 0);
    return std::tuple{slurp(fs::path(data) / "summary.csv"), slurp(fs::path(run) / "history.csv"),
                      slurp(fs::path(ev) / "report.csv")};
  };

  auto a = one_round("A");
  auto b = one_round("B");
  CHECK(std::get<0>(a) == std::get<0>(b));
  CHECK(std::get<1>(a) == std::get<1>(b));
  CHECK(std::get<2>(a) == std::get<2>(b));
  CHECK(!std::get<2>(a).empty());
}

TEST_CASE("exit codes") {
  testutil::TempDir dir("rulgn-cli-err");
  // bad config -> 2
  const std::string bad = (dir.path() / "bad.conf").string();
  {
    std::ofstream os(bad);
    os << "sim.unknown = 3\n";
  }
  CHECK(cli_run({"simulate", "--config", bad, "--out", (dir.path() / "x").string()}) == 2);

  // missing dataset -> 2
  CHECK(cli_run({"train", "--data", (dir.path() / "absent").string(), "--out",
                 (dir.path() / "y").string()}) == 2);

  // unknown flag -> 2
  CHECK(cli_run({"simulate", "--nope"}) == 2);

  // plot with a missing report -> 2
  CHECK(cli_run({"plot", "--report", (dir.path() / "no.csv").string()}) == 2);

  // evaluate with an incompatible checkpoint -> 2
  const std::string conf = write_config(dir.path());
  const std::string data = (dir.path() / "data").string();
  const std::string run = (dir.path() / "run").string();
  REQUIRE(cli_run({"simulate", "--config", conf, "--out", data, "--seed", "3"}) == 0);
  REQUIRE(cli_run({"train", "--config", conf, "--data", data, "--out", run, "--seed", "3"}) == 0);
  const std::string other = (dir.path() / "other").string();
  const std::string conf2 = (dir.path() / "tiny2.conf").string();
  {
    std::ofstream os(conf2);
    os << kTinyConfig << "\nsim.segment_length = 64\n";
  }
  REQUIRE(cli_run({"simulate", "--config", conf2, "--out", other, "--seed", "3"}) == 0);
  CHECK(cli_run({"evaluate", "--config", conf2, "--checkpoint", run, "--data", other, "--out",
                 (dir.path() / "z").string()}) == 2);
}
