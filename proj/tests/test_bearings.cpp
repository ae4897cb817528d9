#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "rulgn/bearings.hpp"

#include "testutil.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

using namespace rulgn;
namespace fs = std::filesystem;

namespace {

// Writes one delimited segment file; `style` varies the column layout the
// way public copies of such datasets do.
void write_segment(const fs::path& file, int samples, int style, double base_clock,
                   std::mt19937_64& rng) {
  std::ofstream os(file);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < samples; ++i) {
    const double h = u(rng), v = u(rng);
    switch (style) {
      case 0:  // plain two columns, space separated
        os << h << " " << v << "\n";
        break;
      case 1: {  // clock fields then accelerations, comma separated
        const double t = base_clock;
        const int hour = static_cast<int>(t / 3600);
        const int min = static_cast<int>((t - hour * 3600) / 60);
        const double sec = t - hour * 3600 - min * 60;
        os << hour << "," << min << "," << static_cast<int>(sec) << ","
           << static_cast<int>((sec - static_cast<int>(sec)) * 1e6) << "," << h << "," << v
           << "\n";
        break;
      }
      default:  // semicolon separated
        os << h << ";" << v << "\n";
        break;
    }
  }
}

void write_experiment(const fs::path& dir, int n_segments, int samples, int style,
                      double spacing = 10.0) {
  fs::create_directories(dir);
  std::mt19937_64 rng(n_segments * 131 + style);
  char buf[32];
  for (int k = 0; k < n_segments; ++k) {
    std::snprintf(buf, sizeof(buf), "acc_%05d.csv", k + 1);
    write_segment(dir / buf, samples, style, 100.0 + k * spacing, rng);
  }
}

SplitTable fixture_split() {
  SplitTable t;
  t["f_1"] = SplitEntry{SplitSet::Train, "A", 40.0, 5};
  t["f_2"] = SplitEntry{SplitSet::Test, "B", 20.0, 3};
  return t;
}

}  // namespace

TEST_CASE("default split matches the bundled assignment") {
  SplitTable t = default_split();
  REQUIRE(t.size() == 17);

  std::set<std::string> train, test;
  for (const auto& [id, e] : t) (e.set == SplitSet::Train ? train : test).insert(id);
  CHECK(train == std::set<std::string>{"1_2", "1_3", "1_4", "1_5", "2_1", "2_5", "2_6", "3_3"});
  CHECK(test.size() == 9);

  CHECK(t.at("1_3").failure_time == 23740);
  CHECK(t.at("1_3").expected_obs == 2375);
  CHECK(t.at("2_7").failure_time == 2290);
  CHECK(t.at("2_7").expected_obs == 230);
  CHECK(t.at("1_1").failure_time == 28072);
  CHECK(t.at("3_1").condition == "C");
  CHECK(t.at("3_2").condition == "C");
  CHECK(t.at("3_3").condition == "C");

  // condition histogram per the conditions table: 7 A, 7 B, 3 C
  int a = 0, b = 0, c = 0;
  for (const auto& [id, e] : t) {
    a += e.condition == "A";
    b += e.condition == "B";
    c += e.condition == "C";
  }
  CHECK(a == 7);
  CHECK(b == 7);
  CHECK(c == 3);
}

TEST_CASE("loads fixtures with decreasing RUL") {
  testutil::TempDir dir("rulgn-femto");
  FemtoOptions opt;
  opt.samples_per_segment = 32;
  write_experiment(dir.path() / "f_1", 5, 32, 0);
  write_experiment(dir.path() / "Bearingf_2", 3, 32, 2);  // alternate dir naming

  FemtoDataset ds = load_femto(dir.str(), fixture_split(), opt);
  REQUIRE(ds.train.size() == 1);
  REQUIRE(ds.test.size() == 1);

  const Experiment& tr = ds.train[0];
  CHECK(tr.id == "f_1");
  CHECK(tr.condition == "A");
  CHECK(tr.num_observations() == 5);
  CHECK(tr.timestamps == std::vector<double>{0, 10, 20, 30, 40});
  for (int k = 0; k < 5; ++k) CHECK(tr.rul_at(k) == doctest::Approx(40.0 - 10.0 * k));
  CHECK(tr.segments[0].shape() == std::vector<int>{2, 32});

  const Experiment& te = ds.test[0];
  CHECK(te.num_observations() == 3);
  double prev = te.rul_at(0);
  for (int k = 1; k < 3; ++k) {
    CHECK(te.rul_at(k) < prev);
    prev = te.rul_at(k);
  }
}

TEST_CASE("in-file clock fields override the nominal spacing") {
  testutil::TempDir dir("rulgn-femto-clock");
  FemtoOptions opt;
  opt.samples_per_segment = 16;
  opt.segment_spacing = 10.0;
  // clock advances 7.5 s per segment, so timestamps should follow the clock
  write_experiment(dir.path() / "f_2", 3, 16, 1, 7.5);
  SplitTable split;
  split["f_2"] = SplitEntry{SplitSet::Test, "B", 20.0, 3};
  FemtoDataset ds = load_femto(dir.str(), split, opt);
  REQUIRE(ds.test.size() == 1);
  CHECK(ds.test[0].timestamps[0] == doctest::Approx(0.0));
  CHECK(ds.test[0].timestamps[1] == doctest::Approx(7.5).epsilon(1e-4));
  CHECK(ds.test[0].timestamps[2] == doctest::Approx(15.0).epsilon(1e-4));
}

TEST_CASE("error paths") {
  testutil::TempDir dir("rulgn-femto-err");
  FemtoOptions opt;
  opt.samples_per_segment = 16;

  // missing experiment directory
  CHECK_THROWS_WITH_AS(load_femto(dir.str(), fixture_split(), opt),
                       doctest::Contains("missing"), std::runtime_error);

  // malformed row names file and line
  {
    fs::path d = dir.path() / "f_1";
    write_experiment(d, 5, 16, 0);
    std::ofstream os(d / "acc_00003.csv", std::ios::app);
    os << "0.1 not-a-number\n";
    os.close();
    SplitTable one;
    one["f_1"] = SplitEntry{SplitSet::Train, "A", 40.0, 5};
    CHECK_THROWS_WITH_AS(load_femto(dir.str(), one, opt), doctest::Contains("acc_00003.csv:17"),
                         std::runtime_error);
  }

  // wrong segment length
  {
    fs::path d = dir.path() / "f_3";
    write_experiment(d, 2, 12, 0);
    SplitTable one;
    one["f_3"] = SplitEntry{SplitSet::Train, "A", 10.0, 2};
    CHECK_THROWS_WITH_AS(load_femto(dir.str(), one, opt), doctest::Contains("12 samples"),
                         std::runtime_error);
  }
}

TEST_CASE("count mismatch tolerance") {
  testutil::TempDir dir("rulgn-femto-count");
  FemtoOptions opt;
  opt.samples_per_segment = 16;
  write_experiment(dir.path() / "f_1", 4, 16, 0);  // split expects 5

  SplitTable one;
  one["f_1"] = SplitEntry{SplitSet::Train, "A", 40.0, 5};
  // off by one: tolerated by default
  FemtoDataset ds = load_femto(dir.str(), one, opt);
  CHECK(ds.train[0].num_observations() == 4);

  // strict mode turns the warning into an error
  FemtoOptions strict = opt;
  strict.strict_counts = true;
  CHECK_THROWS_AS(load_femto(dir.str(), one, strict), std::runtime_error);

  // off by three always errors
  one["f_1"].expected_obs = 7;
  CHECK_THROWS_AS(load_femto(dir.str(), one, opt), std::runtime_error);
}
