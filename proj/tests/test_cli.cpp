#include "lowrankseg/cli.hpp"
#include "lowrankseg/data.hpp"
#include "lowrankseg/linalg.hpp"
#include "lowrankseg/record.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace {

using namespace lowrankseg;
using cli::Json;

struct Outcome {
  int code = 0;
  std::string out;
  std::string err;
  Json json() const { return Json::parse(out); }
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "lowrankseg");
  std::ostringstream out, err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() /
                   ("lowrankseg_cli_" +
                    std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
  std::filesystem::create_directories(dir);
  return dir;
}

TEST(ParseGrid, InclusiveRange) {
  const auto g = cli::parse_grid("0.1:0.1:1.0");
  ASSERT_EQ(g.size(), 10u);
  EXPECT_EQ(g.front(), 0.1);
  EXPECT_EQ(g[2], 0.3);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_EQ(cli::parse_grid("0:0.05:0.5").size(), 11u);
}

TEST(ParseGrid, ListAndSingle) {
  EXPECT_EQ(cli::parse_grid("0.5,1,2"), (std::vector<double>{0.5, 1.0, 2.0}));
  EXPECT_EQ(cli::parse_grid("0.12"), (std::vector<double>{0.12}));
}

TEST(ParseGrid, Errors) {
  EXPECT_THROW(cli::parse_grid(""), ParameterError);
  EXPECT_THROW(cli::parse_grid("1:0.1:0.5"), ParameterError);
  EXPECT_THROW(cli::parse_grid("0:0:1"), ParameterError);
  EXPECT_THROW(cli::parse_grid("0:1"), ParameterError);
  EXPECT_THROW(cli::parse_grid("a,b"), std::invalid_argument);
}

TEST(ParseIntList, Values) {
  EXPECT_EQ(cli::parse_int_list("100,500"), (std::vector<int>{100, 500}));
  EXPECT_THROW(cli::parse_int_list("1.5"), ParameterError);
}

TEST(WorkerThreads, Environment) {
  ::unsetenv("LOWRANKSEG_THREADS");
  EXPECT_EQ(cli::worker_threads(), 1u);
  ::setenv("LOWRANKSEG_THREADS", "3", 1);
  EXPECT_EQ(cli::worker_threads(), 3u);
  ::setenv("LOWRANKSEG_THREADS", "zero", 1);
  EXPECT_EQ(cli::worker_threads(), 1u);
  ::unsetenv("LOWRANKSEG_THREADS");
}

TEST(Record, StripVolatileAtAnyDepth) {
  Json j = {{"timing", 1}, {"a", {{"timing", 2}, {"b", 3}}}, {"started_at", "x"},
            {"rows", Json::array({Json{{"finished_at", 1}, {"c", 4}}})}};
  const Json s = cli::strip_volatile(j);
  EXPECT_FALSE(s.contains("timing"));
  EXPECT_FALSE(s.contains("started_at"));
  EXPECT_FALSE(s["a"].contains("timing"));
  EXPECT_EQ(s["a"]["b"], 3);
  EXPECT_FALSE(s["rows"][0].contains("finished_at"));
  EXPECT_EQ(s["rows"][0]["c"], 4);
}

TEST(Record, Fields) {
  cli::Record rec("solve", {"lowrankseg", "solve"});
  rec.params()["x"] = 1;
  const Json& j = rec.finish();
  for (const char* key : {"command", "version", "argv", "params", "started_at", "finished_at"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["command"], "solve");
  EXPECT_EQ(j["version"], std::string(cli::kVersion));
}

TEST(Cli, NoSubcommandOrBadFlag) {
  EXPECT_EQ(run_cli({}).code, cli::kExitInputError);
  const Outcome bad = run_cli({"solve", "--toy", "--bogus"});
  EXPECT_EQ(bad.code, cli::kExitInputError);
  EXPECT_NE(bad.err.find("Usage"), std::string::npos);
  EXPECT_EQ(run_cli({"--version"}).code, cli::kExitOk);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}

TEST(CliSolve, CleanToyPsd) {
  const Outcome o = run_cli({"solve", "--toy", "--seed", "1", "--lambda", "1.0", "--psd"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const Json j = o.json();
  EXPECT_EQ(j["command"], "solve");
  const Json& res = j["results"];
  EXPECT_TRUE(res["solver"]["converged"].get<bool>());
  int near_one = 0;
  for (const auto& v : res["spectrum"]["eigenvalues"]) {
    if (std::abs(v.get<double>() - 1.0) <= 1e-2) ++near_one;
  }
  EXPECT_EQ(near_one, 20);
  EXPECT_EQ(res["spectrum"]["eigen_count_above"]["0.001"], 20);
  EXPECT_EQ(res["data_rank"], 20);
  EXPECT_EQ(res["clustering"]["accuracy"], 1.0);
  EXPECT_GE(res["block_diagonal_mass"].get<double>(), 0.99);
  EXPECT_EQ(res["history"].size(), res["solver"]["iterations"].get<std::size_t>());
  EXPECT_TRUE(j["timing"].contains("solve_wall_s"));
}

TEST(CliSolve, MissingInputFile) {
  const Outcome o = run_cli({"solve", "--input", "missing.csv"});
  EXPECT_EQ(o.code, cli::kExitInputError);
  EXPECT_NE(o.err.find("missing.csv"), std::string::npos);
}

TEST(CliSolve, NeedsSomeInput) {
  EXPECT_EQ(run_cli({"solve"}).code, cli::kExitInputError);
  EXPECT_EQ(run_cli({"solve", "--toy", "--noise", "l3"}).code, cli::kExitInputError);
  EXPECT_EQ(run_cli({"solve", "--toy", "--lambda", "-1"}).code, cli::kExitInputError);
}

TEST(CliSolve, IterationCap) {
  const Outcome o =
      run_cli({"solve", "--toy", "--seed", "1", "--lambda", "1e-9", "--max-iter", "5"});
  EXPECT_EQ(o.code, cli::kExitNotConverged);
  EXPECT_FALSE(o.json()["results"]["solver"]["converged"].get<bool>());
}

TEST(CliSolve, FileInputAndDumps) {
  const auto dir = scratch_dir();
  const auto toy = data::generate_toy(2);
  data::save_matrix(dir / "x.csv", toy.x);
  const Outcome o = run_cli({"solve", "--input", (dir / "x.csv").string(), "--lambda", "1",
                             "--dump-z", (dir / "z.csv").string(), "--dump-e",
                             (dir / "e.csv").string(), "--out", (dir / "r.json").string(),
                             "--no-history"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_TRUE(o.out.empty());
  const Mat z = data::load_matrix(dir / "z.csv");
  const Mat e = data::load_matrix(dir / "e.csv");
  EXPECT_EQ(z.rows(), 100);
  EXPECT_EQ(e.rows(), 100);
  std::ifstream f(dir / "r.json");
  const Json j = Json::parse(f);
  EXPECT_FALSE(j["results"].contains("history"));
  std::filesystem::remove_all(dir);
}

TEST(CliSolve, Deterministic) {
  const std::vector<std::string> args = {"solve",      "--toy",        "--seed",     "3",
                                         "--fraction", "0.2",          "--lambda",   "0.12",
                                         "--noise",    "l1",           "--max-iter", "60"};
  const Outcome a = run_cli(args);
  const Outcome b = run_cli(args);
  EXPECT_EQ(cli::strip_volatile(a.json()).dump(), cli::strip_volatile(b.json()).dump());
}

TEST(CliSweep, SingleLambdaBothVariants) {
  const auto dir = scratch_dir();
  const Outcome o = run_cli({"spectrum-sweep", "--toy", "--seed", "1", "--lambdas", "1.0",
                             "--psd", "both", "--csv", (dir / "s.csv").string()});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const Json j = o.json();
  ASSERT_EQ(j["results"]["rows"].size(), 2u);
  ASSERT_EQ(j["results"]["cross_variant"].size(), 1u);
  EXPECT_LE(j["results"]["cross_variant"][0]["relative_difference"].get<double>(), 1e-3);
  const auto& a = j["results"]["rows"][0]["spectrum"]["eigenvalues"];
  const auto& b = j["results"]["rows"][1]["spectrum"]["eigenvalues"];
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].get<double>(), b[i].get<double>(), 1e-3);
  }
  const Mat table = data::load_matrix(dir / "s.csv");
  EXPECT_EQ(table.rows(), 2);
  EXPECT_EQ(table.cols(), 202);
  std::filesystem::remove_all(dir);
}

TEST(CliSweep, SingleVariantSingleRow) {
  const Outcome o = run_cli({"spectrum-sweep", "--toy", "--lambdas", "0.5", "--psd", "on"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_EQ(o.json()["results"]["rows"].size(), 1u);
  EXPECT_FALSE(o.json()["results"].contains("cross_variant"));
}

TEST(CliSweep, EmptyGridIsAnError) {
  EXPECT_EQ(run_cli({"spectrum-sweep", "--toy", "--lambdas", ""}).code, cli::kExitInputError);
  EXPECT_EQ(run_cli({"spectrum-sweep", "--toy", "--lambdas", "1:0.1:0.5"}).code,
            cli::kExitInputError);
  EXPECT_EQ(run_cli({"spectrum-sweep", "--toy", "--lambdas", "1", "--psd", "maybe"}).code,
            cli::kExitInputError);
}

TEST(CliSweep, NoisyPsdSpectrumConfined) {
  const Outcome o = run_cli({"spectrum-sweep", "--toy", "--seed", "2", "--lambdas", "0.12",
                             "--psd", "on", "--noise-model", "sample_specific", "--fraction",
                             "0.2", "--noise-level", "0.3"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const Json j = o.json();
  for (const auto& v : j["results"]["rows"][0]["spectrum"]["eigenvalues"]) {
    EXPECT_GE(v.get<double>(), -1e-6);
    EXPECT_LE(v.get<double>(), 1.0 + 1e-2);
  }
}

TEST(CliNoiseCompare, CleanDataIsExact) {
  const Outcome o = run_cli({"noise-compare", "--fractions", "0", "--seeds", "2"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const Json j = o.json();
  const Json& row = j["results"]["rows"][0];
  for (const char* m : {"l1", "l21"}) {
    EXPECT_EQ(row[m]["mean"], 1.0) << m;
    EXPECT_EQ(row[m]["std"], 0.0) << m;
  }
}

TEST(CliNoiseCompare, SingleSeedHasZeroStd) {
  const auto dir = scratch_dir();
  const Outcome o = run_cli({"noise-compare", "--fractions", "0.1,0.3", "--seeds", "1",
                             "--csv", (dir / "n.csv").string()});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const Json j = o.json();
  for (const auto& row : j["results"]["rows"]) {
    EXPECT_EQ(row["l1"]["std"], 0.0);
    EXPECT_EQ(row["l21"]["std"], 0.0);
  }
  const Mat table = data::load_matrix(dir / "n.csv");
  EXPECT_EQ(table.rows(), 2);
  EXPECT_EQ(table.cols(), 5);
  EXPECT_EQ(table(1, 0), 0.3);
  std::filesystem::remove_all(dir);
}

TEST(CliNoiseCompare, ThreadCountDoesNotChangeResults) {
  const std::vector<std::string> args = {"noise-compare", "--fractions", "0.2", "--seeds", "3",
                                         "--max-iter", "80"};
  ::setenv("LOWRANKSEG_THREADS", "1", 1);
  const Outcome serial = run_cli(args);
  ::setenv("LOWRANKSEG_THREADS", "3", 1);
  const Outcome threaded = run_cli(args);
  ::unsetenv("LOWRANKSEG_THREADS");
  EXPECT_EQ(cli::strip_volatile(serial.json()).dump(), cli::strip_volatile(threaded.json()).dump());
}

TEST(CliBench, OneSize) {
  const Outcome o = run_cli({"bench", "--sizes", "40", "--reps", "2"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const Json j = o.json();
  const Json& rows = j["results"]["rows"];
  ASSERT_EQ(rows.size(), 1u);
  for (const char* key : {"eig_median_s", "svd_median_s", "jstep_lrr_psd_median_s",
                          "jstep_lrr_median_s"}) {
    const double t = rows[0]["timing"][key].get<double>();
    EXPECT_GT(t, 0.0) << key;
    EXPECT_TRUE(std::isfinite(t)) << key;
  }
  EXPECT_EQ(run_cli({"bench", "--sizes", "0"}).code, cli::kExitInputError);
  EXPECT_EQ(run_cli({"bench", "--reps", "0"}).code, cli::kExitInputError);
}

TEST(CliCluster, MethodsOnCleanToy) {
  const Outcome psd = run_cli({"cluster", "--toy", "--seed", "1", "--k", "5", "--method",
                               "lrr-psd"});
  ASSERT_EQ(psd.code, cli::kExitOk) << psd.err;
  EXPECT_EQ(psd.json()["results"]["accuracy"], 1.0);
  EXPECT_EQ(psd.json()["results"]["affinity"], "psd_direct");

  const Outcome gauss = run_cli({"cluster", "--toy", "--seed", "1", "--k", "5", "--method",
                                 "gauss", "--sigma", "1"});
  ASSERT_EQ(gauss.code, cli::kExitOk) << gauss.err;
  EXPECT_LT(gauss.json()["results"]["accuracy"].get<double>(), 1.0);

  const Outcome linear = run_cli({"cluster", "--toy", "--seed", "1", "--method", "linear"});
  ASSERT_EQ(linear.code, cli::kExitOk) << linear.err;
  EXPECT_EQ(linear.json()["results"]["k"], 5);
}

TEST(CliCluster, SingleCluster) {
  const Outcome o = run_cli({"cluster", "--toy", "--k", "1", "--method", "linear"});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  const Json j = o.json();
  for (const auto& l : j["results"]["labels"]) EXPECT_EQ(l, 0);
  EXPECT_DOUBLE_EQ(o.json()["results"]["accuracy"].get<double>(), 0.2);
}

TEST(CliCluster, GaussNeedsSigma) {
  const Outcome o = run_cli({"cluster", "--toy", "--method", "gauss"});
  EXPECT_EQ(o.code, cli::kExitInputError);
  EXPECT_NE(o.err.find("sigma"), std::string::npos);
  EXPECT_EQ(run_cli({"cluster", "--toy", "--method", "kernel"}).code, cli::kExitInputError);
}

TEST(CliCluster, FileInputWithLabels) {
  const auto dir = scratch_dir();
  data::ToyOptions opts;
  opts.num_subspaces = 3;
  opts.ambient_dim = 30;
  const auto toy = data::generate_toy(5, opts);
  data::save_matrix(dir / "x.csv", toy.x);
  Mat lab(1, static_cast<Eigen::Index>(toy.labels.size()));
  for (std::size_t i = 0; i < toy.labels.size(); ++i) lab(0, static_cast<Eigen::Index>(i)) = toy.labels[i];
  data::save_matrix(dir / "y.csv", lab);
  const Outcome o = run_cli({"cluster", "--input", (dir / "x.csv").string(), "--labels",
                             (dir / "y.csv").string(), "--method", "lrr", "--dump-labels",
                             (dir / "pred.csv").string()});
  ASSERT_EQ(o.code, cli::kExitOk) << o.err;
  EXPECT_EQ(o.json()["results"]["accuracy"], 1.0);
  EXPECT_EQ(o.json()["results"]["affinity"], "abs_sym");
  EXPECT_EQ(data::load_labels(dir / "pred.csv").size(), 60u);

  data::save_matrix(dir / "short.csv", lab.leftCols(10));
  EXPECT_EQ(run_cli({"cluster", "--input", (dir / "x.csv").string(), "--labels",
                     (dir / "short.csv").string()})
                .code,
            cli::kExitInputError);
  std::filesystem::remove_all(dir);
}

}  // namespace
