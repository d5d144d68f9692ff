#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <Eigen/Dense>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "manyboot/bootstrap.hpp"
#include "manyboot/csvio.hpp"
#include "manyboot/estimators.hpp"
#include "manyboot/projection.hpp"
#include "manyboot/rng.hpp"
#include "manyboot/simulation.hpp"

using json = nlohmann::json;
using namespace manyboot;

namespace {

const std::string kBin = MANYBOOT_BIN;

std::string tmp_dir() {
  static std::string dir = [] {
    std::string d = "/tmp/manyboot_cli_" + std::to_string(::getpid());
    std::filesystem::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path_in_tmp(const std::string& name) {
  return tmp_dir() + "/" + name;
}

int shell(const std::string& cmd) {
  int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  if (WIFEXITED(rc)) return WEXITSTATUS(rc);
  return -2;
}

// Runs the tool, discarding output unless a capture path is given.
int run_tool(const std::string& args, const std::string& capture = "") {
  std::string sink = capture.empty() ? "/dev/null" : capture;
  return shell(kBin + " " + args + " > " + sink + " 2>&1");
}

json load_json(const std::string& path) {
  return json::parse(read_text_file(path));
}

std::string control_list(int from, int to) {
  std::string out;
  for (int j = from; j <= to; ++j) {
    if (!out.empty()) out += ",";
    out += "w" + std::to_string(j);
  }
  return out;
}

Eigen::MatrixXd binary_controls(long n, long q, std::uint64_t seed) {
  Stream s(derive(master_key(seed), Purpose::Design, 0));
  Eigen::MatrixXd W(n, q);
  W.col(0).setOnes();
  for (long j = 1; j < q; ++j) {
    for (long i = 0; i < n; ++i) W(i, j) = s.bernoulli(0.5);
  }
  return W;
}

Eigen::VectorXd normal_vector(long n, std::uint64_t seed) {
  Stream s(derive(master_key(seed), Purpose::Noise, 0));
  Eigen::VectorXd v(n);
  for (long i = 0; i < n; ++i) v[i] = s.normal();
  return v;
}

struct Pipeline {
  ProjectionContext ctx;
  PartialledRegressors pr;
  FitResult fit;
};

Pipeline run_pipeline(const Dataset& d) {
  Pipeline p;
  p.ctx = build_projection(d.W);
  p.pr = partial_out(p.ctx, d.X);
  p.fit = fit_ols(d, p.ctx, p.pr);
  return p;
}

bool close(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max(1.0, std::max(std::abs(a),
                                                         std::abs(b)));
}

}  // namespace

TEST_CASE("infer reproduces the library pipeline on a simulated dataset") {
  SimulationDesign design = make_design(DesignVariant::A, 0.3);
  long redraws = 0;
  Dataset d = draw_design(design, 0, &redraws);
  std::string csv_path = path_in_tmp("fidelity.csv");
  write_text_file(csv_path, dataset_to_csv(d));

  std::string out_path = path_in_tmp("fidelity.json");
  // w1 is the file's constant column; the tool prepends its own intercept,
  // so pass only the dummies.
  int rc = run_tool("infer --data " + csv_path +
                    " --y y --x x1 --controls " + control_list(2, 30) +
                    " --beta0 1.0 --B 99 --seed 7 --out " + out_path);
  REQUIRE(rc == 0);
  json rep = load_json(out_path);

  CHECK(rep["schema_version"] == 1);
  CHECK(rep["n"] == 100);
  CHECK(rep["q"] == 30);
  CHECK(rep["d_x"] == 1);
  CHECK(rep["rows_rejected"] == 0);
  CHECK(rep["seed"] == 7);
  CHECK(rep["null_value"] == 1.0);
  CHECK(rep["dropped_controls"].empty());

  Pipeline p = run_pipeline(d);
  CHECK(close(rep["estimate"], p.fit.beta[0], 1e-12));
  AdjustmentFactor adj = adjustment_factor(d, p.ctx, p.pr, 1.0);
  CHECK(close(rep["a_n"], adj.a_n, 1e-12));
  CHECK(rep["guard_active"] == adj.guard_active);

  for (Method m : {Method::HC0, Method::HCK, Method::HCA}) {
    TestResult t = t_test(d, p.ctx, p.pr, p.fit, m, 1.0);
    const json& mj = rep["methods"][method_name(m)];
    CHECK(close(mj["se"], t.se, 1e-12));
    CHECK(close(mj["t"], t.t, 1e-12));
    CHECK(close(mj["p"], t.p, 1e-12));
    CHECK(mj["reject"] == t.reject);
  }
  for (Method m : {Method::WildG, Method::WildR}) {
    BootstrapConfig cfg;
    cfg.B = 99;
    cfg.weights = m == Method::WildG ? WeightScheme::Gaussian
                                     : WeightScheme::Rademacher;
    std::uint64_t idx = m == Method::WildG ? 0 : 1;
    cfg.seed = derive(master_key(7), Purpose::Weights, idx).state;
    BootstrapOutcome b = wild_bootstrap_test(d, p.ctx, p.pr, p.fit, 1.0, cfg);
    const json& mj = rep["methods"][method_name(m)];
    CHECK(mj["p"] == b.p_value);
    CHECK(mj["reject"] == b.reject);
    CHECK(close(mj["stat"], b.stat_obs, 1e-12));
  }
}

TEST_CASE("rerunning infer with the same seed writes identical bytes") {
  SimulationDesign design = make_design(DesignVariant::A, 0.2);
  long redraws = 0;
  Dataset d = draw_design(design, 1, &redraws);
  std::string csv_path = path_in_tmp("rerun.csv");
  write_text_file(csv_path, dataset_to_csv(d));
  std::string out1 = path_in_tmp("rerun1.json");
  std::string out2 = path_in_tmp("rerun2.json");
  std::string args = "infer --data " + csv_path + " --y y --x x1 --controls " +
                     control_list(2, 20) +
                     " --beta0 1.0 --B 49 --seed 3 --out ";
  REQUIRE(run_tool(args + out1) == 0);
  REQUIRE(run_tool(args + out2) == 0);
  CHECK(read_text_file(out1) == read_text_file(out2));
}

TEST_CASE("a duplicated constant control is rank-dropped and named") {
  SimulationDesign design = make_design(DesignVariant::A, 0.3);
  long redraws = 0;
  Dataset d = draw_design(design, 0, &redraws);
  std::string csv_path = path_in_tmp("dupe.csv");
  write_text_file(csv_path, dataset_to_csv(d));
  std::string out_path = path_in_tmp("dupe.json");
  // all-others pulls in w1, the file's constant column, duplicating the
  // prepended intercept.
  int rc = run_tool("infer --data " + csv_path +
                    " --y y --x x1 --controls all-others" +
                    " --beta0 1.0 --B 29 --seed 7 --out " + out_path);
  REQUIRE(rc == 0);
  json rep = load_json(out_path);
  CHECK(rep["q"] == 30);
  REQUIRE(rep["dropped_controls"].size() == 1);
  std::string dropped = rep["dropped_controls"][0];
  CHECK((dropped == "(intercept)" || dropped == "w1"));

  // Same column span, so the estimate matches the clean parameterization.
  Pipeline p = run_pipeline(d);
  CHECK(close(rep["estimate"], p.fit.beta[0], 1e-9));
}

TEST_CASE("incomplete rows are dropped and counted") {
  std::string csv =
      "y,x1,w1\n"
      "1,2,0\n"
      ",3,1\n"
      "2,1,1\n"
      "0.5,0.5,0\n"
      "-1,-2,1\n";
  std::string csv_path = path_in_tmp("holes.csv");
  write_text_file(csv_path, csv);
  std::string out_path = path_in_tmp("holes.json");
  int rc = run_tool("infer --data " + csv_path +
                    " --y y --x x1 --controls w1 --B 19 --seed 2 --out " +
                    out_path);
  REQUIRE(rc == 0);
  json rep = load_json(out_path);
  CHECK(rep["n"] == 4);
  CHECK(rep["rows_rejected"] == 1);
  CHECK(rep["q"] == 2);
}

TEST_CASE("input problems exit with code 2") {
  std::string csv_path = path_in_tmp("small.csv");
  write_text_file(csv_path, "y,x1,w1\n1,2,0\n2,1,1\n3,0,1\n");

  // Missing column.
  CHECK(run_tool("infer --data " + csv_path + " --y z --x x1 --out " +
                 path_in_tmp("e1.json")) == 2);

  // Non-numeric cell.
  std::string bad_path = path_in_tmp("bad.csv");
  write_text_file(bad_path, "y,x1\n1,abc\n2,1\n3,0\n");
  CHECK(run_tool("infer --data " + bad_path + " --y y --x x1 --out " +
                 path_in_tmp("e2.json")) == 2);

  // Header-only file: no complete rows.
  std::string empty_path = path_in_tmp("empty.csv");
  write_text_file(empty_path, "y,x1\n");
  CHECK(run_tool("infer --data " + empty_path + " --y y --x x1 --out " +
                 path_in_tmp("e3.json")) == 2);

  // Unknown flag.
  CHECK(run_tool("infer --data " + csv_path +
                 " --y y --x x1 --nonsense 5 --out " + path_in_tmp("e4.json")) ==
        2);

  // Two regressors need an explicit constraint.
  std::string two_path = path_in_tmp("two.csv");
  write_text_file(two_path, "y,x1,x2\n1,2,0\n2,1,1\n3,0,1\n0,1,2\n");
  CHECK(run_tool("infer --data " + two_path + " --y y --x x1,x2 --out " +
                 path_in_tmp("e5.json")) == 2);

  // Nonexistent input file.
  CHECK(run_tool("infer --data " + path_in_tmp("nope.csv") +
                 " --y y --x x1 --out " + path_in_tmp("e6.json")) == 2);
}

TEST_CASE("numerical degeneracy exits with code 3") {
  // y = 2x + 3 exactly: at the true slope nothing is left after projecting
  // out the intercept, so there is no residual scale to bootstrap from.
  std::string csv = "y,x1\n";
  for (int i = 1; i <= 10; ++i) {
    csv += std::to_string(2 * i + 3) + "," + std::to_string(i) + "\n";
  }
  std::string csv_path = path_in_tmp("exact.csv");
  write_text_file(csv_path, csv);
  CHECK(run_tool("infer --data " + csv_path + " --y y --x x1 --beta0 2 --out " +
                 path_in_tmp("e7.json")) == 3);
}

TEST_CASE("HCK reports its fallback through the JSON output") {
  SimulationDesign design = make_design(DesignVariant::A, 0.9);
  long redraws = 0;
  Dataset d = draw_design(design, 0, &redraws);
  std::string csv_path = path_in_tmp("crowded.csv");
  write_text_file(csv_path, dataset_to_csv(d));
  std::string out_path = path_in_tmp("crowded.json");
  int rc = run_tool("infer --data " + csv_path +
                    " --y y --x x1 --controls " + control_list(2, 90) +
                    " --beta0 1.0 --methods hck,hc0 --B 19 --seed 4 --out " +
                    out_path);
  REQUIRE(rc == 0);
  json rep = load_json(out_path);
  CHECK(rep["methods"]["HCK"]["hck_fallback"] == true);
  CHECK(rep["methods"]["HCK"]["se"] == rep["methods"]["HC0"]["se"]);
}

TEST_CASE("a linear constraint on two regressors is tested as its scalar "
          "combination") {
  Dataset d;
  d.W = binary_controls(60, 6, 41);
  d.X.resize(60, 2);
  d.X.col(0) = normal_vector(60, 42);
  d.X.col(1) = normal_vector(60, 43);
  d.y = 1.5 * d.X.col(0) - 0.5 * d.X.col(1) + normal_vector(60, 44);
  std::string csv_path = path_in_tmp("pair.csv");
  write_text_file(csv_path, dataset_to_csv(d));
  std::string out_path = path_in_tmp("pair.json");
  int rc = run_tool("infer --data " + csv_path +
                    " --y y --x x1,x2 --controls " + control_list(2, 6) +
                    " --constraint 1,-1=0.5 --methods hc0,wild-g --B 49" +
                    " --seed 9 --out " + out_path);
  REQUIRE(rc == 0);
  json rep = load_json(out_path);
  CHECK(rep["d_x"] == 2);
  CHECK(rep["null_value"] == 0.5);
  CHECK(rep["q"] == 7);  // six controls plus the absorbed second direction

  Eigen::VectorXd c(2);
  c << 1, -1;
  auto [reduced, null_value] = scalarize_constraint(d, c, 0.5);
  Pipeline p = run_pipeline(reduced);
  CHECK(close(rep["estimate"], p.fit.beta[0], 1e-9));

  BootstrapConfig cfg;
  cfg.B = 49;
  cfg.seed = derive(master_key(9), Purpose::Weights, 0).state;
  BootstrapOutcome b =
      wild_bootstrap_test(reduced, p.ctx, p.pr, p.fit, null_value, cfg);
  CHECK(rep["methods"]["Wild-G"]["p"] == b.p_value);
}

TEST_CASE("percentile and score modes agree on scalar problems across the CLI") {
  SimulationDesign design = make_design(DesignVariant::B, 0.2);
  long redraws = 0;
  Dataset d = draw_design(design, 2, &redraws);
  std::string csv_path = path_in_tmp("modes.csv");
  write_text_file(csv_path, dataset_to_csv(d));
  std::string pct_path = path_in_tmp("modes_pct.json");
  std::string score_path = path_in_tmp("modes_score.json");
  std::string common = "infer --data " + csv_path +
                       " --y y --x x1 --controls " + control_list(2, 20) +
                       " --beta0 1.0 --methods wild-r --B 99 --seed 6 ";
  REQUIRE(run_tool(common + "--mode percentile --out " + pct_path) == 0);
  REQUIRE(run_tool(common + "--mode score --out " + score_path) == 0);
  json pct = load_json(pct_path);
  json sc = load_json(score_path);
  CHECK(pct["mode"] == "percentile");
  CHECK(sc["mode"] == "score");
  double p1 = pct["methods"]["Wild-R"]["p"];
  double p2 = sc["methods"]["Wild-R"]["p"];
  CHECK(p1 >= 0.0);
  CHECK(p1 <= 1.0);
  CHECK(p1 == p2);
}

TEST_CASE("the seed falls back to the environment variable") {
  SimulationDesign design = make_design(DesignVariant::A, 0.2);
  long redraws = 0;
  Dataset d = draw_design(design, 3, &redraws);
  std::string csv_path = path_in_tmp("envseed.csv");
  write_text_file(csv_path, dataset_to_csv(d));
  std::string flag_path = path_in_tmp("envseed_flag.json");
  std::string env_path = path_in_tmp("envseed_env.json");
  std::string tail = " --y y --x x1 --controls " + control_list(2, 20) +
                     " --beta0 1.0 --methods wild-g --B 49 --out ";
  REQUIRE(run_tool("infer --data " + csv_path + tail + flag_path +
                   " --seed 11") == 0);
  REQUIRE(shell("MANYBOOT_SEED=11 " + kBin + " infer --data " + csv_path +
                tail + env_path + " > /dev/null 2>&1") == 0);
  json a = load_json(flag_path);
  json b = load_json(env_path);
  CHECK(a["seed"] == 11);
  CHECK(b["seed"] == 11);
  CHECK(a["methods"]["Wild-G"]["p"] == b["methods"]["Wild-G"]["p"]);
}

TEST_CASE("simulate writes its three outputs and is worker-invariant" *
          doctest::timeout(600)) {
  std::string prefix1 = path_in_tmp("sim1");
  std::string prefix2 = path_in_tmp("sim2");
  std::string common = "simulate --design A --ratios 0.2 --reps 20 --B 19"
                       " --methods hc0,wild-g --seed 5 --out ";
  REQUIRE(run_tool(common + prefix1 + " --workers 2") == 0);
  REQUIRE(run_tool(common + prefix2 + " --workers 4") == 0);

  std::string csv1 = read_text_file(prefix1 + ".csv");
  std::string csv2 = read_text_file(prefix2 + ".csv");
  CHECK(csv1 == csv2);
  CHECK(csv1.rfind("design,", 0) == 0);

  std::string text = read_text_file(prefix1 + ".txt");
  CHECK(text.find("Design A") != std::string::npos);
  CHECK(text.find("HC0") != std::string::npos);

  json meta = load_json(prefix1 + ".json");
  CHECK(meta["design"] == "A");
  CHECK(meta["reps"] == 20);
  CHECK(meta["B"] == 19);
  CHECK(meta["seed"] == 5);
  CHECK(meta["workers"] == 2);
  CHECK(meta["wall_seconds"].get<double>() >= 0.0);
}

TEST_CASE("report merges CSVs and compares against the bundled references") {
  std::string prefix = path_in_tmp("rep");
  REQUIRE(run_tool("simulate --design A --ratios 0.2 --reps 20 --B 19"
                   " --methods hc0,wild-g --seed 5 --workers 1 --out " +
                   prefix) == 0);
  std::string merged_path = path_in_tmp("merged.csv");
  REQUIRE(run_tool("report " + prefix + ".csv " + prefix + ".csv --out " +
                   merged_path) == 0);
  SimulationReport merged = report_from_csv(read_text_file(merged_path));
  SimulationReport single = report_from_csv(read_text_file(prefix + ".csv"));
  CHECK(merged.rows.size() == 2 * single.rows.size());

  std::string table_path = path_in_tmp("compare.txt");
  REQUIRE(run_tool("report " + prefix + ".csv --compare-paper", table_path) ==
          0);
  std::string table = read_text_file(table_path);
  CHECK(table.find("ref") != std::string::npos);
  CHECK(table.find("0.097") != std::string::npos);  // A, 0.2, HC0 reference
  CHECK(table.find("0.046") != std::string::npos);  // A, 0.2, Wild-G reference

  // A missing path is an input error.
  CHECK(run_tool("report " + path_in_tmp("absent.csv")) == 2);
}
