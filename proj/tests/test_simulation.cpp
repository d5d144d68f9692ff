#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "manyboot/errors.hpp"
#include "manyboot/reference.hpp"
#include "manyboot/simulation.hpp"

using namespace manyboot;

TEST_CASE("design tokens parse case-insensitively and name back") {
  DesignVariant v;
  CHECK(parse_design("A", &v));
  CHECK(v == DesignVariant::A);
  CHECK(parse_design("b", &v));
  CHECK(v == DesignVariant::B);
  CHECK(parse_design("panel", &v));
  CHECK(v == DesignVariant::Panel);
  CHECK(parse_design("custom", &v));
  CHECK(v == DesignVariant::Custom);
  CHECK_FALSE(parse_design("Z", &v));
  CHECK(design_name(DesignVariant::C) == "C");
  CHECK(design_name(DesignVariant::Panel) == "panel");
}

TEST_CASE("canonical design points carry the pinned signal and dummy rates") {
  SimulationDesign a = make_design(DesignVariant::A, 0.3);
  CHECK(a.beta == 1.0);
  CHECK(a.pi == 0.02);
  CHECK(a.n == 100);
  CHECK(a.q() == 30);
  CHECK(a.cell_label() == "0.3");

  SimulationDesign b = make_design(DesignVariant::B, 0.7);
  CHECK(b.beta == 1.0);
  CHECK(b.pi == 0.01);
  CHECK(b.q() == 70);

  SimulationDesign c = make_design(DesignVariant::C, 0.5);
  CHECK(c.beta == 2.0);
  CHECK(c.pi == 0.02);

  SimulationDesign p = make_design(DesignVariant::Panel, 10);
  CHECK(p.beta == 2.0);
  CHECK(p.G == 10);
  CHECK(p.q() == 10);
  CHECK(p.cell_label() == "10");
}

TEST_CASE("invalid design points are rejected up front") {
  long redraws = 0;

  SimulationDesign bad_div = make_design(DesignVariant::Panel, 7);
  CHECK_THROWS_AS(draw_design(bad_div, 0, &redraws), InputError);

  SimulationDesign singleton = make_design(DesignVariant::Panel, 100);
  CHECK_THROWS_AS(draw_design(singleton, 0, &redraws), InputError);

  SimulationDesign full = make_design(DesignVariant::A, 1.0);
  CHECK_THROWS_AS(draw_design(full, 0, &redraws), InputError);

  SimulationDesign no_reps = make_design(DesignVariant::A, 0.2);
  no_reps.reps = 0;
  CHECK_THROWS_AS(run_cell_serial(no_reps), InputError);

  SimulationDesign no_b = make_design(DesignVariant::A, 0.2);
  no_b.B = 0;
  CHECK_THROWS_AS(run_cell_serial(no_b), InputError);
}

TEST_CASE("cross-section draws have an intercept plus zero/one dummies") {
  SimulationDesign design = make_design(DesignVariant::A, 0.1);
  long redraws = 0;
  Dataset d = draw_design(design, 0, &redraws);
  REQUIRE(d.W.rows() == 100);
  REQUIRE(d.W.cols() == 10);
  REQUIRE(d.X.rows() == 100);
  REQUIRE(d.X.cols() == 1);
  REQUIRE(d.y.size() == 100);
  CHECK((d.W.col(0).array() == 1.0).all());
  for (long j = 1; j < d.W.cols(); ++j) {
    for (long i = 0; i < d.W.rows(); ++i) {
      CHECK((d.W(i, j) == 0.0 || d.W(i, j) == 1.0));
    }
  }
  CHECK(redraws == 0);
}

TEST_CASE("panel draws are balanced group indicators") {
  SimulationDesign design = make_design(DesignVariant::Panel, 5);
  long redraws = 0;
  Dataset d = draw_design(design, 3, &redraws);
  REQUIRE(d.W.rows() == 100);
  REQUIRE(d.W.cols() == 5);
  CHECK(redraws == 0);
  for (long g = 0; g < 5; ++g) {
    CHECK(d.W.col(g).sum() == 20.0);
  }
  for (long i = 0; i < 100; ++i) {
    CHECK(d.W.row(i).sum() == 1.0);
  }
}

TEST_CASE("replication draws are keyed: same index repeats, neighbors differ") {
  SimulationDesign design = make_design(DesignVariant::C, 0.4);
  long r0 = 0, r1 = 0;
  Dataset a = draw_design(design, 11, &r0);
  Dataset b = draw_design(design, 11, &r1);
  CHECK((a.W - b.W).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);

  Dataset c = draw_design(design, 12, &r1);
  CHECK((a.y - c.y).cwiseAbs().maxCoeff() > 0.0);

  SimulationDesign other = design;
  other.seed = design.seed + 1;
  Dataset e = draw_design(other, 11, &r1);
  CHECK((a.y - e.y).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("a hopeless dummy rate exhausts the redraw budget") {
  SimulationDesign design = make_design(DesignVariant::Custom, 0.5);
  design.pi = 1e-6;  // all-zero dummy columns: never full rank
  design.max_redraws = 10;
  long redraws = 0;
  CHECK_THROWS_AS(draw_design(design, 0, &redraws), RedrawLimitExceeded);
}

TEST_CASE("parallel cells reproduce the serial reference bit for bit" *
          doctest::timeout(600)) {
  SimulationDesign design = make_design(DesignVariant::A, 0.3);
  design.reps = 50;
  design.B = 29;
  std::vector<CellRow> serial = run_cell_serial(design);
  REQUIRE(serial.size() == 5);
  for (int workers : {1, 2, 4}) {
    std::vector<CellRow> par = run_cell(design, workers);
    REQUIRE(par.size() == serial.size());
    for (size_t i = 0; i < serial.size(); ++i) {
      CHECK(par[i].design == serial[i].design);
      CHECK(par[i].ratio_or_G == serial[i].ratio_or_G);
      CHECK(par[i].method == serial[i].method);
      CHECK(par[i].freq == serial[i].freq);
      CHECK(par[i].mc_se == serial[i].mc_se);
      CHECK(par[i].clamp_count == serial[i].clamp_count);
      CHECK(par[i].hck_fallback_count == serial[i].hck_fallback_count);
      CHECK(par[i].redraw_count == serial[i].redraw_count);
    }
  }
}

TEST_CASE("single-replication cells report degenerate frequencies") {
  SimulationDesign design = make_design(DesignVariant::A, 0.2);
  design.reps = 1;
  design.B = 19;
  design.methods = {Method::HC0, Method::WildR};
  std::vector<CellRow> rows = run_cell_serial(design);
  for (const CellRow& row : rows) {
    CHECK((row.freq == 0.0 || row.freq == 1.0));
    CHECK(row.mc_se == 0.0);
    CHECK(row.reps == 1);
  }
}

TEST_CASE("the monte carlo standard error matches its formula") {
  SimulationDesign design = make_design(DesignVariant::B, 0.5);
  design.reps = 40;
  design.B = 19;
  design.methods = {Method::HC0, Method::HCA};
  std::vector<CellRow> rows = run_cell_serial(design);
  for (const CellRow& row : rows) {
    double want = std::sqrt(row.freq * (1.0 - row.freq) / double(row.reps));
    CHECK(row.mc_se == doctest::Approx(want).epsilon(1e-15));
  }
}

TEST_CASE("report CSV is schema-pinned and parse/emit idempotent") {
  SimulationDesign design = make_design(DesignVariant::A, 0.2);
  design.reps = 30;
  design.B = 19;
  design.methods = {Method::HC0, Method::HCK, Method::WildG};
  SimulationReport report;
  auto rows = run_cell_serial(design);
  report.rows.assign(rows.begin(), rows.end());

  std::string csv = report_to_csv(report);
  CHECK(csv.rfind("design,ratio_or_G,method,freq,mc_se,clamp_count,"
                  "hck_fallback_count,redraw_count",
                  0) == 0);
  SimulationReport back = report_from_csv(csv);
  REQUIRE(back.rows.size() == report.rows.size());
  CHECK(report_to_csv(back) == csv);

  std::string broken = csv;
  broken.replace(broken.find("mc_se"), 5, "stder");
  CHECK_THROWS_AS(report_from_csv(broken), SchemaMismatch);
}

TEST_CASE("the text table names designs, methods, and cells") {
  SimulationDesign design = make_design(DesignVariant::Panel, 5);
  design.reps = 10;
  design.B = 19;
  design.methods = {Method::HC0, Method::WildR};
  SimulationReport report;
  auto rows = run_cell_serial(design);
  report.rows.assign(rows.begin(), rows.end());
  std::string text = report_to_text(report);
  CHECK(text.find("panel") != std::string::npos);
  CHECK(text.find("HC0") != std::string::npos);
  CHECK(text.find("Wild-R") != std::string::npos);
  CHECK(text.find("G") != std::string::npos);
}

TEST_CASE("a failing cell is caught into its rows by the suite runner") {
  SimulationDesign good = make_design(DesignVariant::A, 0.1);
  good.reps = 5;
  good.B = 9;
  good.methods = {Method::HC0};
  SimulationDesign bad = make_design(DesignVariant::Custom, 0.5);
  bad.pi = 1e-6;
  bad.max_redraws = 5;
  bad.reps = 5;
  bad.B = 9;
  bad.methods = {Method::HC0};

  SimulationReport report = run_suite({good, bad}, 1);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].error.empty());
  CHECK(report.rows[0].freq >= 0.0);
  CHECK_FALSE(report.rows[1].error.empty());
  CHECK(std::isnan(report.rows[1].freq));

  // Error rows survive the CSV and text paths.
  std::string csv = report_to_csv(report);
  SimulationReport back = report_from_csv(csv);
  CHECK(report_to_csv(back) == csv);
  std::string text = report_to_text(report);
  CHECK(text.find("err") != std::string::npos);
}

TEST_CASE("conventional rejection rates climb with the control share" *
          doctest::timeout(600)) {
  double prev = -1.0, prev_se = 0.0;
  for (double ratio : {0.1, 0.5, 0.9}) {
    SimulationDesign design = make_design(DesignVariant::A, ratio);
    design.reps = 5000;
    design.methods = {Method::HC0};
    std::vector<CellRow> rows = run_cell_serial(design);
    REQUIRE(rows.size() == 1);
    double freq = rows[0].freq;
    double se = rows[0].mc_se;
    if (prev >= 0.0) {
      double combined = std::sqrt(se * se + prev_se * prev_se);
      CHECK(freq - prev >= -3.0 * combined);
      CHECK(freq > prev);  // the published gaps are enormous at these points
    }
    prev = freq;
    prev_se = se;
  }
}

TEST_CASE("published table lookups hit and miss where expected") {
  double out = 0.0;
  CHECK(lookup_reference("A", "0.1", "HC0", &out));
  CHECK(out == 0.071);
  CHECK(lookup_reference("C", "0.5", "HCA", &out));
  CHECK(out == 0.120);
  CHECK(lookup_reference("panel", "50", "Wild-R", &out));
  CHECK(out == 0.036);
  CHECK(lookup_reference("B", "0.9", "HCK", &out));
  CHECK(out == 0.574);
  CHECK_FALSE(lookup_reference("A", "0.15", "HC0", &out));
  CHECK_FALSE(lookup_reference("D", "0.1", "HC0", &out));
  CHECK_FALSE(lookup_reference("A", "0.1", "HC9", &out));
}
