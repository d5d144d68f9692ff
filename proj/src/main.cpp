// Command-line driver: inference on CSV data, the Monte Carlo suite, and
// report merging/comparison.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "manyboot/bootstrap.hpp"
#include "manyboot/csvio.hpp"
#include "manyboot/errors.hpp"
#include "manyboot/reference.hpp"
#include "manyboot/simulation.hpp"

using json = nlohmann::json;
using namespace manyboot;

namespace {

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty() || !s.empty()) out.push_back(cur);
  return out;
}

std::uint64_t resolve_seed(std::uint64_t flag_seed, bool seed_given) {
  if (seed_given) return flag_seed;
  if (const char* env = std::getenv("MANYBOOT_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 1;
}

std::vector<Method> parse_methods_list(const std::string& arg) {
  std::vector<Method> methods;
  for (const auto& tok : split_commas(arg)) {
    Method m;
    if (!parse_method(tok, &m)) {
      throw InputError("unknown method: " + tok);
    }
    methods.push_back(m);
  }
  if (methods.empty()) throw InputError("empty method list");
  return methods;
}

// "c1,c2,...=lambda"
void parse_constraint(const std::string& arg, Eigen::VectorXd* c,
                      double* lambda) {
  auto eq = arg.find('=');
  if (eq == std::string::npos) {
    throw InputError("constraint must look like c1,c2=lambda");
  }
  auto parts = split_commas(arg.substr(0, eq));
  if (parts.empty()) throw InputError("constraint has no coefficients");
  c->resize(long(parts.size()));
  for (size_t i = 0; i < parts.size(); ++i) {
    try {
      (*c)[long(i)] = std::stod(parts[i]);
    } catch (...) {
      throw InputError("bad constraint coefficient: " + parts[i]);
    }
  }
  try {
    *lambda = std::stod(arg.substr(eq + 1));
  } catch (...) {
    throw InputError("bad constraint value: " + arg.substr(eq + 1));
  }
  if (!std::isfinite(*lambda)) throw InputError("constraint value not finite");
}

// Parses "0.1,0.5" and "0.1..0.9" (step 0.1), possibly mixed.
std::vector<double> parse_ratios(const std::string& arg) {
  std::vector<double> out;
  for (const auto& tok : split_commas(arg)) {
    auto dots = tok.find("..");
    if (dots != std::string::npos) {
      double a = std::stod(tok.substr(0, dots));
      double b = std::stod(tok.substr(dots + 2));
      for (double r = a; r <= b + 1e-9; r += 0.1) out.push_back(r);
    } else {
      out.push_back(std::stod(tok));
    }
  }
  if (out.empty()) throw InputError("empty ratio list");
  return out;
}

int run_infer(const std::string& data_path, const std::string& y_name,
              const std::string& x_arg, const std::string& controls_arg,
              double beta0, const std::string& constraint_arg,
              const std::string& methods_arg, int B,
              const std::string& mode_arg, const std::string& weights_arg,
              std::uint64_t seed, double level, const std::string& out_path) {
  CsvTable table = read_csv_file(data_path);

  std::vector<std::string> x_names = split_commas(x_arg);
  std::vector<std::string> control_names;
  if (controls_arg == "all-others") {
    for (const auto& name : table.header) {
      if (name == y_name) continue;
      if (std::find(x_names.begin(), x_names.end(), name) != x_names.end())
        continue;
      control_names.push_back(name);
    }
  } else if (!controls_arg.empty()) {
    control_names = split_commas(controls_arg);
  }

  // Joint extraction keeps rows aligned while rejecting incomplete ones.
  std::vector<std::string> all_names;
  all_names.push_back(y_name);
  for (const auto& s : x_names) all_names.push_back(s);
  for (const auto& s : control_names) all_names.push_back(s);
  long rows_rejected = 0;
  Eigen::MatrixXd cols = extract_columns(table, all_names, &rows_rejected);
  const long n = cols.rows();
  const long d = long(x_names.size());
  if (n < 2) throw InputError("fewer than 2 complete rows in the data");

  Dataset data;
  data.y = cols.col(0);
  data.X = cols.middleCols(1, d);
  // Intercept is always prepended; a duplicate constant among the controls is
  // rank-dropped and flagged.
  data.W.resize(n, 1 + long(control_names.size()));
  data.W.col(0).setOnes();
  for (size_t j = 0; j < control_names.size(); ++j) {
    data.W.col(1 + long(j)) = cols.col(1 + d + long(j));
  }

  // Reduce the tested combination to a scalar problem.
  Eigen::VectorXd c = Eigen::VectorXd::Ones(1);
  double lambda = beta0;
  if (!constraint_arg.empty()) {
    parse_constraint(constraint_arg, &c, &lambda);
    if (c.size() != d) {
      throw InputError("constraint length " + std::to_string(c.size()) +
                       " does not match number of regressors " +
                       std::to_string(d));
    }
  } else if (d != 1) {
    throw InputError("multiple regressors require --constraint");
  }
  auto [reduced, null_value] = scalarize_constraint(data, c, lambda);

  ProjectionContext ctx = build_projection(reduced.W);
  PartialledRegressors pr = partial_out(ctx, reduced.X);
  FitResult fit = fit_ols(reduced, ctx, pr);

  BootstrapMode mode;
  if (!parse_bootstrap_mode(mode_arg, &mode)) {
    throw InputError("unknown bootstrap mode: " + mode_arg);
  }
  WeightScheme weights_override;
  bool have_weights = parse_weight_scheme(weights_arg, &weights_override);
  if (!weights_arg.empty() && !have_weights) {
    throw InputError("unknown weight scheme: " + weights_arg);
  }

  AdjustmentFactor adj = adjustment_factor(reduced, ctx, pr, null_value);

  json rep;
  rep["schema_version"] = 1;
  rep["n"] = n;
  rep["q"] = ctx.q;
  rep["d_x"] = d;
  rep["rows_rejected"] = rows_rejected;
  rep["min_leverage"] = ctx.min_leverage;
  rep["estimate"] = fit.beta[0];
  rep["null_value"] = null_value;
  rep["a_n"] = adj.a_n;
  rep["guard_active"] = adj.guard_active;
  rep["B"] = B;
  rep["mode"] = bootstrap_mode_name(mode);
  rep["seed"] = seed;
  {
    std::vector<std::string> dropped;
    for (int idx : ctx.dropped_columns) {
      dropped.push_back(idx == 0 ? std::string("(intercept)")
                        : idx <= long(control_names.size())
                            ? control_names[size_t(idx - 1)]
                            : "(reduced:" + std::to_string(idx) + ")");
    }
    rep["dropped_controls"] = dropped;
  }

  std::ostringstream text;
  text << "n = " << n << ", q = " << ctx.q << ", d_x = " << d
       << ", rows rejected = " << rows_rejected << "\n";
  text << "estimate of tested combination: " << format_double(fit.beta[0])
       << "   null value: " << format_double(null_value) << "\n";
  text << "min leverage: " << format_double(ctx.min_leverage)
       << "   a_n: " << format_double(adj.a_n) << "\n";

  json methods_json = json::object();
  for (Method m : parse_methods_list(methods_arg)) {
    json mj;
    if (!method_is_bootstrap(m)) {
      TestResult t = t_test(reduced, ctx, pr, fit, m, null_value, 0, level);
      mj["se"] = t.se;
      mj["t"] = t.t;
      mj["p"] = t.p;
      mj["reject"] = t.reject;
      if (m == Method::HCA) mj["clamped"] = t.clamped;
      if (m == Method::HCK) mj["hck_fallback"] = t.hck_fellback;
      text << method_name(m) << ": se = " << format_double(t.se)
           << ", t = " << format_double(t.t) << ", p = " << format_double(t.p)
           << (t.reject ? "  [reject]" : "  [keep]")
           << (t.clamped ? "  (meat sign flipped)" : "")
           << (t.hck_fellback ? "  (fell back to HC0)" : "") << "\n";
    } else {
      BootstrapConfig cfg;
      cfg.B = B;
      cfg.level = level;
      cfg.mode = mode;
      cfg.weights = have_weights ? weights_override
                    : m == Method::WildG ? WeightScheme::Gaussian
                                         : WeightScheme::Rademacher;
      std::uint64_t scheme_idx = m == Method::WildG ? 0 : 1;
      cfg.seed = derive(master_key(seed), Purpose::Weights, scheme_idx).state;
      BootstrapOutcome b;
      switch (mode) {
        case BootstrapMode::PercentileT:
          b = wild_bootstrap_test(reduced, ctx, pr, fit, null_value, cfg);
          break;
        case BootstrapMode::Percentile:
          b = percentile_bootstrap_test(reduced, ctx, pr, fit, null_value, cfg);
          break;
        case BootstrapMode::Score:
          b = score_bootstrap_test(reduced, ctx, pr, fit,
                                   Eigen::VectorXd::Ones(1), null_value, cfg);
          break;
      }
      mj["p"] = b.p_value;
      mj["reject"] = b.reject;
      mj["stat"] = b.stat_obs;
      mj["weights"] = weight_scheme_name(cfg.weights);
      mj["clamp_events"] =
          b.star_clamp_events + (b.observed_clamped ? 1 : 0);
      text << method_name(m) << " (" << bootstrap_mode_name(mode)
           << "): p = " << format_double(b.p_value)
           << (b.reject ? "  [reject]" : "  [keep]") << "\n";
    }
    methods_json[method_name(m)] = mj;
  }
  rep["methods"] = methods_json;

  write_text_file(out_path, rep.dump(2) + "\n");
  std::cout << text.str();
  std::cout << "report written to " << out_path << "\n";
  return 0;
}

int run_simulate(const std::string& design_arg, const std::string& ratios_arg,
                 const std::string& G_arg, long n, long reps, int B,
                 double level, const std::string& methods_arg,
                 std::uint64_t seed, int workers, double pi, bool pi_given,
                 const std::string& out_prefix) {
  DesignVariant variant;
  if (!parse_design(design_arg, &variant)) {
    throw InputError("unknown design: " + design_arg);
  }
  std::vector<Method> methods = parse_methods_list(methods_arg);

  std::vector<SimulationDesign> cells;
  if (variant == DesignVariant::Panel) {
    for (const auto& tok : split_commas(G_arg)) {
      SimulationDesign d = make_design(variant, std::stod(tok));
      d.n = n;
      d.reps = reps;
      d.B = B;
      d.level = level;
      d.methods = methods;
      d.seed = seed;
      cells.push_back(std::move(d));
    }
  } else {
    for (double r : parse_ratios(ratios_arg)) {
      SimulationDesign d = make_design(variant, r);
      d.n = n;
      d.reps = reps;
      d.B = B;
      d.level = level;
      d.methods = methods;
      d.seed = seed;
      if (pi_given) d.pi = pi;
      cells.push_back(std::move(d));
    }
  }

  auto t0 = std::chrono::steady_clock::now();
  SimulationReport report = run_suite(cells, workers);
  auto t1 = std::chrono::steady_clock::now();
  double wall_s =
      std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count() /
      1000.0;

  std::string csv = report_to_csv(report);
  std::string text = report_to_text(report);
  json meta;
  meta["schema_version"] = 1;
  meta["tool"] = "manyboot 1.0.0";
  meta["seed"] = seed;
  meta["n"] = n;
  meta["reps"] = reps;
  meta["B"] = B;
  meta["level"] = level;
  meta["design"] = design_name(variant);
  meta["pi"] = pi_given ? pi : cells.front().pi;
  meta["workers"] = workers;
  meta["wall_seconds"] = wall_s;

  write_text_file(out_prefix + ".csv", csv);
  write_text_file(out_prefix + ".txt", text);
  write_text_file(out_prefix + ".json", meta.dump(2) + "\n");
  std::cout << text;
  std::cout << "wrote " << out_prefix << ".csv, " << out_prefix << ".txt, "
            << out_prefix << ".json (" << wall_s << " s)\n";
  return 0;
}

int run_report(const std::vector<std::string>& paths, bool compare,
               const std::string& out_path) {
  if (paths.empty()) throw InputError("report needs at least one CSV");
  SimulationReport merged;
  for (const auto& p : paths) {
    SimulationReport r = report_from_csv(read_text_file(p));
    merged.rows.insert(merged.rows.end(), r.rows.begin(), r.rows.end());
  }
  if (!out_path.empty()) {
    write_text_file(out_path, report_to_csv(merged));
  }
  if (!compare) {
    std::cout << report_to_text(merged);
    return 0;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-8s%-8s%-8s%10s%10s%10s%10s", "design",
                "cell", "method", "ours", "ref", "|diff|", "mc_se");
  std::cout << buf << "\n";
  for (const auto& row : merged.rows) {
    double ref = 0.0;
    bool have = lookup_reference(row.design, row.ratio_or_G, row.method, &ref);
    if (have) {
      std::snprintf(buf, sizeof buf, "%-8s%-8s%-8s%10.3f%10.3f%10.3f%10.4f",
                    row.design.c_str(), row.ratio_or_G.c_str(),
                    row.method.c_str(), row.freq, ref,
                    std::abs(row.freq - ref), row.mc_se);
    } else {
      std::snprintf(buf, sizeof buf, "%-8s%-8s%-8s%10.3f%10s%10s%10.4f",
                    row.design.c_str(), row.ratio_or_G.c_str(),
                    row.method.c_str(), row.freq, "-", "-", row.mc_se);
    }
    std::cout << buf << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heteroskedasticity-robust inference with many covariates"};
  app.require_subcommand(1);

  // ----- infer -----
  auto* infer = app.add_subcommand("infer", "run tests on a CSV dataset");
  std::string data_path, y_name, x_arg, controls_arg, constraint_arg;
  std::string infer_methods = "hc0,hck,hca,wild-g,wild-r";
  std::string mode_arg = "percentile-t", weights_arg, infer_out = "inference.json";
  double beta0 = 0.0, infer_level = 0.05;
  int infer_B = 199;
  std::uint64_t seed_flag = 0;
  bool seed_given = false;
  infer->add_option("--data", data_path, "input CSV (header required)")
      ->required();
  infer->add_option("--y", y_name, "outcome column")->required();
  infer->add_option("--x", x_arg, "regressor column(s), comma-separated")
      ->required();
  infer->add_option("--controls", controls_arg,
                    "control columns (comma list) or 'all-others'");
  infer->add_option("--beta0", beta0, "null value for a single regressor");
  infer->add_option("--constraint", constraint_arg,
                    "linear constraint 'c1,c2=value'");
  infer->add_option("--methods", infer_methods, "comma list of methods");
  infer->add_option("--B", infer_B, "bootstrap replications");
  infer->add_option("--mode", mode_arg, "percentile-t|percentile|score");
  infer->add_option("--weights", weights_arg,
                    "override weight scheme: gaussian|rademacher|mammen");
  infer->add_option("--level", infer_level, "nominal level");
  auto* seed_opt =
      infer->add_option("--seed", seed_flag, "seed (or env MANYBOOT_SEED)");
  infer->add_option("--out", infer_out, "output JSON path");

  // ----- simulate -----
  auto* sim = app.add_subcommand("simulate", "run the Monte Carlo suite");
  std::string design_arg = "A", ratios_arg = "0.1..0.9", G_arg = "5,10,20,25,50";
  std::string sim_methods = "hc0,hck,hca,wild-g,wild-r", sim_out = "simulation";
  long sim_n = 100, sim_reps = 10000;
  int sim_B = 199, workers = 0;
  double sim_level = 0.05, pi = 0.02;
  std::uint64_t sim_seed_flag = 0;
  sim->add_option("--design", design_arg, "A|B|C|panel|custom");
  sim->add_option("--ratios", ratios_arg, "q/n list: 0.1,0.5 or 0.1..0.9");
  sim->add_option("--G", G_arg, "panel group counts, comma list");
  sim->add_option("--n", sim_n, "sample size");
  sim->add_option("--reps", sim_reps, "Monte Carlo replications");
  sim->add_option("--B", sim_B, "bootstrap replications");
  sim->add_option("--level", sim_level, "nominal level");
  sim->add_option("--methods", sim_methods, "comma list of methods");
  auto* sim_seed_opt =
      sim->add_option("--seed", sim_seed_flag, "seed (or env MANYBOOT_SEED)");
  sim->add_option("--workers", workers, "worker threads (default: hardware)");
  auto* pi_opt =
      sim->add_option("--pi", pi, "dummy success probability (custom design)");
  sim->add_option("--out", sim_out, "output prefix");

  // ----- report -----
  auto* rpt = app.add_subcommand("report", "merge and compare report CSVs");
  std::vector<std::string> rpt_paths;
  bool compare = false;
  std::string rpt_out;
  rpt->add_option("paths", rpt_paths, "report CSV files")->required();
  rpt->add_flag("--compare-paper", compare,
                "append bundled published reference values");
  rpt->add_option("--out", rpt_out, "write merged CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (infer->parsed()) {
      seed_given = seed_opt->count() > 0;
      return run_infer(data_path, y_name, x_arg, controls_arg, beta0,
                       constraint_arg, infer_methods, infer_B, mode_arg,
                       weights_arg, resolve_seed(seed_flag, seed_given),
                       infer_level, infer_out);
    }
    if (sim->parsed()) {
      if (workers <= 0) {
        unsigned hw = std::thread::hardware_concurrency();
        workers = hw ? int(hw) : 1;
      }
      return run_simulate(design_arg, ratios_arg, G_arg, sim_n, sim_reps,
                          sim_B, sim_level, sim_methods,
                          resolve_seed(sim_seed_flag, sim_seed_opt->count() > 0),
                          workers, pi, pi_opt->count() > 0, sim_out);
    }
    if (rpt->parsed()) {
      return run_report(rpt_paths, compare, rpt_out);
    }
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical degeneracy: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
