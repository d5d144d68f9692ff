#include "manyboot/simulation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "manyboot/csvio.hpp"
#include "manyboot/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace manyboot {

std::string design_name(DesignVariant v) {
  switch (v) {
    case DesignVariant::A: return "A";
    case DesignVariant::B: return "B";
    case DesignVariant::C: return "C";
    case DesignVariant::Panel: return "panel";
    case DesignVariant::Custom: return "custom";
  }
  return "?";
}

bool parse_design(const std::string& token, DesignVariant* out) {
  if (token == "A" || token == "a") *out = DesignVariant::A;
  else if (token == "B" || token == "b") *out = DesignVariant::B;
  else if (token == "C" || token == "c") *out = DesignVariant::C;
  else if (token == "panel" || token == "Panel" || token == "PANEL")
    *out = DesignVariant::Panel;
  else if (token == "custom" || token == "Custom") *out = DesignVariant::Custom;
  else return false;
  return true;
}

long SimulationDesign::q() const {
  if (variant == DesignVariant::Panel) return G;
  return std::lround(ratio * double(n));
}

std::string SimulationDesign::cell_label() const {
  if (variant == DesignVariant::Panel) return std::to_string(G);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", ratio);
  return buf;
}

SimulationDesign make_design(DesignVariant v, double ratio_or_G) {
  SimulationDesign d;
  d.variant = v;
  switch (v) {
    case DesignVariant::A:
      d.ratio = ratio_or_G; d.beta = 1.0; d.pi = 0.02; break;
    case DesignVariant::B:
      d.ratio = ratio_or_G; d.beta = 1.0; d.pi = 0.01; break;
    case DesignVariant::C:
      d.ratio = ratio_or_G; d.beta = 2.0; d.pi = 0.02; break;
    case DesignVariant::Panel:
      d.G = std::lround(ratio_or_G); d.beta = 2.0; break;
    case DesignVariant::Custom:
      d.ratio = ratio_or_G; break;
  }
  return d;
}

namespace {

StreamKey cell_key(const SimulationDesign& design) {
  StreamKey k = master_key(design.seed);
  k = derive(k, Purpose::Design, std::uint64_t(design.variant));
  k = derive(k, Purpose::Cell, std::uint64_t(design.q()));
  return k;
}

void validate(const SimulationDesign& design) {
  if (design.n < 2) throw InputError("design: n must be >= 2");
  if (design.variant == DesignVariant::Panel) {
    if (design.G < 1 || design.n % design.G != 0) {
      throw InputError("panel design: G must divide n");
    }
    if (design.n / design.G < 2) {
      throw InputError("panel design: need at least 2 members per group");
    }
  } else {
    long q = design.q();
    if (q < 1 || q >= design.n) {
      throw InputError("design: q must satisfy 1 <= q < n");
    }
  }
  if (design.reps < 1) throw InputError("design: reps must be >= 1");
  if (design.B < 1) throw InputError("design: B must be >= 1");
}

// Draws the control matrix and, on acceptance, its projection context.
Eigen::MatrixXd draw_controls(const SimulationDesign& design, StreamKey rep_key,
                              long* redraws, ProjectionContext* ctx_out) {
  const long n = design.n;
  const long q = design.q();
  ProjectionOptions opts;
  opts.enforce_leverage = false;  // checked by the accept rule below

  if (design.variant == DesignVariant::Panel) {
    const long M = n / design.G;
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(n, design.G);
    for (long g = 0; g < design.G; ++g) {
      for (long i = 0; i < M; ++i) W(g * M + i, g) = 1.0;
    }
    *ctx_out = build_projection(W, opts);
    return W;
  }

  // Cross-section designs: intercept plus zero/one dummies.  The canonical
  // designs draw dense (probability 1/2) dummies; Custom draws Bernoulli(pi).
  const double p = design.variant == DesignVariant::Custom ? design.pi : 0.5;
  for (long attempt = 0; attempt < design.max_redraws; ++attempt) {
    Stream sd(derive(derive(rep_key, Purpose::Attempt, std::uint64_t(attempt)),
                     Purpose::Design, 0));
    Eigen::MatrixXd W(n, q);
    W.col(0).setOnes();
    for (long j = 1; j < q; ++j) {
      for (long i = 0; i < n; ++i) W(i, j) = sd.bernoulli(p);
    }
    ProjectionContext ctx = build_projection(W, opts);
    if (ctx.q == q && ctx.min_leverage >= ctx.opts.leverage_floor) {
      *ctx_out = std::move(ctx);
      return W;
    }
    ++*redraws;
  }
  throw RedrawLimitExceeded(
      design.max_redraws,
      "design " + design_name(design.variant) + ", q = " + std::to_string(q) +
          ", pi = " + std::to_string(p));
}

Dataset finish_dataset(const SimulationDesign& design, StreamKey rep_key,
                       Eigen::MatrixXd W) {
  const long n = design.n;
  Dataset data;
  data.W = std::move(W);
  data.X.resize(n, 1);
  Stream sx(derive(rep_key, Purpose::Regressor, 0));
  for (long i = 0; i < n; ++i) data.X(i, 0) = sx.normal();
  Stream se(derive(rep_key, Purpose::Noise, 0));
  data.y.resize(n);
  for (long i = 0; i < n; ++i) {
    data.y[i] = data.X(i, 0) * design.beta + se.normal();
  }
  return data;
}

struct RepOutcome {
  std::array<unsigned char, 8> reject{};  // indexed by design.methods order
  std::array<unsigned char, 8> clamp{};
  std::array<unsigned char, 8> hck_fb{};
  long redraws = 0;
  bool failed = false;
  std::string error;
  bool redraw_limit = false;
};

RepOutcome simulate_one_rep(const SimulationDesign& design, long rep) {
  RepOutcome out;
  StreamKey rep_key =
      derive(cell_key(design), Purpose::Replication, std::uint64_t(rep));

  ProjectionContext ctx;
  Eigen::MatrixXd W = draw_controls(design, rep_key, &out.redraws, &ctx);
  Dataset data = finish_dataset(design, rep_key, std::move(W));
  PartialledRegressors pr = partial_out(ctx, data.X);
  FitResult fit = fit_ols(data, ctx, pr);

  for (size_t mi = 0; mi < design.methods.size() && mi < 8; ++mi) {
    Method m = design.methods[mi];
    if (!method_is_bootstrap(m)) {
      TestResult t =
          t_test(data, ctx, pr, fit, m, design.beta, 0, design.level);
      out.reject[mi] = t.reject;
      out.clamp[mi] = t.clamped;
      out.hck_fb[mi] = t.hck_fellback;
    } else {
      BootstrapConfig cfg;
      cfg.B = design.B;
      cfg.level = design.level;
      cfg.weights = m == Method::WildG ? WeightScheme::Gaussian
                                       : WeightScheme::Rademacher;
      std::uint64_t scheme_idx = m == Method::WildG ? 0 : 1;
      cfg.seed = derive(rep_key, Purpose::Weights, scheme_idx).state;
      BootstrapOutcome b =
          wild_bootstrap_test(data, ctx, pr, fit, design.beta, cfg);
      out.reject[mi] = b.reject;
      out.clamp[mi] = b.observed_clamped || b.star_clamp_events > 0;
    }
  }
  return out;
}

std::vector<CellRow> aggregate(const SimulationDesign& design,
                               const std::vector<RepOutcome>& slots) {
  // Propagate the first failure, preserving the redraw-limit type.
  for (const auto& slot : slots) {
    if (slot.failed) {
      if (slot.redraw_limit) {
        throw RedrawLimitExceeded(design.max_redraws, slot.error);
      }
      throw NumericalError(slot.error);
    }
  }
  std::vector<CellRow> rows;
  long total_redraws = 0;
  for (const auto& slot : slots) total_redraws += slot.redraws;
  for (size_t mi = 0; mi < design.methods.size(); ++mi) {
    CellRow row;
    row.design = design_name(design.variant);
    row.ratio_or_G = design.cell_label();
    row.method = method_name(design.methods[mi]);
    row.reps = long(slots.size());
    long rej = 0, clamp = 0, fb = 0;
    for (const auto& slot : slots) {
      rej += slot.reject[mi];
      clamp += slot.clamp[mi];
      fb += slot.hck_fb[mi];
    }
    row.freq = double(rej) / double(slots.size());
    row.mc_se = std::sqrt(row.freq * (1.0 - row.freq) / double(slots.size()));
    row.clamp_count = clamp;
    row.hck_fallback_count = fb;
    row.redraw_count = total_redraws;
    rows.push_back(std::move(row));
  }
  return rows;
}

void run_one_slot(const SimulationDesign& design, long rep, RepOutcome* slot) {
  try {
    *slot = simulate_one_rep(design, rep);
  } catch (const RedrawLimitExceeded& e) {
    slot->failed = true;
    slot->redraw_limit = true;
    slot->error = e.what();
  } catch (const std::exception& e) {
    slot->failed = true;
    slot->error = e.what();
  }
}

}  // namespace

Dataset draw_design(const SimulationDesign& design, long rep_index,
                    long* redraws) {
  validate(design);
  long local = 0;
  StreamKey rep_key =
      derive(cell_key(design), Purpose::Replication, std::uint64_t(rep_index));
  ProjectionContext ctx;
  Eigen::MatrixXd W = draw_controls(design, rep_key, &local, &ctx);
  if (redraws) *redraws += local;
  return finish_dataset(design, rep_key, std::move(W));
}

std::vector<CellRow> run_cell_serial(const SimulationDesign& design) {
  validate(design);
  std::vector<RepOutcome> slots(design.reps);
  for (long rep = 0; rep < design.reps; ++rep) {
    run_one_slot(design, rep, &slots[rep]);
  }
  return aggregate(design, slots);
}

std::vector<CellRow> run_cell(const SimulationDesign& design, int workers) {
  validate(design);
  if (workers < 1) workers = 1;
  std::vector<RepOutcome> slots(design.reps);
#ifdef _OPENMP
  const long reps = design.reps;
#pragma omp parallel for schedule(dynamic, 8) num_threads(workers)
  for (long rep = 0; rep < reps; ++rep) {
    run_one_slot(design, rep, &slots[rep]);
  }
#else
  for (long rep = 0; rep < design.reps; ++rep) {
    run_one_slot(design, rep, &slots[rep]);
  }
#endif
  return aggregate(design, slots);
}

SimulationReport run_suite(const std::vector<SimulationDesign>& cells,
                           int workers) {
  SimulationReport report;
  for (const auto& design : cells) {
    try {
      auto rows = run_cell(design, workers);
      report.rows.insert(report.rows.end(), rows.begin(), rows.end());
    } catch (const std::exception& e) {
      for (Method m : design.methods) {
        CellRow row;
        row.design = design_name(design.variant);
        row.ratio_or_G = design.cell_label();
        row.method = method_name(m);
        row.freq = std::nan("");
        row.mc_se = std::nan("");
        row.error = e.what();
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

namespace {

std::string format_freq(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string report_to_csv(const SimulationReport& report) {
  std::ostringstream out;
  out << "design,ratio_or_G,method,freq,mc_se,clamp_count,hck_fallback_count,"
         "redraw_count\n";
  for (const auto& row : report.rows) {
    out << row.design << ',' << row.ratio_or_G << ',' << row.method << ','
        << format_freq(row.freq) << ',' << format_freq(row.mc_se) << ','
        << row.clamp_count << ',' << row.hck_fallback_count << ','
        << row.redraw_count << '\n';
  }
  return out.str();
}

SimulationReport report_from_csv(const std::string& csv_text) {
  CsvTable table = read_csv_text(csv_text);
  const std::vector<std::string> want = {
      "design", "ratio_or_G", "method", "freq",
      "mc_se",  "clamp_count", "hck_fallback_count", "redraw_count"};
  if (table.header != want) {
    std::string got;
    for (const auto& h : table.header) got += h + ",";
    throw SchemaMismatch("unexpected report schema: " + got);
  }
  SimulationReport report;
  for (const auto& cells : table.rows) {
    CellRow row;
    row.design = cells[0];
    row.ratio_or_G = cells[1];
    row.method = cells[2];
    row.freq = std::strtod(cells[3].c_str(), nullptr);
    row.mc_se = std::strtod(cells[4].c_str(), nullptr);
    row.clamp_count = std::strtol(cells[5].c_str(), nullptr, 10);
    row.hck_fallback_count = std::strtol(cells[6].c_str(), nullptr, 10);
    row.redraw_count = std::strtol(cells[7].c_str(), nullptr, 10);
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string report_to_text(const SimulationReport& report) {
  // Group rows by design in order of first appearance.
  std::vector<std::string> designs;
  for (const auto& row : report.rows) {
    if (std::find(designs.begin(), designs.end(), row.design) == designs.end()) {
      designs.push_back(row.design);
    }
  }
  std::ostringstream out;
  for (const auto& dname : designs) {
    std::vector<std::string> labels, methods;
    for (const auto& row : report.rows) {
      if (row.design != dname) continue;
      if (std::find(labels.begin(), labels.end(), row.ratio_or_G) ==
          labels.end()) {
        labels.push_back(row.ratio_or_G);
      }
      if (std::find(methods.begin(), methods.end(), row.method) ==
          methods.end()) {
        methods.push_back(row.method);
      }
    }
    const char* head = dname == "panel" ? "G" : "q/n";
    out << "Design " << dname << " - null rejection frequencies\n";
    out << "------------------------------------------------------------\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-8s", head);
    out << buf;
    for (const auto& l : labels) {
      std::snprintf(buf, sizeof buf, "%8s", l.c_str());
      out << buf;
    }
    out << '\n';
    for (const auto& m : methods) {
      std::snprintf(buf, sizeof buf, "%-8s", m.c_str());
      out << buf;
      for (const auto& l : labels) {
        const CellRow* found = nullptr;
        for (const auto& row : report.rows) {
          if (row.design == dname && row.method == m && row.ratio_or_G == l) {
            found = &row;
            break;
          }
        }
        if (!found) {
          std::snprintf(buf, sizeof buf, "%8s", "-");
        } else if (!found->error.empty() || std::isnan(found->freq)) {
          std::snprintf(buf, sizeof buf, "%8s", "err");
        } else {
          std::snprintf(buf, sizeof buf, "%8.3f", found->freq);
        }
        out << buf;
      }
      out << '\n';
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace manyboot
