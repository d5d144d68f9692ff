#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "manyboot/bootstrap.hpp"
#include "manyboot/estimators.hpp"

namespace manyboot {

enum class DesignVariant { A, B, C, Panel, Custom };

std::string design_name(DesignVariant v);
bool parse_design(const std::string& token, DesignVariant* out);

// One Monte Carlo cell: a design point evaluated with a set of methods.
struct SimulationDesign {
  DesignVariant variant = DesignVariant::A;
  long n = 100;
  double ratio = 0.1;   // q/n for cross-section designs; q = round(ratio * n)
  long G = 5;           // panel: number of groups (M = n / G members each)
  double pi = 0.02;     // dummy success probability (metadata for A/B/C;
                        // generative only for Custom)
  double beta = 1.0;    // true coefficient (A/B: 1, C/Panel: 2)
  long reps = 10000;
  int B = 199;
  double level = 0.05;
  std::vector<Method> methods{Method::HC0, Method::HCK, Method::HCA,
                              Method::WildG, Method::WildR};
  std::uint64_t seed = 1;
  long max_redraws = 1000;

  long q() const;                  // control count for this design point
  std::string cell_label() const;  // ratio (cross-section) or G (panel)
};

// Canonical design points.
SimulationDesign make_design(DesignVariant v, double ratio_or_G);

// Aggregated results for one (cell, method) pair.
struct CellRow {
  std::string design;
  std::string ratio_or_G;
  std::string method;
  double freq = 0.0;            // rejection frequency
  double mc_se = 0.0;           // sqrt(freq (1 - freq) / reps)
  long clamp_count = 0;         // replications with a negative-meat event
  long hck_fallback_count = 0;  // replications where HCK fell back to HC0
  long redraw_count = 0;        // design redraws within the cell
  long reps = 0;                // kept for diagnostics; not in the CSV schema
  std::string error;            // non-empty when the cell failed
};

struct SimulationReport {
  std::vector<CellRow> rows;
};

// Draws the design's dataset for one replication.  Redraws the control
// matrix (counting into *redraws) until it has full column rank and all
// leverages clear the floor; throws RedrawLimitExceeded past the budget.
Dataset draw_design(const SimulationDesign& design, long rep_index,
                    long* redraws);

// Serial reference implementation of the cell loop.
std::vector<CellRow> run_cell_serial(const SimulationDesign& design);

// OpenMP version; identical output for any worker count (keyed substreams,
// per-replication result slots, serial aggregation).
std::vector<CellRow> run_cell(const SimulationDesign& design, int workers);

// Runs every cell, catching per-cell failures into their rows.
SimulationReport run_suite(const std::vector<SimulationDesign>& cells,
                           int workers);

// Pinned CSV schema:
// design,ratio_or_G,method,freq,mc_se,clamp_count,hck_fallback_count,redraw_count
std::string report_to_csv(const SimulationReport& report);
SimulationReport report_from_csv(const std::string& csv_text);

// Aligned text table, one block per design, methods as rows and cells as
// columns.
std::string report_to_text(const SimulationReport& report);

}  // namespace manyboot
