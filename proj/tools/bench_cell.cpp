// Benchmark: serial reference cell loop vs the OpenMP one, with an output
// equality check.  Usage: bench_cell [design] [ratio_or_G] [reps] [B] [workers]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

#include "manyboot/simulation.hpp"

using namespace manyboot;

namespace {

double time_s(const std::function<std::vector<CellRow>()>& fn,
              std::vector<CellRow>* out) {
  auto t0 = std::chrono::steady_clock::now();
  *out = fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0)
             .count() /
         1000.0;
}

std::string rows_csv(const std::vector<CellRow>& rows) {
  SimulationReport report;
  report.rows.assign(rows.begin(), rows.end());
  return report_to_csv(report);
}

}  // namespace

int main(int argc, char** argv) {
  std::string design_tok = argc > 1 ? argv[1] : "A";
  double ratio_or_G = argc > 2 ? std::atof(argv[2]) : 0.3;
  long reps = argc > 3 ? std::atol(argv[3]) : 500;
  int B = argc > 4 ? std::atoi(argv[4]) : 199;
  int workers = argc > 5 ? std::atoi(argv[5]) : 4;

  DesignVariant variant;
  if (!parse_design(design_tok, &variant)) {
    std::fprintf(stderr, "unknown design: %s\n", design_tok.c_str());
    return 2;
  }
  SimulationDesign design = make_design(variant, ratio_or_G);
  design.reps = reps;
  design.B = B;

  std::printf("cell: design %s, %s = %s, reps = %ld, B = %d\n",
              design_name(variant).c_str(),
              variant == DesignVariant::Panel ? "G" : "q/n",
              design.cell_label().c_str(), reps, B);

  std::vector<CellRow> serial_rows, parallel_rows;
  double t_serial = time_s([&] { return run_cell_serial(design); },
                           &serial_rows);
  std::printf("serial reference: %8.2f s\n", t_serial);
  double t_par = time_s([&] { return run_cell(design, workers); },
                        &parallel_rows);
  std::printf("%d workers:       %8.2f s  (speedup %.2fx)\n", workers, t_par,
              t_par > 0.0 ? t_serial / t_par : 0.0);

  if (rows_csv(serial_rows) != rows_csv(parallel_rows)) {
    std::printf("MISMATCH: parallel output differs from the serial reference\n");
    return 1;
  }
  std::printf("outputs byte-identical\n");
  for (const CellRow& row : serial_rows) {
    std::printf("  %-7s freq = %.4f (mc se %.4f)\n", row.method.c_str(),
                row.freq, row.mc_se);
  }
  return 0;
}
