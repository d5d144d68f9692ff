#include "manyboot/reference.hpp"

#include <array>
#include <cstring>

namespace manyboot {

namespace {

// Published null rejection frequencies (nominal 5%, n = 100, 10,000 Monte
// Carlo replications, B = 199) for the three cross-section designs and the
// grouped (panel) design.
constexpr const char* kRatios[] = {"0.1", "0.2", "0.3", "0.4", "0.5",
                                   "0.6", "0.7", "0.8", "0.9"};
constexpr const char* kGroups[] = {"5", "10", "20", "25", "50"};
constexpr const char* kMethods[] = {"HC0", "HCK", "HCA", "Wild-G", "Wild-R"};

constexpr double kDesignA[5][9] = {
    {0.071, 0.097, 0.116, 0.150, 0.186, 0.243, 0.316, 0.407, 0.581},
    {0.059, 0.069, 0.071, 0.083, 0.095, 0.116, 0.165, 0.228, 0.581},
    {0.067, 0.075, 0.076, 0.084, 0.084, 0.087, 0.100, 0.121, 0.172},
    {0.051, 0.046, 0.047, 0.048, 0.045, 0.044, 0.044, 0.040, 0.035},
    {0.038, 0.044, 0.036, 0.041, 0.040, 0.039, 0.041, 0.039, 0.033},
};

constexpr double kDesignB[5][9] = {
    {0.075, 0.097, 0.113, 0.152, 0.189, 0.242, 0.314, 0.410, 0.574},
    {0.062, 0.069, 0.070, 0.081, 0.092, 0.117, 0.168, 0.238, 0.574},
    {0.072, 0.075, 0.075, 0.082, 0.084, 0.090, 0.107, 0.127, 0.176},
    {0.050, 0.050, 0.045, 0.048, 0.044, 0.045, 0.042, 0.040, 0.037},
    {0.037, 0.041, 0.036, 0.041, 0.036, 0.040, 0.037, 0.036, 0.033},
};

constexpr double kDesignC[5][9] = {
    {0.073, 0.095, 0.122, 0.141, 0.195, 0.240, 0.310, 0.413, 0.583},
    {0.063, 0.067, 0.072, 0.075, 0.095, 0.120, 0.161, 0.233, 0.583},
    {0.097, 0.105, 0.114, 0.104, 0.120, 0.124, 0.136, 0.151, 0.175},
    {0.044, 0.041, 0.043, 0.036, 0.042, 0.042, 0.041, 0.040, 0.036},
    {0.037, 0.034, 0.034, 0.031, 0.034, 0.037, 0.041, 0.036, 0.031},
};

constexpr double kPanel[5][5] = {
    {0.069, 0.081, 0.093, 0.109, 0.191},
    {0.064, 0.067, 0.066, 0.071, 0.191},
    {0.107, 0.102, 0.105, 0.110, 0.123},
    {0.046, 0.045, 0.043, 0.042, 0.042},
    {0.038, 0.037, 0.037, 0.035, 0.036},
};

int method_row(const std::string& method) {
  for (int i = 0; i < 5; ++i) {
    if (method == kMethods[i]) return i;
  }
  return -1;
}

}  // namespace

bool lookup_reference(const std::string& design, const std::string& ratio_or_G,
                      const std::string& method, double* out) {
  int row = method_row(method);
  if (row < 0) return false;

  if (design == "panel" || design == "Panel") {
    for (int j = 0; j < 5; ++j) {
      if (ratio_or_G == kGroups[j]) {
        *out = kPanel[row][j];
        return true;
      }
    }
    return false;
  }

  const double(*table)[9] = nullptr;
  if (design == "A") table = kDesignA;
  else if (design == "B") table = kDesignB;
  else if (design == "C") table = kDesignC;
  else return false;

  for (int j = 0; j < 9; ++j) {
    if (ratio_or_G == kRatios[j]) {
      *out = table[row][j];
      return true;
    }
  }
  return false;
}

}  // namespace manyboot
