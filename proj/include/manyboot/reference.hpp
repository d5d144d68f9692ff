#pragma once

#include <string>

namespace manyboot {

// Published reference rejection frequencies bundled for `report
// --compare-paper`: nominal 5% null rejection rates at n = 100 with 10,000
// Monte Carlo replications and B = 199.
struct ReferenceValue {
  const char* design;      // "A", "B", "C", "panel"
  const char* ratio_or_G;  // "0.1".."0.9" or "5","10","20","25","50"
  const char* method;      // "HC0","HCK","HCA","Wild-G","Wild-R"
  double freq;
};

// Returns true and fills *out when a reference value exists for the key.
bool lookup_reference(const std::string& design, const std::string& ratio_or_G,
                      const std::string& method, double* out);

}  // namespace manyboot
