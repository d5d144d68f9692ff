#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace manyboot {

// Base class for problems with user-supplied input (CLI exit code 2).
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

// Base class for numerical degeneracy discovered during computation
// (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class MissingColumn : public InputError {
 public:
  explicit MissingColumn(const std::string& name)
      : InputError("missing column: " + name) {}
};

class NonNumericCell : public InputError {
 public:
  NonNumericCell(const std::string& column, long row, const std::string& cell)
      : InputError("non-numeric cell in column '" + column + "' at data row " +
                   std::to_string(row) + ": '" + cell + "'") {}
};

class SchemaMismatch : public InputError {
 public:
  explicit SchemaMismatch(const std::string& what) : InputError(what) {}
};

// One or more observations have annihilator leverage below the floor, so the
// leave-one-out quantities are undefined.  Carries the offending row indices.
class LeverageDegenerate : public NumericalError {
 public:
  LeverageDegenerate(std::vector<int> rows, double min_leverage)
      : NumericalError(format(rows, min_leverage)), rows_(std::move(rows)) {}
  const std::vector<int>& rows() const { return rows_; }

 private:
  static std::string format(const std::vector<int>& rows, double min_leverage) {
    std::string s = "degenerate leverage (min " + std::to_string(min_leverage) +
                    ") at rows:";
    int shown = 0;
    for (int r : rows) {
      if (shown++ == 12) {
        s += " ...";
        break;
      }
      s += " " + std::to_string(r);
    }
    return s;
  }
  std::vector<int> rows_;
};

// The partialled-out regressors are (numerically) collinear.
class SingularGram : public NumericalError {
 public:
  explicit SingularGram(double cond)
      : NumericalError("partialled regressor Gram matrix is numerically singular "
                       "(condition estimate " + std::to_string(cond) + ")") {}
};

// Restricted residuals are identically zero; the bootstrap scale is undefined.
class DegenerateResiduals : public NumericalError {
 public:
  DegenerateResiduals()
      : NumericalError("restricted residuals are numerically zero; "
                       "bootstrap variance undefined") {}
};

// The design redraw loop exhausted its attempt budget.
class RedrawLimitExceeded : public NumericalError {
 public:
  RedrawLimitExceeded(long attempts, const std::string& why)
      : NumericalError("design redraw limit exceeded after " +
                       std::to_string(attempts) + " attempts (" + why + ")") {}
};

}  // namespace manyboot
