#pragma once

#include <utility>
#include <vector>

namespace lmdp::lp {

enum class Sense { kLessEqual, kEqual, kGreaterEqual };
enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

const char* to_string(Status status);

/// minimize c^T x  s.t.  rows,  lower <= x <= upper  (lower finite).
struct Problem {
  struct Row {
    std::vector<std::pair<int, double>> coeffs;
    Sense sense = Sense::kLessEqual;
    double rhs = 0.0;
  };

  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Row> rows;

  int num_vars() const { return static_cast<int>(objective.size()); }
  /// Adds a variable and returns its index.
  int add_var(double cost, double lo, double hi);
  void add_row(std::vector<std::pair<int, double>> coeffs, Sense sense, double rhs);
};

struct Options {
  int max_iterations = 200000;
  double pivot_tol = 1e-9;
  double optimality_tol = 1e-11;
  double feasibility_tol = 1e-9;
};

struct Solution {
  Status status = Status::kIterationLimit;
  std::vector<double> x;
  double objective = 0.0;
  /// Row multipliers y with c_B = B^T y at the optimum (one per row).
  std::vector<double> duals;
  int iterations = 0;
};

/**
 * Dense bounded-variable primal simplex. Phase one drives artificial
 * variables out; Bland's rule prevents cycling on degenerate vertices.
 * Intended for the small certification problems in this library.
 */
Solution solve(const Problem& problem, const Options& options = {});

}  // namespace lmdp::lp
