#include "lmdp/lp.hpp"

#include <cmath>
#include <limits>

#include "lmdp/common.hpp"

namespace lmdp::lp {

const char* to_string(Status status) {
  switch (status) {
    case Status::kOptimal: return "optimal";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kIterationLimit: return "iteration-limit";
  }
  return "?";
}

int Problem::add_var(double cost, double lo, double hi) {
  objective.push_back(cost);
  lower.push_back(lo);
  upper.push_back(hi);
  return num_vars() - 1;
}

void Problem::add_row(std::vector<std::pair<int, double>> coeffs, Sense sense, double rhs) {
  rows.push_back({std::move(coeffs), sense, rhs});
}

namespace {

enum class Where { kBasic, kLower, kUpper };

class Tableau {
 public:
  Tableau(const Problem& p, const Options& opt) : opt_(opt) {
    const int n0 = p.num_vars();
    m_ = static_cast<int>(p.rows.size());
    int slacks = 0;
    for (const auto& r : p.rows) slacks += (r.sense != Sense::kEqual);
    n_ = n0 + slacks;
    total_ = n_ + m_;
    lo_.assign(total_, 0.0);
    hi_.assign(total_, kInf);
    for (int j = 0; j < n0; ++j) {
      if (!std::isfinite(p.lower[j])) throw ConfigError("lp: lower bounds must be finite");
      lo_[j] = p.lower[j];
      hi_[j] = p.upper[j];
    }
    cost_.assign(total_, 0.0);
    for (int j = 0; j < n0; ++j) cost_[j] = p.objective[j];

    t_.assign(static_cast<std::size_t>(m_) * total_, 0.0);
    std::vector<double> rhs(m_);
    int next_slack = n0;
    for (int i = 0; i < m_; ++i) {
      const auto& r = p.rows[i];
      for (auto [j, v] : r.coeffs) at(i, j) += v;
      if (r.sense == Sense::kLessEqual) at(i, next_slack++) = 1.0;
      if (r.sense == Sense::kGreaterEqual) at(i, next_slack++) = -1.0;
      rhs[i] = r.rhs;
    }
    where_.assign(total_, Where::kLower);
    basis_.assign(m_, -1);
    xb_.assign(m_, 0.0);
    sgn_.assign(m_, 1.0);
    rhs_.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      double r = rhs[i];
      for (int j = 0; j < n_; ++j) r -= at(i, j) * lo_[j];
      sgn_[i] = r >= 0.0 ? 1.0 : -1.0;
      if (sgn_[i] < 0)
        for (int j = 0; j < n_; ++j) at(i, j) = -at(i, j);
      at(i, n_ + i) = 1.0;
      basis_[i] = n_ + i;
      where_[n_ + i] = Where::kBasic;
      xb_[i] = std::abs(r);
      rhs_[i] = sgn_[i] * rhs[i];
    }
  }

  Solution run(int n_struct) {
    Solution sol;
    // phase one: minimize the sum of artificials
    std::vector<double> c1(total_, 0.0);
    for (int i = 0; i < m_; ++i) c1[n_ + i] = 1.0;
    Status st = iterate(c1, sol.iterations);
    if (st == Status::kIterationLimit) {
      sol.status = st;
      return sol;
    }
    double infeas = 0.0, scale = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] >= n_) infeas += xb_[i];
      scale = std::max(scale, std::abs(xb_[i]));
    }
    if (infeas > opt_.feasibility_tol * scale) {
      sol.status = Status::kInfeasible;
      return sol;
    }
    // artificials are fixed at zero from here on
    for (int i = 0; i < m_; ++i) hi_[n_ + i] = 0.0;
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      for (int j = 0; j < n_; ++j) {
        if (where_[j] != Where::kBasic && std::abs(at(i, j)) > 1e-7) {
          const int old = basis_[i];
          pivot(i, j);
          where_[old] = Where::kLower;
          recompute_basic();
          break;
        }
      }
    }
    st = iterate(cost_, sol.iterations);
    sol.status = st;
    if (st != Status::kOptimal) return sol;

    std::vector<double> x(total_);
    for (int j = 0; j < total_; ++j)
      if (where_[j] != Where::kBasic) x[j] = value_of_nonbasic(j);
    for (int i = 0; i < m_; ++i) x[basis_[i]] = xb_[i];
    sol.x.assign(x.begin(), x.begin() + n_struct);
    sol.objective = 0.0;
    for (int j = 0; j < n_struct; ++j) sol.objective += cost_[j] * x[j];
    sol.duals.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      double y = 0.0;
      for (int k = 0; k < m_; ++k) y += cost_[basis_[k]] * at(k, n_ + i);
      sol.duals[i] = y * sgn_[i];
    }
    return sol;
  }

 private:
  double& at(int i, int j) { return t_[static_cast<std::size_t>(i) * total_ + j]; }
  double at(int i, int j) const { return t_[static_cast<std::size_t>(i) * total_ + j]; }

  double value_of_nonbasic(int j) const { return where_[j] == Where::kUpper ? hi_[j] : lo_[j]; }

  void pivot(int r, int c) {
    const double piv = at(r, c);
    for (int j = 0; j < total_; ++j) at(r, j) /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (int j = 0; j < total_; ++j) at(i, j) -= f * at(r, j);
      at(i, c) = 0.0;
    }
    where_[basis_[r]] = Where::kLower;
    basis_[r] = c;
    where_[c] = Where::kBasic;
  }

  // Basic values from scratch: x_B = B^{-1} r - sum over nonbasic j of T_j x_j.
  void recompute_basic() {
    for (int i = 0; i < m_; ++i) {
      double v = 0.0;
      for (int k = 0; k < m_; ++k) v += at(i, n_ + k) * rhs_[k];
      for (int j = 0; j < total_; ++j)
        if (where_[j] != Where::kBasic) {
          const double xj = value_of_nonbasic(j);
          if (xj != 0.0) v -= at(i, j) * xj;
        }
      xb_[i] = v;
    }
  }

  Status iterate(const std::vector<double>& c, int& iterations) {
    std::vector<double> d(total_);
    int degenerate_run = 0;
    while (true) {
      if (iterations >= opt_.max_iterations) return Status::kIterationLimit;
      // reduced costs d_j = c_j - c_B^T T_j
      for (int j = 0; j < total_; ++j) d[j] = c[j];
      for (int i = 0; i < m_; ++i) {
        const double cb = c[basis_[i]];
        if (cb == 0.0) continue;
        for (int j = 0; j < total_; ++j) d[j] -= cb * at(i, j);
      }
      // Dantzig pricing; Bland's rule after a run of degenerate steps
      const bool bland = degenerate_run > 50;
      int enter = -1;
      double dir = 0.0, best = 0.0;
      for (int j = 0; j < total_; ++j) {
        if (where_[j] == Where::kBasic || hi_[j] - lo_[j] <= 0.0) continue;
        double gain = 0.0, dj = 0.0;
        if (where_[j] == Where::kLower && d[j] < -opt_.optimality_tol) {
          gain = -d[j];
          dj = 1.0;
        } else if (where_[j] == Where::kUpper && d[j] > opt_.optimality_tol) {
          gain = d[j];
          dj = -1.0;
        } else {
          continue;
        }
        if (gain > best) {
          best = gain;
          enter = j;
          dir = dj;
          if (bland) break;
        }
      }
      if (enter < 0) return Status::kOptimal;
      ++iterations;

      double col_max = 0.0;
      for (int i = 0; i < m_; ++i) col_max = std::max(col_max, std::abs(at(i, enter)));
      const double ptol = opt_.pivot_tol * std::max(1.0, col_max);

      // two-pass ratio test: smallest step, then the largest pivot among near-ties
      auto limit = [&](int i, bool& to_upper) {
        const double alpha = at(i, enter) * dir;
        const int b = basis_[i];
        if (alpha > ptol) {
          to_upper = false;
          return std::max((xb_[i] - lo_[b]) / alpha, 0.0);
        }
        if (alpha < -ptol && std::isfinite(hi_[b])) {
          to_upper = true;
          return std::max((hi_[b] - xb_[i]) / -alpha, 0.0);
        }
        return kInf;
      };
      double theta = hi_[enter] - lo_[enter];
      double min_lim = kInf;
      for (int i = 0; i < m_; ++i) {
        bool up;
        min_lim = std::min(min_lim, limit(i, up));
      }
      int leave = -1;
      bool leave_to_upper = false;
      if (min_lim < theta) {
        const double cutoff = min_lim + 1e-12 * std::max(1.0, min_lim);
        double best_piv = 0.0;
        for (int i = 0; i < m_; ++i) {
          bool up;
          const double lim = limit(i, up);
          if (lim > cutoff) continue;
          const double piv = std::abs(at(i, enter));
          if (piv > best_piv || (bland && piv == best_piv && basis_[i] < basis_[leave])) {
            best_piv = piv;
            leave = i;
            leave_to_upper = up;
          }
        }
        theta = min_lim;
      }
      if (!std::isfinite(theta)) return Status::kUnbounded;
      degenerate_run = theta <= 0.0 ? degenerate_run + 1 : 0;

      if (leave < 0) {
        for (int i = 0; i < m_; ++i) xb_[i] -= theta * dir * at(i, enter);
        where_[enter] = dir > 0 ? Where::kUpper : Where::kLower;
        continue;
      }
      const int old = basis_[leave];
      pivot(leave, enter);
      where_[old] = leave_to_upper ? Where::kUpper : Where::kLower;
      recompute_basic();
    }
  }

  Options opt_;
  int m_ = 0, n_ = 0, total_ = 0;
  std::vector<double> t_, lo_, hi_, cost_, xb_, sgn_, rhs_;
  std::vector<int> basis_;
  std::vector<Where> where_;
};

}  // namespace

Solution solve(const Problem& problem, const Options& options) {
  const int n = problem.num_vars();
  if (static_cast<int>(problem.lower.size()) != n || static_cast<int>(problem.upper.size()) != n)
    throw ConfigError("lp: bound vectors do not match the variable count");
  for (const auto& r : problem.rows)
    for (auto [j, v] : r.coeffs)
      if (j < 0 || j >= n) throw ConfigError("lp: row references an unknown variable");
  Tableau tab(problem, options);
  return tab.run(n);
}

}  // namespace lmdp::lp
