#include "lmdp/psr.hpp"

#include <cmath>
#include <sstream>

#include "lmdp/lp.hpp"

namespace lmdp {

namespace {

void check_rank(const Eigen::JacobiSVD<Eigen::MatrixXd>& svd, const Eigen::MatrixXd& e) {
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
  if (e.rows() < e.cols() || !(smin > 1e-10 * std::max(1.0, smax))) {
    std::ostringstream os;
    os << "emission matrix is not full column rank; singular values:";
    for (int i = 0; i < sv.size(); ++i) os << " " << sv(i);
    throw ModelError(os.str());
  }
}

}  // namespace

Eigen::MatrixXd left_inverse(const Eigen::MatrixXd& emission) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(emission, Eigen::ComputeThinU | Eigen::ComputeThinV);
  check_rank(svd, emission);
  const Eigen::VectorXd inv = svd.singularValues().cwiseInverse();
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

double induced_l1_norm(const Eigen::MatrixXd& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

Eigen::MatrixXd min_l1_left_inverse(const Eigen::MatrixXd& emission, int max_entries) {
  const int n_sym = static_cast<int>(emission.rows());
  const int n_ctx = static_cast<int>(emission.cols());
  if (static_cast<long>(n_sym) * n_ctx > max_entries)
    throw BudgetError("min-l1 left inverse LP too large", double(n_sym) * n_ctx, max_entries);
  const Eigen::MatrixXd ls = left_inverse(emission);

  // L = P - N with P, N >= 0; minimize t subject to L E = I and column sums of P + N <= t
  lp::Problem prob;
  auto pos = [&](int m, int j) { return 2 * (m * n_sym + j); };
  for (int m = 0; m < n_ctx; ++m)
    for (int j = 0; j < n_sym; ++j) {
      prob.add_var(0.0, 0.0, kInf);
      prob.add_var(0.0, 0.0, kInf);
    }
  const int t = prob.add_var(1.0, 0.0, kInf);
  for (int m = 0; m < n_ctx; ++m)
    for (int k = 0; k < n_ctx; ++k) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < n_sym; ++j) {
        const double e = emission(j, k);
        if (e == 0.0) continue;
        row.push_back({pos(m, j), e});
        row.push_back({pos(m, j) + 1, -e});
      }
      prob.add_row(std::move(row), lp::Sense::kEqual, m == k ? 1.0 : 0.0);
    }
  for (int j = 0; j < n_sym; ++j) {
    std::vector<std::pair<int, double>> row;
    for (int m = 0; m < n_ctx; ++m) {
      row.push_back({pos(m, j), 1.0});
      row.push_back({pos(m, j) + 1, 1.0});
    }
    row.push_back({t, -1.0});
    prob.add_row(std::move(row), lp::Sense::kLessEqual, 0.0);
  }
  const auto sol = lp::solve(prob);
  if (sol.status != lp::Status::kOptimal)
    throw ModelError(std::string("min-l1 left inverse LP failed: ") + lp::to_string(sol.status));
  Eigen::MatrixXd l(n_ctx, n_sym);
  for (int m = 0; m < n_ctx; ++m)
    for (int j = 0; j < n_sym; ++j) l(m, j) = sol.x[pos(m, j)] - sol.x[pos(m, j) + 1];
  // push the residual of L E = I down to rounding level
  const Eigen::MatrixXd resid = Eigen::MatrixXd::Identity(n_ctx, n_ctx) - l * emission;
  l += resid * ls;
  return l;
}

PsrOperators build_operators(const LmdpPsi& model, LeftInverseKind kind, double max_entries) {
  const Eigen::MatrixXd e = model.emission_matrix();
  const Eigen::MatrixXd l =
      kind == LeftInverseKind::kLeastSquares ? left_inverse(e) : min_l1_left_inverse(e);
  return build_operators_with(model, l, max_entries);
}

PsrOperators build_operators_with(const LmdpPsi& model, const Eigen::MatrixXd& left_inv,
                                  double max_entries) {
  const Dims& d = model.dims();
  const double n_ops = double(d.states) * d.actions * d.observations * (d.states + 1) + d.states;
  const double entries = n_ops * double(d.symbols) * d.symbols;
  if (entries > max_entries) throw BudgetError("PSR operator tables too large", entries, max_entries);

  PsrOperators ops;
  ops.dims_ = d;
  ops.emission_ = model.emission_matrix();
  ops.left_inv_ = left_inv;
  const Eigen::MatrixXd check = left_inv * ops.emission_;
  if ((check - Eigen::MatrixXd::Identity(d.contexts, d.contexts)).cwiseAbs().maxCoeff() > 1e-10)
    throw ModelError("supplied matrix is not a left inverse of the emission matrix");

  Eigen::VectorXd p(d.contexts);
  for (int m = 0; m < d.contexts; ++m) p(m) = model.mixing(m);
  ops.b0_ = ops.emission_ * p;

  const int n = d.symbols;
  Eigen::VectorXd diag(d.contexts);
  auto make = [&]() -> Eigen::MatrixXd {
    if (diag.cwiseAbs().maxCoeff() == 0.0) return Eigen::MatrixXd::Zero(n, n);
    return (ops.emission_ * diag.asDiagonal()) * left_inv;
  };
  ops.ops_.reserve(std::size_t(d.states) * d.actions * d.observations * d.states);
  for (int s = 0; s < d.states; ++s)
    for (int a = 0; a < d.actions; ++a)
      for (int o = 0; o < d.observations; ++o) {
        for (int s2 = 0; s2 < d.states; ++s2) {
          for (int m = 0; m < d.contexts; ++m) diag(m) = model.step(m, s, a, o, s2);
          ops.ops_.push_back(make());
        }
      }
  for (int s = 0; s < d.states; ++s)
    for (int a = 0; a < d.actions; ++a)
      for (int o = 0; o < d.observations; ++o) {
        for (int m = 0; m < d.contexts; ++m) diag(m) = model.observation(m, s, a, o);
        ops.term_.push_back(make());
      }
  for (int s = 0; s < d.states; ++s) {
    for (int m = 0; m < d.contexts; ++m) diag(m) = model.initial(m, s);
    ops.entry_.push_back(make());
  }
  return ops;
}

void clamp_small_negatives(Eigen::VectorXd& v) {
  for (int i = 0; i < v.size(); ++i)
    if (v(i) < 0.0 && v(i) >= -1e-12) v(i) = 0.0;
}

PsrState normalize_state(Eigen::VectorXd b, int t) {
  PsrState st;
  clamp_small_negatives(b);
  st.t = t;
  st.mass = b.lpNorm<1>();
  if (st.mass > 1e-300) st.b_bar = b / st.mass;
  st.b = std::move(b);
  return st;
}

Eigen::VectorXd psr_advance(const PsrOperators& ops, const Eigen::VectorXd& b, int s, int a,
                            int o, int s2) {
  return ops.op(s, a, o, s2) * b;
}

PsrState psr_state(const PsrOperators& ops, std::span<const int> prefix) {
  if (prefix.empty() || prefix.size() % 3 != 1)
    throw ConfigError("psr_state: prefix must have the form s1, a1, o1, ..., s_t");
  const int t = static_cast<int>(prefix.size() / 3) + 1;
  if (t > ops.dims().horizon) throw ConfigError("psr_state: prefix longer than the horizon");
  Eigen::VectorXd b = ops.entry(prefix[0]) * ops.b0();
  for (std::size_t k = 0; k + 3 < prefix.size(); k += 3)
    b = ops.op(prefix[k], prefix[k + 1], prefix[k + 2], prefix[k + 3]) * b;
  return normalize_state(std::move(b), t);
}

double psr_trajectory_probability(const PsrOperators& ops, const BlindPolicy& policy, int iota,
                                  std::span<const Step> steps) {
  const int h = ops.dims().horizon;
  if (static_cast<int>(steps.size()) != h) throw ConfigError("trajectory length != H");
  Eigen::VectorXd b = ops.entry(steps[0].state) * ops.b0();
  std::vector<int> hist;
  double pi = 1.0;
  for (int t = 0; t < h; ++t) {
    const Step& st = steps[t];
    hist.push_back(st.state);
    pi *= policy.prob(hist, st.action);
    hist.push_back(st.action);
    hist.push_back(st.obs);
    if (t + 1 < h)
      b = ops.op(st.state, st.action, st.obs, steps[t + 1].state) * b;
    else
      b = ops.terminal(st.state, st.action, st.obs) * b;
  }
  return b(iota) * pi;
}

double conditioning_tree_size(const Dims& d, int t) {
  const double branch = double(d.actions) * d.observations * d.states;
  double nodes = 0.0, level = 1.0;
  for (int h = t; h <= d.horizon; ++h) {
    nodes += level;
    level *= branch;
  }
  return nodes;
}

namespace {

struct ConditioningDp {
  const PsrOperators& ops;
  int iota;  // -1 sums over all symbols

  double leaf(const Eigen::VectorXd& v) const {
    return iota < 0 ? v.lpNorm<1>() : std::abs(v(iota));
  }

  double score(int h, int s, int fixed_a, const Eigen::VectorXd& v) const {
    const Dims& d = ops.dims();
    double best = kNegInf;
    const int a_lo = fixed_a >= 0 ? fixed_a : 0;
    const int a_hi = fixed_a >= 0 ? fixed_a + 1 : d.actions;
    Eigen::VectorXd w(v.size());
    for (int a = a_lo; a < a_hi; ++a) {
      double total = 0.0;
      for (int o = 0; o < d.observations; ++o) {
        if (h == d.horizon) {
          w.noalias() = ops.terminal(s, a, o) * v;
          total += leaf(w);
          continue;
        }
        for (int s2 = 0; s2 < d.states; ++s2) {
          w.noalias() = ops.op(s, a, o, s2) * v;
          if (w.cwiseAbs().maxCoeff() == 0.0) continue;
          total += score(h + 1, s2, -1, w);
        }
      }
      best = std::max(best, total);
    }
    return best;
  }

  double run(int t, int s, int a) const {
    // |psi^T (-e_j)| = |psi^T e_j|, so only the positive vertices are visited
    double best = 0.0;
    const int n = ops.num_symbols();
    for (int j = 0; j < n; ++j) {
      Eigen::VectorXd v = Eigen::VectorXd::Unit(n, j);
      best = std::max(best, score(t, s, a, v));
    }
    return best;
  }
};

void check_args(const PsrOperators& ops, int t, int s, int a, double budget) {
  const Dims& d = ops.dims();
  if (t < 1 || t > d.horizon || s < 0 || s >= d.states || a < 0 || a >= d.actions)
    throw ConfigError("conditioning: (t, s, a) out of range");
  const double need = conditioning_tree_size(d, t) * d.symbols;
  if (need > budget) throw BudgetError("conditioning future tree too large", need, budget);
}

}  // namespace

double conditioning_constant(const PsrOperators& ops, int t, int s, int a, double budget) {
  check_args(ops, t, s, a, budget);
  return ConditioningDp{ops, -1}.run(t, s, a);
}

double conditional_conditioning(const PsrOperators& ops, int iota, int t, int s, int a,
                                double budget) {
  check_args(ops, t, s, a, budget);
  if (iota < 0 || iota >= ops.num_symbols()) throw ConfigError("conditioning: bad symbol");
  return ConditioningDp{ops, iota}.run(t, s, a);
}

}  // namespace lmdp
