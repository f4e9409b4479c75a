// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fgadmm/error.hpp"
#include "fgadmm/prox.hpp"

// Derivative-free reference minimiser for the prox problem
//
//     argmin_s f(s) + Σ_b ρ_b/2 ‖s_b − n_b‖²   s.t. g_i(s) ≤ 0, h_j(s) = 0
//
// It only evaluates f, g and h, never a closed form, so it can validate the
// operators in prox_library.hpp. Intended for small blocks (≤ 12 doubles).

namespace fgadmm {

using ScalarFn = std::function<double(std::span<const double>)>;

struct ReferenceProblem {
  ScalarFn objective;                 // empty means f ≡ 0
  std::vector<ScalarFn> inequalities;  // g(s) ≤ 0
  std::vector<ScalarFn> equalities;    // h(s) = 0
};

struct ReferenceOptions {
  int restarts = 16;
  double spread = 1.0;  // restarts are drawn uniformly in n ± spread
  std::uint64_t seed = 0x5eed;
  int penalty_stages = 10;
  double penalty_first = 1e2;
  double penalty_last = 1e8;
  int max_newton = 100;
  double step_tol = 1e-10;
  double feasibility_tol = 1e-8;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

namespace detail {

class ReferenceSolver {
 public:
  ReferenceSolver(const ReferenceProblem& problem, std::span<const double> n,
                  std::span<const double> rho_per_coord, const ReferenceOptions& opt)
      : problem_(problem), n_(n.begin(), n.end()), rho_(rho_per_coord.begin(), rho_per_coord.end()),
        opt_(opt) {}

  /// f(s) + Σ ρ/2 (s − n)².
  double base(std::span<const double> s) const {
    double v = problem_.objective ? problem_.objective(s) : 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) v += 0.5 * rho_[i] * (s[i] - n_[i]) * (s[i] - n_[i]);
    return v;
  }

  double violation(std::span<const double> s) const {
    double worst = 0.0;
    for (const auto& g : problem_.inequalities) worst = std::max(worst, g(s));
    for (const auto& h : problem_.equalities) worst = std::max(worst, std::abs(h(s)));
    return worst;
  }

  /// Solves from one start; returns the final point.
  Eigen::VectorXd solve_from(Eigen::VectorXd s) {
    ineq_mult_.assign(problem_.inequalities.size(), 0.0);
    eq_mult_.assign(problem_.equalities.size(), 0.0);
    const bool constrained = !problem_.inequalities.empty() || !problem_.equalities.empty();
    const int stages = constrained ? opt_.penalty_stages : 1;
    for (int k = 0; k < stages; ++k) {
      const double t = stages > 1 ? static_cast<double>(k) / (stages - 1) : 0.0;
      penalty_ = opt_.penalty_first * std::pow(opt_.penalty_last / opt_.penalty_first, t);
      s = minimize(std::move(s));
      update_multipliers(s);
    }
    // Polish: a few more multiplier rounds at the final penalty, then Newton
    // on the KKT system of the active set.
    if (constrained) {
      for (int k = 0; k < 5 && violation(span_of(s)) > 0.1 * opt_.feasibility_tol; ++k) {
        s = minimize(std::move(s));
        update_multipliers(s);
      }
      s = polish(std::move(s));
    }
    return s;
  }

 private:
  static std::span<const double> span_of(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
  }

  /// Augmented Lagrangian at the current multipliers and penalty.
  double merit(std::span<const double> s) const {
    double v = base(s);
    for (std::size_t i = 0; i < problem_.inequalities.size(); ++i) {
      const double shifted = std::max(0.0, ineq_mult_[i] + penalty_ * problem_.inequalities[i](s));
      v += (shifted * shifted - ineq_mult_[i] * ineq_mult_[i]) / (2.0 * penalty_);
    }
    for (std::size_t j = 0; j < problem_.equalities.size(); ++j) {
      const double h = problem_.equalities[j](s);
      v += eq_mult_[j] * h + 0.5 * penalty_ * h * h;
    }
    return v;
  }

  double merit(const Eigen::VectorXd& s) const { return merit(span_of(s)); }

  void update_multipliers(const Eigen::VectorXd& s) {
    const auto sv = span_of(s);
    for (std::size_t i = 0; i < problem_.inequalities.size(); ++i) {
      ineq_mult_[i] = std::max(0.0, ineq_mult_[i] + penalty_ * problem_.inequalities[i](sv));
    }
    for (std::size_t j = 0; j < problem_.equalities.size(); ++j) {
      eq_mult_[j] += penalty_ * problem_.equalities[j](sv);
    }
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& s) const {
    const Eigen::Index dim = s.size();
    Eigen::VectorXd g(dim);
    Eigen::VectorXd p = s;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double h = 1e-6 * std::max(1.0, std::abs(s[i]));
      p[i] = s[i] + h;
      const double fp = merit(p);
      p[i] = s[i] - h;
      const double fm = merit(p);
      p[i] = s[i];
      g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
  }

  Eigen::MatrixXd hessian(const Eigen::VectorXd& s) const {
    const Eigen::Index dim = s.size();
    Eigen::MatrixXd hess(dim, dim);
    Eigen::VectorXd p = s;
    const double f0 = merit(s);
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double hi = 1e-4 * std::max(1.0, std::abs(s[i]));
      p[i] = s[i] + hi;
      const double fp = merit(p);
      p[i] = s[i] - hi;
      const double fm = merit(p);
      p[i] = s[i];
      hess(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
      for (Eigen::Index j = 0; j < i; ++j) {
        const double hj = 1e-4 * std::max(1.0, std::abs(s[j]));
        p[i] = s[i] + hi;
        p[j] = s[j] + hj;
        const double fpp = merit(p);
        p[j] = s[j] - hj;
        const double fpm = merit(p);
        p[i] = s[i] - hi;
        const double fmm = merit(p);
        p[j] = s[j] + hj;
        const double fmp = merit(p);
        p[i] = s[i];
        p[j] = s[j];
        hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
      }
    }
    return hess;
  }

  /// Damped, regularised Newton with Armijo backtracking.
  Eigen::VectorXd minimize(Eigen::VectorXd s) const {
    const Eigen::Index dim = s.size();
    for (int it = 0; it < opt_.max_newton; ++it) {
      const Eigen::VectorXd g = gradient(s);
      Eigen::MatrixXd hess = hessian(s);
      Eigen::VectorXd dir;
      double shift = 0.0;
      for (int tries = 0; tries < 60; ++tries) {
        Eigen::MatrixXd h = hess;
        h.diagonal().array() += shift;
        Eigen::LLT<Eigen::MatrixXd> llt(h);
        if (llt.info() == Eigen::Success) {
          dir = -llt.solve(g);
          if (dir.allFinite() && g.dot(dir) < 0.0) break;
        }
        shift = shift == 0.0 ? 1e-8 * std::max(1.0, hess.diagonal().cwiseAbs().maxCoeff())
                             : shift * 10.0;
        dir.resize(0);
      }
      if (dir.size() != dim) dir = -g;

      const double f0 = merit(s);
      const double slope = g.dot(dir);
      double step = 1.0;
      Eigen::VectorXd next = s + dir;
      double f1 = merit(next);
      while (!(f1 <= f0 + 1e-4 * step * slope) && step > 1e-14) {
        step *= 0.5;
        next = s + step * dir;
        f1 = merit(next);
      }
      if (!(f1 <= f0)) break;  // no further decrease available at this resolution
      const double moved = (next - s).norm();
      s = std::move(next);
      if (moved < opt_.step_tol) break;
    }
    return s;
  }

  /// Central-difference gradient of a smooth function.
  static Eigen::VectorXd fd_gradient(const std::function<double(std::span<const double>)>& fn,
                                     const Eigen::VectorXd& s) {
    Eigen::VectorXd g(s.size());
    Eigen::VectorXd p = s;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double h = 6e-6 * std::max(1.0, std::abs(s[i]));
      p[i] = s[i] + h;
      const double fp = fn(span_of(p));
      p[i] = s[i] - h;
      const double fm = fn(span_of(p));
      p[i] = s[i];
      g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
  }

  /// The penalty merit has a kink within ~1/penalty of an active boundary,
  /// which limits how well finite differences resolve it. Here the
  /// constraints with a positive multiplier (or near zero) are held as
  /// equalities and the smooth KKT system is solved by Newton's method.
  /// The result is kept only if it stays feasible with valid multipliers.
  Eigen::VectorXd polish(Eigen::VectorXd s) const {
    std::vector<const ScalarFn*> active;
    std::vector<bool> is_inequality;
    std::vector<double> mult;
    for (std::size_t i = 0; i < problem_.inequalities.size(); ++i) {
      if (ineq_mult_[i] > 0.0 || problem_.inequalities[i](span_of(s)) > -1e-9) {
        active.push_back(&problem_.inequalities[i]);
        is_inequality.push_back(true);
        mult.push_back(ineq_mult_[i]);
      }
    }
    for (std::size_t j = 0; j < problem_.equalities.size(); ++j) {
      active.push_back(&problem_.equalities[j]);
      is_inequality.push_back(false);
      mult.push_back(eq_mult_[j]);
    }
    if (active.empty()) return s;

    const Eigen::Index dim = s.size();
    const auto m = static_cast<Eigen::Index>(active.size());
    Eigen::VectorXd x = s;
    Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(mult.data(), m);

    for (int it = 0; it < 30; ++it) {
      auto lagrangian = [&](std::span<const double> p) {
        double v = base(p);
        for (Eigen::Index j = 0; j < m; ++j) v += mu[j] * (*active[static_cast<std::size_t>(j)])(p);
        return v;
      };
      Eigen::MatrixXd jac(m, dim);
      Eigen::VectorXd c(m);
      for (Eigen::Index j = 0; j < m; ++j) {
        const ScalarFn& fn = *active[static_cast<std::size_t>(j)];
        jac.row(j) = fd_gradient(fn, x).transpose();
        c[j] = fn(span_of(x));
      }
      const Eigen::VectorXd grad = fd_gradient(lagrangian, x);

      Eigen::MatrixXd hess(dim, dim);
      for (Eigen::Index i = 0; i < dim; ++i) {
        const double h = 1e-4 * std::max(1.0, std::abs(x[i]));
        Eigen::VectorXd p = x;
        p[i] = x[i] + h;
        const Eigen::VectorXd gp = fd_gradient(lagrangian, p);
        p[i] = x[i] - h;
        const Eigen::VectorXd gm = fd_gradient(lagrangian, p);
        hess.col(i) = (gp - gm) / (2.0 * h);
      }
      hess = 0.5 * (hess + hess.transpose()).eval();

      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(dim + m, dim + m);
      kkt.topLeftCorner(dim, dim) = hess;
      kkt.topRightCorner(dim, m) = jac.transpose();
      kkt.bottomLeftCorner(m, dim) = jac;
      Eigen::VectorXd rhs(dim + m);
      rhs << -grad, -c;
      const Eigen::VectorXd step = kkt.fullPivLu().solve(rhs);
      if (!step.allFinite()) return s;
      x += step.head(dim);
      mu += step.tail(m);
      if (step.head(dim).norm() < 1e-14 * std::max(1.0, x.norm())) break;
    }

    for (Eigen::Index j = 0; j < m; ++j) {
      if (is_inequality[static_cast<std::size_t>(j)] && mu[j] < -1e-9) return s;
    }
    if (!x.allFinite() || violation(span_of(x)) > violation(span_of(s)) + 1e-12) return s;
    return x;
  }

  const ReferenceProblem& problem_;
  std::vector<double> n_;
  std::vector<double> rho_;
  ReferenceOptions opt_;
  std::vector<double> ineq_mult_;
  std::vector<double> eq_mult_;
  double penalty_ = 1.0;
};

}  // namespace detail

/// Numerical minimiser of the prox problem, best of several restarts.
/// Throws NonConvergence if no restart reaches a feasible point.
inline ProxOutput prox_reference(const ReferenceProblem& problem, const ProxInput& input,
                                 const ReferenceOptions& options = {}) {
  if (input.n.size() != input.rho.size()) throw UsageError("prox_reference: rho count mismatch");
  std::vector<std::size_t> dims;
  std::vector<double> rho_coord;
  for (std::size_t b = 0; b < input.n.size(); ++b) {
    dims.push_back(input.n[b].size());
    rho_coord.insert(rho_coord.end(), input.n[b].size(), input.rho[b]);
  }
  const std::vector<double> n = detail::flatten(input.n);
  detail::ReferenceSolver solver(problem, n, rho_coord, options);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> jitter(-options.spread, options.spread);
  const Eigen::Map<const Eigen::VectorXd> center(n.data(), static_cast<Eigen::Index>(n.size()));

  Eigen::VectorXd best;
  double best_value = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    Eigen::VectorXd start = center;
    if (r > 0) {
      for (Eigen::Index i = 0; i < start.size(); ++i) start[i] += jitter(rng);
    }
    const Eigen::VectorXd s = solver.solve_from(start);
    const std::span<const double> sv(s.data(), static_cast<std::size_t>(s.size()));
    if (!s.allFinite() || solver.violation(sv) > options.feasibility_tol) continue;
    const double value = solver.base(sv);
    if (value < best_value) {
      best_value = value;
      best = s;
    }
  }
  if (best.size() == 0) throw NonConvergence("prox_reference: no restart reached a feasible point");
  return ProxOutput{detail::unflatten({best.data(), static_cast<std::size_t>(best.size())}, dims)};
}

/// KKT residual of a candidate solution: ‖∇L‖∞ with least-squares
/// multipliers for the active constraints, plus primal infeasibility and
/// any negative inequality multiplier.
inline double kkt_residual(const ReferenceProblem& problem, const ProxInput& input,
                           const ProxOutput& candidate, double active_tol = 1e-7) {
  const std::vector<double> n = detail::flatten(input.n);
  const std::vector<double> s = detail::flatten(candidate.x);
  std::vector<double> rho;
  for (std::size_t b = 0; b < input.n.size(); ++b) rho.insert(rho.end(), input.n[b].size(), input.rho[b]);
  const auto dim = static_cast<Eigen::Index>(s.size());

  auto grad_of = [&](const ScalarFn& fn) {
    Eigen::VectorXd g(dim);
    std::vector<double> p = s;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const auto k = static_cast<std::size_t>(i);
      const double h = 1e-6 * std::max(1.0, std::abs(s[k]));
      p[k] = s[k] + h;
      const double fp = fn(p);
      p[k] = s[k] - h;
      const double fm = fn(p);
      p[k] = s[k];
      g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
  };

  Eigen::VectorXd grad = problem.objective ? grad_of(problem.objective) : Eigen::VectorXd::Zero(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    grad[i] += rho[k] * (s[k] - n[k]);
  }

  double infeasible = 0.0;
  std::vector<Eigen::VectorXd> columns;
  std::vector<bool> is_inequality;
  for (const auto& g : problem.inequalities) {
    const double v = g(s);
    infeasible = std::max(infeasible, v);
    if (v > -active_tol) {
      columns.push_back(grad_of(g));
      is_inequality.push_back(true);
    }
  }
  for (const auto& h : problem.equalities) {
    infeasible = std::max(infeasible, std::abs(h(s)));
    columns.push_back(grad_of(h));
    is_inequality.push_back(false);
  }
  if (columns.empty()) return std::max(infeasible, grad.cwiseAbs().maxCoeff());

  Eigen::MatrixXd jac(dim, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t c = 0; c < columns.size(); ++c) jac.col(static_cast<Eigen::Index>(c)) = columns[c];
  // ∇f + Jλ = 0.
  const Eigen::VectorXd mult = jac.completeOrthogonalDecomposition().solve(-grad);
  double negative = 0.0;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (is_inequality[c]) negative = std::max(negative, -mult[static_cast<Eigen::Index>(c)]);
  }
  const double stationarity = (grad + jac * mult).cwiseAbs().maxCoeff();
  return std::max({stationarity, infeasible, negative});
}

}  // namespace fgadmm
