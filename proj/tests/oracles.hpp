// Test-only reference solvers. None of these share code with the ADMM path:
// MPC is solved as one dense KKT system over the whole horizon, the SVM by
// SMO on the dual followed by an exact search for the intercept.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fgadmm/problems.hpp"

namespace oracle {

// Stacked [q(0); u(0); q(1); u(1); …; q(K); u(K)] minimising the horizon cost
// subject to the initial-state and dynamics equalities.
inline std::vector<double> mpc_dense_kkt(const fgadmm::MpcSpec& spec) {
  const auto d = static_cast<Eigen::Index>(spec.state_dim());
  const auto k = static_cast<Eigen::Index>(spec.input_dim());
  const auto horizon = static_cast<Eigen::Index>(spec.horizon);
  const Eigen::Index block = d + k;
  const Eigen::Index nv = (horizon + 1) * block;
  const Eigen::Index nc = (horizon + 1) * d;

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nv + nc, nv + nc);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nv + nc);

  for (Eigen::Index t = 0; t <= horizon; ++t) {
    const auto& q = t == horizon ? spec.qf_diag : spec.q_diag;
    for (Eigen::Index i = 0; i < d; ++i) kkt(t * block + i, t * block + i) = q[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i < k; ++i) {
      kkt(t * block + d + i, t * block + d + i) = spec.r_diag[static_cast<std::size_t>(i)];
    }
  }

  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(nc, nv);
  for (Eigen::Index i = 0; i < d; ++i) {
    c(i, i) = 1.0;
    rhs(nv + i) = spec.q0[static_cast<std::size_t>(i)];
  }
  const Eigen::MatrixXd step = Eigen::MatrixXd::Identity(d, d) + spec.a;
  for (Eigen::Index t = 0; t < horizon; ++t) {
    const Eigen::Index row = (t + 1) * d;
    c.block(row, t * block, d, d) = -step;
    c.block(row, t * block + d, d, k) = -spec.b;
    c.block(row, (t + 1) * block, d, d) = Eigen::MatrixXd::Identity(d, d);
  }
  kkt.topRightCorner(nv, nc) = c.transpose();
  kkt.bottomLeftCorner(nc, nv) = c;

  const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
  return {sol.data(), sol.data() + nv};
}

struct SvmOptimum {
  std::vector<double> w;
  double b = 0.0;
  double primal = 0.0;
  double dual = 0.0;
};

inline double hinge_objective(const std::vector<fgadmm::LabeledPoint>& pts, double lambda,
                              const std::vector<double>& w, double b) {
  double v = 0.0;
  for (double wi : w) v += 0.5 * wi * wi;
  for (const auto& p : pts) {
    double f = b;
    for (std::size_t i = 0; i < w.size(); ++i) f += w[i] * p.x[i];
    v += lambda * std::max(0.0, 1.0 - p.y * f);
  }
  return v;
}

// min ½‖w‖² + λ Σ max(0, 1 − y(w·x + b)).
//
// Dual: max Σα − ½ αᵀ(YKY)α s.t. 0 ≤ α ≤ λ, Σ αy = 0, solved by SMO with the
// maximal-violating-pair rule. For fixed w the objective is convex and
// piecewise linear in b, so the best b lies at one of the breakpoints
// b = y_i − w·x_i and is found by checking each.
inline SvmOptimum svm_brute_force(const std::vector<fgadmm::LabeledPoint>& pts, double lambda,
                                  double tol = 1e-12, int max_sweeps = 1000000) {
  const std::size_t n = pts.size();
  const std::size_t dim = pts.front().x.size();
  std::vector<std::vector<double>> q(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < dim; ++k) dot += pts[i].x[k] * pts[j].x[k];
      q[i][j] = pts[i].y * pts[j].y * dot;
    }
  }
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // ∇ of ½αᵀQα − Σα

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    // I_up / I_low sets of the standard working-set selection.
    int up = -1, low = -1;
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
      const double y = pts[t].y;
      const double v = -y * grad[t];
      const bool in_up = (y > 0 && alpha[t] < lambda) || (y < 0 && alpha[t] > 0);
      const bool in_low = (y > 0 && alpha[t] > 0) || (y < 0 && alpha[t] < lambda);
      if (in_up && v > m_up) { m_up = v; up = static_cast<int>(t); }
      if (in_low && v < m_low) { m_low = v; low = static_cast<int>(t); }
    }
    if (up < 0 || low < 0 || m_up - m_low < tol) break;

    const auto i = static_cast<std::size_t>(up);
    const auto j = static_cast<std::size_t>(low);
    const double yi = pts[i].y, yj = pts[j].y;
    double curv = q[i][i] + q[j][j] - 2.0 * yi * yj * q[i][j];
    if (curv <= 1e-15) curv = 1e-15;
    // Move along yi·e_i − yj·e_j, which keeps Σ αy fixed.
    double step = (m_up - m_low) / curv;
    step = std::min(step, yi > 0 ? lambda - alpha[i] : alpha[i]);
    step = std::min(step, yj > 0 ? alpha[j] : lambda - alpha[j]);
    const double di = yi * step, dj = -yj * step;
    alpha[i] += di;
    alpha[j] += dj;
    for (std::size_t t = 0; t < n; ++t) grad[t] += q[t][i] * di + q[t][j] * dj;
  }

  SvmOptimum out;
  out.w.assign(dim, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < dim; ++k) out.w[k] += alpha[t] * pts[t].y * pts[t].x[k];
  }
  double dual = 0.0;
  for (std::size_t t = 0; t < n; ++t) dual += alpha[t];
  for (double wk : out.w) dual -= 0.5 * wk * wk;
  out.dual = dual;

  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) {
    double wx = 0.0;
    for (std::size_t k = 0; k < dim; ++k) wx += out.w[k] * p.x[k];
    const double b = p.y - wx;
    const double v = hinge_objective(pts, lambda, out.w, b);
    if (v < best) {
      best = v;
      out.b = b;
    }
  }
  out.primal = best;
  return out;
}

}  // namespace oracle
