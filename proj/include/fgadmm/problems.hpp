// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <ostream>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fgadmm/engine.hpp"
#include "fgadmm/factor_graph.hpp"
#include "fgadmm/prox_library.hpp"

namespace fgadmm {

// ---------------------------------------------------------------------------
// Circle packing
// ---------------------------------------------------------------------------

struct PackingSpec {
  std::size_t circles = 0;
  std::vector<HalfPlane> walls;
  double rho_radius = 2.0;  // ρ on radius-factor edges, must exceed kappa
  double kappa = 1.0;       // weight of the −½r² area reward
  double rho = 5.0;         // ρ on collision and wall edges
  double alpha = 1.0;
  bool nonnegative_radii = true;
  std::array<double, 4> bounds{0.0, 1.0, 0.0, 1.0};  // xmin, xmax, ymin, ymax for initial centers
};

/// Equilateral triangle with unit side, vertices (0,0), (1,0), (½, √3/2),
/// inward normals.
inline std::vector<HalfPlane> unit_triangle() {
  const double h = std::sqrt(3.0) / 2.0;
  return {HalfPlane({0.0, 1.0}, {0.0, 0.0}), HalfPlane({-h, -0.5}, {1.0, 0.0}),
          HalfPlane({h, -0.5}, {0.0, 0.0})};
}

inline VariableId packing_center_var(std::size_t circle) { return 2 * circle; }
inline VariableId packing_radius_var(std::size_t circle) { return 2 * circle + 1; }

/// Per circle a 2-D center and a 1-D radius node; one collision factor per
/// unordered pair, one radius factor per circle and one wall factor per
/// (circle, wall).
inline FactorGraph build_packing(const PackingSpec& spec) {
  if (spec.circles == 0) throw UsageError("build_packing: need at least one circle");
  if (!(spec.rho_radius > spec.kappa)) {
    throw UsageError("build_packing: rho_radius must exceed kappa");
  }
  GraphBuilder builder;
  for (std::size_t i = 0; i < spec.circles; ++i) {
    builder.declare_variable(2);
    builder.declare_variable(1);
  }
  auto collision = std::make_shared<CollisionOperator>();
  for (std::size_t i = 0; i < spec.circles; ++i) {
    for (std::size_t j = i + 1; j < spec.circles; ++j) {
      builder.add_factor(collision,
                         {packing_center_var(i), packing_radius_var(i), packing_center_var(j),
                          packing_radius_var(j)},
                         spec.rho, spec.alpha);
    }
  }
  auto radius = std::make_shared<RadiusOperator>(spec.kappa, spec.nonnegative_radii);
  for (std::size_t i = 0; i < spec.circles; ++i) {
    builder.add_factor(radius, {packing_radius_var(i)}, spec.rho_radius, spec.alpha);
  }
  for (std::size_t i = 0; i < spec.circles; ++i) {
    for (const HalfPlane& wall : spec.walls) {
      builder.add_factor(std::make_shared<WallOperator>(wall),
                         {packing_center_var(i), packing_radius_var(i)}, spec.rho, spec.alpha);
    }
  }
  return builder.freeze();
}

/// Initial z: centers uniform inside the walls (rejection sampled in
/// spec.bounds), radii small.
inline std::vector<double> packing_initial_z(const PackingSpec& spec, std::uint64_t seed,
                                             double initial_radius = 0.01) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(spec.bounds[0], spec.bounds[1]);
  std::uniform_real_distribution<double> uy(spec.bounds[2], spec.bounds[3]);
  std::vector<double> z;
  z.reserve(3 * spec.circles);
  for (std::size_t i = 0; i < spec.circles; ++i) {
    Vec2 c{};
    for (int attempt = 0;; ++attempt) {
      if (attempt > 100000) throw UsageError("packing_initial_z: feasible region looks empty");
      c = {ux(rng), uy(rng)};
      const bool inside = std::all_of(spec.walls.begin(), spec.walls.end(), [&](const HalfPlane& w) {
        return w.distance(c) >= initial_radius;
      });
      if (inside) break;
    }
    z.push_back(c[0]);
    z.push_back(c[1]);
    z.push_back(initial_radius);
  }
  return z;
}

struct Circle {
  Vec2 center{};
  double radius = 0.0;
};

inline std::vector<Circle> packing_circles(const PackingSpec& spec, const Solution& solution) {
  std::vector<Circle> out;
  for (std::size_t i = 0; i < spec.circles; ++i) {
    const auto& c = solution.at(packing_center_var(i));
    out.push_back({{c[0], c[1]}, solution.at(packing_radius_var(i))[0]});
  }
  return out;
}

struct PackingQuality {
  double max_overlap = 0.0;         // max over pairs of (r_i + r_j − ‖c_i − c_j‖)_+
  double max_wall_violation = 0.0;  // max over (circle, wall) of (r − Q·(c − V))_+
  double min_radius = 0.0;
  double covered_area = 0.0;  // Σ π r²
};

inline PackingQuality evaluate_packing(const PackingSpec& spec, const std::vector<Circle>& circles) {
  PackingQuality q;
  q.min_radius = circles.empty() ? 0.0 : circles.front().radius;
  for (std::size_t i = 0; i < circles.size(); ++i) {
    const Circle& a = circles[i];
    q.min_radius = std::min(q.min_radius, a.radius);
    q.covered_area += M_PI * a.radius * a.radius;
    for (std::size_t j = i + 1; j < circles.size(); ++j) {
      const Circle& b = circles[j];
      const double d = std::hypot(a.center[0] - b.center[0], a.center[1] - b.center[1]);
      q.max_overlap = std::max(q.max_overlap, a.radius + b.radius - d);
    }
    for (const HalfPlane& w : spec.walls) {
      q.max_wall_violation = std::max(q.max_wall_violation, a.radius - w.distance(a.center));
    }
  }
  return q;
}

// ---------------------------------------------------------------------------
// Model predictive control
// ---------------------------------------------------------------------------

struct CartPoleParams {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double length = 1.0;
  double gravity = 9.8;
};

/// Cart-pole linearised about the upright equilibrium, state
/// (position, velocity, angle, angular velocity), input horizontal force.
/// Forward Euler at step dt, returned in increment form
/// q(t+1) − q(t) = A q(t) + B u(t), i.e. A = dt·A_c, B = dt·B_c.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> pendulum_linearization(
    double dt = 0.040, const CartPoleParams& p = {}) {
  if (!(dt > 0.0)) throw UsageError("pendulum_linearization: dt must be positive");
  Eigen::MatrixXd ac = Eigen::MatrixXd::Zero(4, 4);
  Eigen::MatrixXd bc = Eigen::MatrixXd::Zero(4, 1);
  ac(0, 1) = 1.0;
  ac(1, 2) = -p.pole_mass * p.gravity / p.cart_mass;
  ac(2, 3) = 1.0;
  ac(3, 2) = (p.cart_mass + p.pole_mass) * p.gravity / (p.cart_mass * p.length);
  bc(1, 0) = 1.0 / p.cart_mass;
  bc(3, 0) = -1.0 / (p.cart_mass * p.length);
  return {dt * ac, dt * bc};
}

struct MpcSpec {
  std::size_t horizon = 1;  // K
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;
  std::vector<double> q_diag;
  std::vector<double> r_diag;
  std::vector<double> qf_diag;
  std::vector<double> q0;
  double rho = 1.0;
  double alpha = 1.0;

  std::size_t state_dim() const { return static_cast<std::size_t>(a.rows()); }
  std::size_t input_dim() const { return static_cast<std::size_t>(b.cols()); }
};

/// Cart-pole with Q = Qf = I, R = I and a tilted initial pole.
inline MpcSpec cartpole_mpc(std::size_t horizon, double dt = 0.040) {
  auto [a, b] = pendulum_linearization(dt);
  MpcSpec s;
  s.horizon = horizon;
  s.a = std::move(a);
  s.b = std::move(b);
  s.q_diag.assign(4, 1.0);
  s.qf_diag.assign(4, 1.0);
  s.r_diag.assign(1, 1.0);
  s.q0 = {0.0, 0.0, 0.1, 0.0};
  return s;
}

/// One node (q(t), u(t)) per t ∈ {0..K}; a cost factor per node, a dynamics
/// factor per consecutive pair and an initial-state factor on node 0.
inline FactorGraph build_mpc(const MpcSpec& spec) {
  const std::size_t d = spec.state_dim();
  const std::size_t k = spec.input_dim();
  if (spec.horizon == 0) throw UsageError("build_mpc: horizon must be >= 1");
  if (d == 0 || k == 0 || spec.q_diag.size() != d || spec.qf_diag.size() != d ||
      spec.r_diag.size() != k || spec.q0.size() != d) {
    throw UsageError("build_mpc: dimension mismatch");
  }
  GraphBuilder builder;
  for (std::size_t t = 0; t <= spec.horizon; ++t) builder.declare_variable(d + k);

  builder.add_factor(std::make_shared<MpcInitOperator>(spec.q0, k), {0}, spec.rho, spec.alpha);
  auto stage = std::make_shared<MpcCostOperator>(spec.q_diag, spec.r_diag);
  auto terminal = std::make_shared<MpcCostOperator>(spec.qf_diag, spec.r_diag);
  for (std::size_t t = 0; t <= spec.horizon; ++t) {
    builder.add_factor(t == spec.horizon ? terminal : stage, {t}, spec.rho, spec.alpha);
  }
  auto dyn = std::make_shared<MpcDynOperator>(LinearSystem(spec.a, spec.b));
  for (std::size_t t = 0; t < spec.horizon; ++t) {
    builder.add_factor(dyn, {t, t + 1}, spec.rho, spec.alpha);
  }
  return builder.freeze();
}

/// Σ_{t<K} ½qᵀQq + ½q_Kᵀ Qf q_K + Σ_{t≤K} ½uᵀRu for a solution of build_mpc.
inline double mpc_cost(const MpcSpec& spec, const Solution& solution) {
  const std::size_t d = spec.state_dim();
  double cost = 0.0;
  for (std::size_t t = 0; t <= spec.horizon; ++t) {
    const auto& v = solution.at(t);
    const auto& qd = t == spec.horizon ? spec.qf_diag : spec.q_diag;
    for (std::size_t i = 0; i < d; ++i) cost += 0.5 * qd[i] * v[i] * v[i];
    for (std::size_t i = 0; i < spec.r_diag.size(); ++i) {
      cost += 0.5 * spec.r_diag[i] * v[d + i] * v[d + i];
    }
  }
  return cost;
}

/// Largest ‖q(t+1) − (I+A)q(t) − B u(t)‖∞ and ‖q(0) − q0‖∞.
inline double mpc_constraint_violation(const MpcSpec& spec, const Solution& solution) {
  const auto d = static_cast<Eigen::Index>(spec.state_dim());
  const auto k = static_cast<Eigen::Index>(spec.input_dim());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    worst = std::max(worst, std::abs(solution.at(0)[static_cast<std::size_t>(i)] -
                                     spec.q0[static_cast<std::size_t>(i)]));
  }
  for (std::size_t t = 0; t < spec.horizon; ++t) {
    const Eigen::Map<const Eigen::VectorXd> cur(solution.at(t).data(), d + k);
    const Eigen::Map<const Eigen::VectorXd> next(solution.at(t + 1).data(), d + k);
    const Eigen::VectorXd r = next.head(d) - cur.head(d) - spec.a * cur.head(d) - spec.b * cur.tail(k);
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Soft-margin SVM
// ---------------------------------------------------------------------------

struct SvmSpec {
  std::vector<LabeledPoint> points;
  double lambda = 1.0;
  double rho = 1.0;
  double alpha = 1.0;
};

inline VariableId svm_w_var(std::size_t i) { return i; }
inline VariableId svm_b_var(std::size_t n) { return n; }
inline VariableId svm_slack_var(std::size_t n, std::size_t i) { return n + 1 + i; }

/// N copies of w chained by equality factors, one shared b, one slack per
/// point. The norm term is split into N parts of weight 1/N.
inline FactorGraph build_svm(const SvmSpec& spec) {
  const std::size_t n = spec.points.size();
  if (n == 0) throw UsageError("build_svm: empty point set");
  const std::size_t dim = spec.points.front().x.size();
  if (dim == 0) throw UsageError("build_svm: points need at least one feature");
  for (const LabeledPoint& p : spec.points) {
    if (p.x.size() != dim) throw UsageError("build_svm: inconsistent feature dimension");
  }

  GraphBuilder builder;
  for (std::size_t i = 0; i < n; ++i) builder.declare_variable(dim);
  builder.declare_variable(1);
  for (std::size_t i = 0; i < n; ++i) builder.declare_variable(1);

  auto norm = std::make_shared<SvmNormOperator>(dim, 1.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) builder.add_factor(norm, {svm_w_var(i)}, spec.rho, spec.alpha);
  auto slack = std::make_shared<SvmSlackOperator>(spec.lambda);
  for (std::size_t i = 0; i < n; ++i) {
    builder.add_factor(slack, {svm_slack_var(n, i)}, spec.rho, spec.alpha);
  }
  for (std::size_t i = 0; i < n; ++i) {
    builder.add_factor(std::make_shared<SvmMarginOperator>(spec.points[i]),
                       {svm_w_var(i), svm_b_var(n), svm_slack_var(n, i)}, spec.rho, spec.alpha);
  }
  auto equality = std::make_shared<EqualityOperator>(dim);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    builder.add_factor(equality, {svm_w_var(i), svm_w_var(i + 1)}, spec.rho, spec.alpha);
  }
  return builder.freeze();
}

struct SvmModel {
  std::vector<double> w;
  double b = 0.0;

  double decision(const std::vector<double>& x) const {
    double v = b;
    for (std::size_t i = 0; i < w.size(); ++i) v += w[i] * x[i];
    return v;
  }
};

/// Averages the w copies of a build_svm solution.
inline SvmModel svm_model(const SvmSpec& spec, const Solution& solution) {
  const std::size_t n = spec.points.size();
  SvmModel model{std::vector<double>(solution.at(0).size(), 0.0), solution.at(svm_b_var(n))[0]};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < model.w.size(); ++k) model.w[k] += solution.at(svm_w_var(i))[k];
  }
  for (double& v : model.w) v /= static_cast<double>(n);
  return model;
}

/// ½‖w‖² + λ Σ max{0, 1 − y (w·x + b)}.
inline double svm_objective(const std::vector<LabeledPoint>& points, double lambda,
                            const SvmModel& model) {
  double value = 0.0;
  for (double v : model.w) value += 0.5 * v * v;
  for (const LabeledPoint& p : points) {
    value += lambda * std::max(0.0, 1.0 - p.y * model.decision(p.x));
  }
  return value;
}

inline double svm_accuracy(const std::vector<LabeledPoint>& points, const SvmModel& model) {
  std::size_t correct = 0;
  for (const LabeledPoint& p : points) {
    if ((model.decision(p.x) >= 0.0 ? 1 : -1) == p.y) ++correct;
  }
  return points.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(points.size());
}

/// ⌊N/2⌋ points from N(−s/2·e₁, I) labelled −1, the rest from N(+s/2·e₁, I)
/// labelled +1.
inline std::vector<LabeledPoint> gen_gaussian_data(std::size_t n, std::size_t dim,
                                                   double separation, std::uint64_t seed) {
  if (n < 2) throw UsageError("gen_gaussian_data: need at least two points");
  if (dim == 0) throw UsageError("gen_gaussian_data: dim must be >= 1");
  if (!(separation >= 0.0)) throw UsageError("gen_gaussian_data: separation must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<LabeledPoint> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledPoint p;
    p.y = i < n / 2 ? -1 : 1;
    p.x.resize(dim);
    for (double& v : p.x) v = normal(rng);
    p.x[0] += 0.5 * separation * p.y;
    points.push_back(std::move(p));
  }
  return points;
}

/// CSV rows `x1,…,xd,y`.
inline void write_dataset_csv(std::ostream& os, const std::vector<LabeledPoint>& points) {
  for (const LabeledPoint& p : points) {
    for (double v : p.x) os << format_exact(v) << ',';
    os << p.y << '\n';
  }
}

}  // namespace fgadmm
