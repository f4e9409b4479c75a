// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fgadmm/error.hpp"
#include "fgadmm/prox.hpp"

namespace fgadmm {

using Vec2 = std::array<double, 2>;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Feasible side {c : Q·(c − V) ≥ 0}; Q is normalised on construction.
class HalfPlane {
 public:
  HalfPlane(Vec2 normal, Vec2 point) : point_(point) {
    const double len = std::hypot(normal[0], normal[1]);
    if (!(len > 0.0) || !std::isfinite(len)) throw UsageError("HalfPlane: zero normal");
    normal_ = {normal[0] / len, normal[1] / len};
  }

  const Vec2& normal() const noexcept { return normal_; }
  const Vec2& point() const noexcept { return point_; }

  /// Signed distance of c to the boundary, positive inside.
  double distance(const Vec2& c) const noexcept {
    return normal_[0] * (c[0] - point_[0]) + normal_[1] * (c[1] - point_[1]);
  }

 private:
  Vec2 normal_{};
  Vec2 point_{};
};

/// Increment-form dynamics q(t+1) − q(t) = A q(t) + B u(t).
///
/// Holds the Gram blocks (I+A)(I+A)ᵀ and BBᵀ so that each weighted
/// projection only assembles and factors a d×d matrix.
class LinearSystem {
 public:
  LinearSystem(Eigen::MatrixXd a, Eigen::MatrixXd b) : a_(std::move(a)), b_(std::move(b)) {
    if (a_.rows() == 0 || a_.rows() != a_.cols()) throw UsageError("LinearSystem: A must be square");
    if (b_.rows() != a_.rows() || b_.cols() == 0) {
      throw UsageError("LinearSystem: B must have as many rows as A");
    }
    transition_ = Eigen::MatrixXd::Identity(a_.rows(), a_.cols()) + a_;
    transition_gram_ = transition_ * transition_.transpose();
    input_gram_ = b_ * b_.transpose();
  }

  std::size_t state_dim() const noexcept { return static_cast<std::size_t>(a_.rows()); }
  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(b_.cols()); }
  const Eigen::MatrixXd& a() const noexcept { return a_; }
  const Eigen::MatrixXd& b() const noexcept { return b_; }
  /// I + A.
  const Eigen::MatrixXd& transition() const noexcept { return transition_; }

  /// Weighted projection of (q_t, u_t, q_next) onto q_next = (I+A) q_t + B u_t,
  /// in place. Weights: rho_q on q_t, rho_u on u_t, rho_next on q_next.
  void project(std::span<double> q, std::span<double> u, std::span<double> q_next, double rho_q,
               double rho_u, double rho_next) const {
    using Eigen::Map;
    using Eigen::VectorXd;
    Map<VectorXd> qv(q.data(), static_cast<Eigen::Index>(q.size()));
    Map<VectorXd> uv(u.data(), static_cast<Eigen::Index>(u.size()));
    Map<VectorXd> nv(q_next.data(), static_cast<Eigen::Index>(q_next.size()));

    const VectorXd residual = transition_ * qv + b_ * uv - nv;
    Eigen::MatrixXd s = transition_gram_ / rho_q + input_gram_ / rho_u;
    s.diagonal().array() += 1.0 / rho_next;
    // The −I block of [I+A, B, −I] keeps s positive definite.
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    if (llt.info() != Eigen::Success) throw NumericalError("mpc_dyn: projection system is singular");
    const VectorXd lambda = llt.solve(residual);

    qv -= transition_.transpose() * lambda / rho_q;
    uv -= b_.transpose() * lambda / rho_u;
    nv += lambda / rho_next;
  }

 private:
  Eigen::MatrixXd a_;
  Eigen::MatrixXd b_;
  Eigen::MatrixXd transition_;
  Eigen::MatrixXd transition_gram_;
  Eigen::MatrixXd input_gram_;
};

struct LabeledPoint {
  std::vector<double> x;
  int y = 1;
};

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

struct CircleBlock {
  Vec2 center{};
  double radius = 0.0;
};

struct CollisionResult {
  CircleBlock first;
  CircleBlock second;
  bool degenerate = false;  // centers coincided; fallback direction (1, 0) used
};

/// Weighted projection onto ‖c1 − c2‖ ≥ r1 + r2 with one weight per block
/// (center 1, radius 1, center 2, radius 2).
///
/// The centers separate along n̂ = (n2c − n1c)/‖n2c − n1c‖ and the radii
/// shrink; each block moves by μ/ρ_block where μ = D / Σ 1/ρ_block and
/// D = max{0, n1r + n2r − ‖n1c − n2c‖}.
inline CollisionResult collision_prox(const Vec2& n1c, double n1r, const Vec2& n2c, double n2r,
                                      double rho_c1, double rho_r1, double rho_c2,
                                      double rho_r2) {
  CollisionResult out{{n1c, n1r}, {n2c, n2r}, false};
  const double dx = n2c[0] - n1c[0];
  const double dy = n2c[1] - n1c[1];
  const double dist = std::hypot(dx, dy);
  const double overlap = std::max(0.0, n1r + n2r - dist);
  if (overlap == 0.0) return out;

  Vec2 dir{1.0, 0.0};
  if (dist > 0.0) {
    dir = {dx / dist, dy / dist};
  } else {
    out.degenerate = true;
  }
  const double mu = overlap / (1.0 / rho_c1 + 1.0 / rho_r1 + 1.0 / rho_c2 + 1.0 / rho_r2);
  const double s1 = mu / rho_c1;
  const double s2 = mu / rho_c2;
  out.first.center = {n1c[0] - s1 * dir[0], n1c[1] - s1 * dir[1]};
  out.first.radius = n1r - mu / rho_r1;
  out.second.center = {n2c[0] + s2 * dir[0], n2c[1] + s2 * dir[1]};
  out.second.radius = n2r - mu / rho_r2;
  return out;
}

/// Per-circle weights: ρ1 on both blocks of circle 1, ρ2 on circle 2.
inline CollisionResult collision_prox(const Vec2& n1c, double n1r, const Vec2& n2c, double n2r,
                                      double rho1, double rho2) {
  return collision_prox(n1c, n1r, n2c, n2r, rho1, rho1, rho2, rho2);
}

/// Weighted projection of (c, r) onto Q·(c − V) ≥ r.
inline CircleBlock wall_prox(const Vec2& nc, double nr, const HalfPlane& plane,
                             double rho_c = 1.0, double rho_r = 1.0) {
  const double violation = nr - plane.distance(nc);
  if (violation <= 0.0) return {nc, nr};
  const Vec2& q = plane.normal();
  const double mu = violation / (1.0 / rho_c + 1.0 / rho_r);
  return {{nc[0] + mu / rho_c * q[0], nc[1] + mu / rho_c * q[1]}, nr - mu / rho_r};
}

/// argmin_r −κ/2 r² + ρ/2 (r − nr)², optionally restricted to r ≥ 0.
///
/// Without the restriction a negative radius has no constraint pushing back
/// and the reward drives it to −∞, so packing graphs enable it.
inline double radius_prox(double nr, double rho, double kappa = 1.0, bool nonnegative = false) {
  if (!(rho > kappa)) {
    throw DomainError("radius prox requires rho > kappa (rho=" + std::to_string(rho) +
                      ", kappa=" + std::to_string(kappa) + ")");
  }
  const double r = rho * nr / (rho - kappa);
  return nonnegative ? std::max(0.0, r) : r;
}

/// Stage cost ½xᵀQx + ½uᵀRu with diagonal Q, R: x_i = ρ n_i / (q_i + ρ).
inline void mpc_cost_prox(std::span<const double> nx, std::span<const double> nu,
                          std::span<const double> q_diag, std::span<const double> r_diag,
                          double rho, std::span<double> x, std::span<double> u) {
  for (std::size_t i = 0; i < nx.size(); ++i) x[i] = rho * nx[i] / (q_diag[i] + rho);
  for (std::size_t i = 0; i < nu.size(); ++i) u[i] = rho * nu[i] / (r_diag[i] + rho);
}

/// (ξ)_+ of the semi-lasso λξ + ρ/2 (ξ − n)², ξ ≥ 0.
inline double svm_slack_prox(double n, double lambda, double rho) {
  return std::max(0.0, n - lambda / rho);
}

/// scale/2 ‖w‖² + ρ/2 ‖w − n‖²  →  w = ρ n / (ρ + scale).
inline void svm_norm_prox(std::span<const double> n, double rho, double scale,
                          std::span<double> w) {
  const double f = rho / (rho + scale);
  for (std::size_t i = 0; i < n.size(); ++i) w[i] = f * n[i];
}

struct MarginResult {
  std::vector<double> w;
  double b = 0.0;
  double xi = 0.0;
};

/// Weighted projection of (w, b, ξ) onto y (w·x + b) ≥ 1 − ξ.
///
/// μ = max{0, (1 − ξ_n − y(w_n·x + b_n)) / (‖x‖²/ρ1 + 1/ρ2 + 1/ρ3)} and the
/// blocks move along the constraint gradient: w += μ y x/ρ1, b += μ y/ρ2,
/// ξ += μ/ρ3.
inline void svm_margin_prox(std::span<const double> n1, double n2, double n3,
                            std::span<const double> x, int y, double rho1, double rho2,
                            double rho3, std::span<double> w, double& b, double& xi) {
  double dot = 0.0;
  double norm2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += n1[i] * x[i];
    norm2 += x[i] * x[i];
  }
  const double yd = static_cast<double>(y);
  const double violation = 1.0 - n3 - yd * (dot + n2);
  const double mu = std::max(0.0, violation / (norm2 / rho1 + 1.0 / rho2 + 1.0 / rho3));
  for (std::size_t i = 0; i < x.size(); ++i) w[i] = n1[i] + mu / rho1 * yd * x[i];
  b = n2 + mu / rho2 * yd;
  xi = n3 + mu / rho3;
}

inline MarginResult svm_margin_prox(const std::vector<double>& n1, double n2, double n3,
                                    const LabeledPoint& point, double rho1, double rho2,
                                    double rho3) {
  MarginResult out{std::vector<double>(n1.size()), 0.0, 0.0};
  svm_margin_prox(n1, n2, n3, point.x, point.y, rho1, rho2, rho3, out.w, out.b, out.xi);
  return out;
}

/// w1 = w2 = (ρ1 n1 + ρ2 n2)/(ρ1 + ρ2).
inline void equality_prox(std::span<const double> n1, std::span<const double> n2, double rho1,
                          double rho2, std::span<double> w1, std::span<double> w2) {
  const double total = rho1 + rho2;
  for (std::size_t i = 0; i < n1.size(); ++i) {
    const double v = (rho1 * n1[i] + rho2 * n2[i]) / total;
    w1[i] = v;
    w2[i] = v;
  }
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> diag_of(const Eigen::MatrixXd& m) {
  return {m.diagonal().data(), m.diagonal().data() + m.rows()};
}

inline nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

/// Slots: center 1 (2), radius 1 (1), center 2 (2), radius 2 (1).
class CollisionOperator final : public ProxOperator {
 public:
  CollisionOperator() : ProxOperator({2, 1, 2, 1}) {}

  std::string_view kind() const noexcept override { return "collision"; }

  void eval(std::span<const double> n, std::span<const double> rho,
            std::span<double> x) const override {
    const CollisionResult r =
        collision_prox({n[0], n[1]}, n[2], {n[3], n[4]}, n[5], rho[0], rho[1], rho[2], rho[3]);
    if (r.degenerate) degenerate_.fetch_add(1, std::memory_order_relaxed);
    x[0] = r.first.center[0];
    x[1] = r.first.center[1];
    x[2] = r.first.radius;
    x[3] = r.second.center[0];
    x[4] = r.second.center[1];
    x[5] = r.second.radius;
  }

  nlohmann::json params() const override { return nlohmann::json::object(); }

  /// Number of evaluations that hit coincident centers.
  std::size_t degenerate_count() const noexcept {
    return degenerate_.load(std::memory_order_relaxed);
  }

 private:
  mutable std::atomic<std::size_t> degenerate_{0};
};

/// Slots: center (2), radius (1).
class WallOperator final : public ProxOperator {
 public:
  explicit WallOperator(HalfPlane plane) : ProxOperator({2, 1}), plane_(plane) {}

  std::string_view kind() const noexcept override { return "wall"; }

  void eval(std::span<const double> n, std::span<const double> rho,
            std::span<double> x) const override {
    const CircleBlock r = wall_prox({n[0], n[1]}, n[2], plane_, rho[0], rho[1]);
    x[0] = r.center[0];
    x[1] = r.center[1];
    x[2] = r.radius;
  }

  nlohmann::json params() const override {
    return {{"normal", plane_.normal()}, {"point", plane_.point()}};
  }

  const HalfPlane& plane() const noexcept { return plane_; }

 private:
  HalfPlane plane_;
};

/// Area reward −κ/2 r² on one radius.
class RadiusOperator final : public ProxOperator {
 public:
  explicit RadiusOperator(double kappa = 1.0, bool nonnegative = false)
      : ProxOperator({1}), kappa_(kappa), nonnegative_(nonnegative) {
    if (!(kappa >= 0.0)) throw UsageError("radius: kappa must be nonnegative");
  }

  std::string_view kind() const noexcept override { return "radius"; }

  void eval(std::span<const double> n, std::span<const double> rho,
            std::span<double> x) const override {
    x[0] = radius_prox(n[0], rho[0], kappa_, nonnegative_);
  }

  nlohmann::json params() const override {
    return {{"kappa", kappa_}, {"nonnegative", nonnegative_}};
  }

  double kappa() const noexcept { return kappa_; }
  bool nonnegative() const noexcept { return nonnegative_; }

 private:
  double kappa_;
  bool nonnegative_;
};

/// One slot (q, u) of dim d + k with cost ½qᵀQq + ½uᵀRu.
class MpcCostOperator final : public ProxOperator {
 public:
  MpcCostOperator(std::vector<double> q_diag, std::vector<double> r_diag)
      : ProxOperator({q_diag.size() + r_diag.size()}),
        q_(std::move(q_diag)),
        r_(std::move(r_diag)) {
    if (q_.empty()) throw UsageError("mpc_cost: empty state cost");
    for (double v : q_) {
      if (!(v >= 0.0)) throw UsageError("mpc_cost: negative diagonal entry in Q");
    }
    for (double v : r_) {
      if (!(v >= 0.0)) throw UsageError("mpc_cost: negative diagonal entry in R");
    }
  }

  std::string_view kind() const noexcept override { return "mpc_cost"; }

  void eval(std::span<const double> n, std::span<const double> rho,
            std::span<double> x) const override {
    const std::size_t d = q_.size();
    mpc_cost_prox(n.first(d), n.subspan(d), q_, r_, rho[0], x.first(d), x.subspan(d));
  }

  nlohmann::json params() const override { return {{"q", q_}, {"r", r_}}; }

 private:
  std::vector<double> q_;
  std::vector<double> r_;
};

/// Slots: (q_t, u_t) and (q_t+1, u_t+1); u_t+1 passes through.
class MpcDynOperator final : public ProxOperator {
 public:
  explicit MpcDynOperator(LinearSystem sys)
      : ProxOperator({sys.state_dim() + sys.input_dim(), sys.state_dim() + sys.input_dim()}),
        sys_(std::move(sys)) {}

  std::string_view kind() const noexcept override { return "mpc_dyn"; }

  void eval(std::span<const double> n, std::span<const double> rho,
            std::span<double> x) const override {
    const std::size_t d = sys_.state_dim();
    const std::size_t k = sys_.input_dim();
    std::copy(n.begin(), n.end(), x.begin());
    sys_.project(x.subspan(0, d), x.subspan(d, k), x.subspan(d + k, d), rho[0], rho[0], rho[1]);
  }

  nlohmann::json params() const override {
    return {{"a", detail::matrix_to_json(sys_.a())}, {"b", detail::matrix_to_json(sys_.b())}};
  }

  const LinearSystem& system() const noexcept { return sys_; }

 private:
  LinearSystem sys_;
};

/// Clamps the state block of (q, u) to the known initial state.
class MpcInitOperator final : public ProxOperator {
 public:
  MpcInitOperator(std::vector<double> q0, std::size_t input_dim)
      : ProxOperator({q0.size() + input_dim}), q0_(std::move(q0)), input_dim_(input_dim) {}

  std::string_view kind() const noexcept override { return "mpc_init"; }

  void eval(std::span<const double> n, std::span<const double>,
            std::span<double> x) const override {
    std::copy(q0_.begin(), q0_.end(), x.begin());
    std::copy(n.begin() + static_cast<std::ptrdiff_t>(q0_.size()), n.end(),
              x.begin() + static_cast<std::ptrdiff_t>(q0_.size()));
  }

  nlohmann::json params() const override { return {{"q0", q0_}, {"k", input_dim_}}; }

 private:
  std::vector<double> q0_;
  std::size_t input_dim_;
};

class SvmSlackOperator final : public ProxOperator {
 public:
  explicit SvmSlackOperator(double lambda) : ProxOperator({1}), lambda_(lambda) {
    if (!(lambda >= 0.0)) throw UsageError("svm_slack: lambda must be nonnegative");
  }

  std::string_view kind() const noexcept override { return "svm_slack"; }

  void eval(std::span<const double> n, std::span<const double> rho,
            std::span<double> x) const override {
    x[0] = svm_slack_prox(n[0], lambda_, rho[0]);
  }

  nlohmann::json params() const override { return {{"lambda", lambda_}}; }

 private:
  double lambda_;
};

class SvmNormOperator final : public ProxOperator {
 public:
  SvmNormOperator(std::size_t dim, double scale) : ProxOperator({dim}), scale_(scale) {
    if (!(scale > 0.0)) throw UsageError("svm_norm: scale must be positive");
  }

  std::string_view kind() const noexcept override { return "svm_norm"; }

  void eval(std::span<const double> n, std::span<const double> rho,
            std::span<double> x) const override {
    svm_norm_prox(n, rho[0], scale_, x);
  }

  nlohmann::json params() const override {
    return {{"dim", slot_dims()[0]}, {"scale", scale_}};
  }

 private:
  double scale_;
};

/// Slots: w (dim), b (1), ξ (1).
class SvmMarginOperator final : public ProxOperator {
 public:
  explicit SvmMarginOperator(LabeledPoint point)
      : ProxOperator({point.x.size(), 1, 1}), point_(std::move(point)) {
    if (point_.y != 1 && point_.y != -1) throw UsageError("svm_margin: label must be -1 or +1");
  }

  std::string_view kind() const noexcept override { return "svm_margin"; }

  void eval(std::span<const double> n, std::span<const double> rho,
            std::span<double> x) const override {
    const std::size_t d = point_.x.size();
    svm_margin_prox(n.first(d), n[d], n[d + 1], point_.x, point_.y, rho[0], rho[1], rho[2],
                    x.first(d), x[d], x[d + 1]);
  }

  nlohmann::json params() const override { return {{"x", point_.x}, {"y", point_.y}}; }

  const LabeledPoint& point() const noexcept { return point_; }

 private:
  LabeledPoint point_;
};

class EqualityOperator final : public ProxOperator {
 public:
  explicit EqualityOperator(std::size_t dim) : ProxOperator({dim, dim}) {}

  std::string_view kind() const noexcept override { return "equality"; }

  void eval(std::span<const double> n, std::span<const double> rho,
            std::span<double> x) const override {
    const std::size_t d = slot_dims()[0];
    equality_prox(n.first(d), n.subspan(d), rho[0], rho[1], x.first(d), x.subspan(d));
  }

  nlohmann::json params() const override { return {{"dim", slot_dims()[0]}}; }
};

/// weight/2 ‖s − target‖² on one slot; weight 0 gives the identity prox.
class QuadraticOperator final : public ProxOperator {
 public:
  QuadraticOperator(double weight, std::vector<double> target)
      : ProxOperator({target.size()}), weight_(weight), target_(std::move(target)) {
    if (!(weight >= 0.0)) throw UsageError("quadratic: weight must be nonnegative");
    if (target_.empty()) throw UsageError("quadratic: empty target");
  }

  std::string_view kind() const noexcept override { return "quadratic"; }

  void eval(std::span<const double> n, std::span<const double> rho,
            std::span<double> x) const override {
    const double total = weight_ + rho[0];
    for (std::size_t i = 0; i < n.size(); ++i) x[i] = (weight_ * target_[i] + rho[0] * n[i]) / total;
  }

  nlohmann::json params() const override { return {{"weight", weight_}, {"target", target_}}; }

 private:
  double weight_;
  std::vector<double> target_;
};

}  // namespace fgadmm
