// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fgadmm/error.hpp"
#include "fgadmm/factor_graph.hpp"
#include "fgadmm/graph_io.hpp"
#include "fgadmm/worker_pool.hpp"

namespace fgadmm {

/// The five auxiliary arrays of the message-passing iteration.
/// x, m, u, n follow edge order; z follows variable order.
struct AdmmState {
  std::vector<double> x, m, u, n, z;
  std::size_t iteration = 0;
};

struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
};

enum class Phase : std::size_t { kX = 0, kM, kZ, kU, kN };
inline constexpr std::size_t kPhaseCount = 5;
inline constexpr std::array<const char*, kPhaseCount> kPhaseNames = {"x", "m", "z", "u", "n"};

using PhaseTimes = std::array<double, kPhaseCount>;  // seconds

struct RunConfig {
  std::size_t max_iterations = 1000;
  double primal_tol = 0.0;  // 0 disables
  double dual_tol = 0.0;    // 0 disables
  std::size_t workers = 1;
  std::size_t record_every = 1;
  std::uint64_t seed = 0;
  bool random_init = false;
};

struct ReportRow {
  std::size_t iter = 0;
  PhaseTimes phase_seconds{};
  double primal = 0.0;
  double dual = 0.0;
};

struct RunReport {
  std::size_t iterations = 0;
  bool converged = false;
  Residuals final_residuals;
  PhaseTimes phase_seconds{};  // summed over all iterations
  double total_seconds = 0.0;
  std::vector<ReportRow> history;

  double mean_phase_seconds(Phase p) const {
    return iterations == 0 ? 0.0 : phase_seconds[static_cast<std::size_t>(p)] / iterations;
  }
  double seconds_per_iteration() const {
    return iterations == 0 ? 0.0 : total_seconds / static_cast<double>(iterations);
  }
};

using Solution = std::vector<std::vector<double>>;

struct RunResult {
  Solution solution;  // z unpacked per variable
  RunReport report;
  AdmmState state;
};

// ---------------------------------------------------------------------------
// State initialisation
// ---------------------------------------------------------------------------

inline AdmmState zero_state(const FactorGraph& graph) {
  const std::size_t e = graph.total_edge_payload();
  AdmmState s;
  s.x.assign(e, 0.0);
  s.m.assign(e, 0.0);
  s.u.assign(e, 0.0);
  s.n.assign(e, 0.0);
  s.z.assign(graph.total_variable_payload(), 0.0);
  return s;
}

namespace detail {

inline void refresh_n(const FactorGraph& graph, AdmmState& s) {
  for (const Edge& edge : graph.edges()) {
    for (std::size_t k = 0; k < edge.dim; ++k) {
      s.n[edge.offset + k] = s.z[edge.z_offset + k] - s.u[edge.offset + k];
    }
  }
}

}  // namespace detail

/// z and u uniform in [−0.5, 0.5], n = z − u, x = m = 0.
inline AdmmState random_state(const FactorGraph& graph, std::uint64_t seed) {
  AdmmState s = zero_state(graph);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  for (double& v : s.z) v = uniform(rng);
  for (double& v : s.u) v = uniform(rng);
  detail::refresh_n(graph, s);
  return s;
}

/// Starts from a given consensus value: u = 0, n = z.
inline AdmmState state_from_z(const FactorGraph& graph, std::span<const double> z) {
  if (z.size() != graph.total_variable_payload()) {
    throw UsageError("state_from_z: expected " + std::to_string(graph.total_variable_payload()) +
                     " values, got " + std::to_string(z.size()));
  }
  AdmmState s = zero_state(graph);
  s.z.assign(z.begin(), z.end());
  detail::refresh_n(graph, s);
  return s;
}

inline AdmmState init_state(const FactorGraph& graph, std::optional<std::uint64_t> seed = {}) {
  return seed ? random_state(graph, *seed) : zero_state(graph);
}

inline void check_state(const FactorGraph& graph, const AdmmState& s) {
  const std::size_t e = graph.total_edge_payload();
  if (s.x.size() != e || s.m.size() != e || s.u.size() != e || s.n.size() != e ||
      s.z.size() != graph.total_variable_payload()) {
    throw UsageError("ADMM state does not match the graph layout");
  }
}

inline Solution unpack(const FactorGraph& graph, std::span<const double> z) {
  Solution out;
  out.reserve(graph.variables().size());
  for (const VariableNode& v : graph.variables()) {
    out.emplace_back(z.begin() + static_cast<std::ptrdiff_t>(v.z_offset),
                     z.begin() + static_cast<std::ptrdiff_t>(v.z_offset + v.dim));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Phase kernels over a range of tasks. Tasks are factors for x, variables for
// z and edges for m, u, n. Each task writes only its own slice.
// ---------------------------------------------------------------------------

namespace kernels {

inline void update_x(const FactorGraph& graph, AdmmState& s, TaskRange r) {
  const auto factors = graph.factors();
  const auto rho = graph.rho();
  for (std::size_t a = r.begin; a < r.end; ++a) {
    const FunctionNode& f = factors[a];
    const std::span<const double> n(s.n.data() + f.payload_offset, f.payload_size);
    const std::span<double> x(s.x.data() + f.payload_offset, f.payload_size);
    try {
      f.op->eval(n, rho.subspan(f.first_edge, f.edge_count), x);
    } catch (const DomainError& e) {
      throw DomainError("factor " + std::to_string(a) + " (" + std::string(f.op->kind()) +
                        "): " + e.what());
    } catch (const NumericalError& e) {
      throw NumericalError("factor " + std::to_string(a) + " (" + std::string(f.op->kind()) +
                           "): " + e.what());
    }
    for (double v : x) {
      if (!std::isfinite(v)) {
        throw NumericalError("iteration " + std::to_string(s.iteration) + ": factor " +
                             std::to_string(a) + " (" + std::string(f.op->kind()) +
                             ") produced a non-finite x");
      }
    }
  }
}

inline void update_m(const FactorGraph& graph, AdmmState& s, TaskRange r) {
  const auto edges = graph.edges();
  for (std::size_t e = r.begin; e < r.end; ++e) {
    const Edge& edge = edges[e];
    for (std::size_t k = edge.offset; k < edge.offset + edge.dim; ++k) s.m[k] = s.x[k] + s.u[k];
  }
}

inline void update_z(const FactorGraph& graph, AdmmState& s, TaskRange r) {
  const auto variables = graph.variables();
  const auto edges = graph.edges();
  const auto rho = graph.rho();
  for (std::size_t b = r.begin; b < r.end; ++b) {
    const VariableNode& var = variables[b];
    double* z = s.z.data() + var.z_offset;
    for (std::size_t k = 0; k < var.dim; ++k) z[k] = 0.0;
    for (EdgeId e : graph.incident_edges(b)) {
      const double w = rho[e];
      const double* m = s.m.data() + edges[e].offset;
      for (std::size_t k = 0; k < var.dim; ++k) z[k] += w * m[k];
    }
    for (std::size_t k = 0; k < var.dim; ++k) {
      z[k] /= var.weight_sum;
      if (!std::isfinite(z[k])) {
        throw NumericalError("iteration " + std::to_string(s.iteration) + ": variable " +
                             std::to_string(b) + " has a non-finite z");
      }
    }
  }
}

inline void update_u(const FactorGraph& graph, AdmmState& s, TaskRange r) {
  const auto edges = graph.edges();
  const auto alpha = graph.alpha();
  for (std::size_t e = r.begin; e < r.end; ++e) {
    const Edge& edge = edges[e];
    const double a = alpha[e];
    for (std::size_t k = 0; k < edge.dim; ++k) {
      double& u = s.u[edge.offset + k];
      u += a * (s.x[edge.offset + k] - s.z[edge.z_offset + k]);
      if (!std::isfinite(u)) {
        throw NumericalError("iteration " + std::to_string(s.iteration) + ": edge " +
                             std::to_string(e) + " has a non-finite u");
      }
    }
  }
}

inline void update_n(const FactorGraph& graph, AdmmState& s, TaskRange r) {
  const auto edges = graph.edges();
  for (std::size_t e = r.begin; e < r.end; ++e) {
    const Edge& edge = edges[e];
    for (std::size_t k = 0; k < edge.dim; ++k) {
      s.n[edge.offset + k] = s.z[edge.z_offset + k] - s.u[edge.offset + k];
    }
  }
}

}  // namespace kernels

// Serial single-phase entry points.

inline void update_x(const FactorGraph& g, AdmmState& s) { kernels::update_x(g, s, {0, g.factors().size()}); }
inline void update_m(const FactorGraph& g, AdmmState& s) { kernels::update_m(g, s, {0, g.edges().size()}); }
inline void update_z(const FactorGraph& g, AdmmState& s) { kernels::update_z(g, s, {0, g.variables().size()}); }
inline void update_u(const FactorGraph& g, AdmmState& s) { kernels::update_u(g, s, {0, g.edges().size()}); }
inline void update_n(const FactorGraph& g, AdmmState& s) { kernels::update_n(g, s, {0, g.edges().size()}); }

/// One full sweep x, m, z, u, n.
inline void iterate(const FactorGraph& g, AdmmState& s) {
  update_x(g, s);
  update_m(g, s);
  update_z(g, s);
  update_u(g, s);
  update_n(g, s);
  ++s.iteration;
}

/// primal = ‖x − z‖ / √P, dual = ‖ρ (z − z_prev)‖ / √P over all edges, with P
/// the edge payload. Summed serially in edge order.
inline Residuals residuals(const FactorGraph& graph, const AdmmState& s,
                           std::span<const double> z_prev) {
  const auto rho = graph.rho();
  double primal = 0.0;
  double dual = 0.0;
  const auto edges = graph.edges();
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& edge = edges[e];
    const double r2 = rho[e] * rho[e];
    for (std::size_t k = 0; k < edge.dim; ++k) {
      const double z = s.z[edge.z_offset + k];
      const double dp = s.x[edge.offset + k] - z;
      const double dd = z - z_prev[edge.z_offset + k];
      primal += dp * dp;
      dual += r2 * dd * dd;
    }
  }
  const double scale = std::sqrt(static_cast<double>(graph.total_edge_payload()));
  return {std::sqrt(primal) / scale, std::sqrt(dual) / scale};
}

/// Runs the iteration with a fixed worker pool; each phase is one
/// parallel_for, so phases are separated by a full barrier.
class AdmmEngine {
 public:
  explicit AdmmEngine(const FactorGraph& graph, std::size_t workers = 1)
      : graph_(graph), pool_(workers) {}

  std::size_t workers() const noexcept { return pool_.size(); }

  void update_x(AdmmState& s) {
    pool_.parallel_for(graph_.factors().size(), [&](TaskRange r) { kernels::update_x(graph_, s, r); });
  }
  void update_m(AdmmState& s) {
    pool_.parallel_for(graph_.edges().size(), [&](TaskRange r) { kernels::update_m(graph_, s, r); });
  }
  void update_z(AdmmState& s) {
    pool_.parallel_for(graph_.variables().size(), [&](TaskRange r) { kernels::update_z(graph_, s, r); });
  }
  void update_u(AdmmState& s) {
    pool_.parallel_for(graph_.edges().size(), [&](TaskRange r) { kernels::update_u(graph_, s, r); });
  }
  void update_n(AdmmState& s) {
    pool_.parallel_for(graph_.edges().size(), [&](TaskRange r) { kernels::update_n(graph_, s, r); });
  }

  /// One sweep; returns wall time of each phase.
  PhaseTimes iterate(AdmmState& s) {
    using Clock = std::chrono::steady_clock;
    PhaseTimes t{};
    auto t0 = Clock::now();
    update_x(s);
    auto t1 = Clock::now();
    update_m(s);
    auto t2 = Clock::now();
    update_z(s);
    auto t3 = Clock::now();
    update_u(s);
    auto t4 = Clock::now();
    update_n(s);
    auto t5 = Clock::now();
    const auto secs = [](auto a, auto b) { return std::chrono::duration<double>(b - a).count(); };
    t = {secs(t0, t1), secs(t1, t2), secs(t2, t3), secs(t3, t4), secs(t4, t5)};
    ++s.iteration;
    return t;
  }

  RunReport run(AdmmState& s, const RunConfig& config) {
    if (config.max_iterations == 0) throw UsageError("run: max_iterations must be >= 1");
    if (config.record_every == 0) throw UsageError("run: record_every must be >= 1");
    if (config.primal_tol < 0.0 || config.dual_tol < 0.0) {
      throw UsageError("run: tolerances must be nonnegative");
    }
    check_state(graph_, s);

    using Clock = std::chrono::steady_clock;
    const bool early_stop = config.primal_tol > 0.0 || config.dual_tol > 0.0;
    RunReport report;
    std::vector<double> z_prev;
    const auto start = Clock::now();
    for (std::size_t it = 1; it <= config.max_iterations; ++it) {
      const bool record = it % config.record_every == 0 || it == config.max_iterations;
      const bool measure = early_stop || record;
      if (measure) z_prev = s.z;

      const PhaseTimes t = iterate(s);
      for (std::size_t p = 0; p < kPhaseCount; ++p) report.phase_seconds[p] += t[p];
      report.iterations = it;

      if (!measure) continue;
      const Residuals r = residuals(graph_, s, z_prev);
      report.final_residuals = r;
      const bool done = early_stop && (config.primal_tol == 0.0 || r.primal < config.primal_tol) &&
                        (config.dual_tol == 0.0 || r.dual < config.dual_tol);
      if (record || done) report.history.push_back({s.iteration, t, r.primal, r.dual});
      if (done) {
        report.converged = true;
        break;
      }
    }
    report.total_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return report;
  }

 private:
  const FactorGraph& graph_;
  WorkerPool pool_;
};

inline RunResult run(const FactorGraph& graph, AdmmState state, const RunConfig& config) {
  if (config.workers == 0) throw UsageError("run: workers must be >= 1");
  AdmmEngine engine(graph, config.workers);
  RunReport report = engine.run(state, config);
  Solution solution = unpack(graph, state.z);
  return {std::move(solution), std::move(report), std::move(state)};
}

inline RunResult run(const FactorGraph& graph, const RunConfig& config) {
  return run(graph,
             config.random_init ? random_state(graph, config.seed) : zero_state(graph), config);
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

inline constexpr const char* kMetricsHeader = "iter,t_x,t_m,t_z,t_u,t_n,primal,dual";

inline void write_metrics_csv(std::ostream& os, const RunReport& report) {
  os << kMetricsHeader << '\n';
  for (const ReportRow& row : report.history) {
    os << row.iter;
    for (double t : row.phase_seconds) os << ',' << format_short(t);
    os << ',' << format_short(row.primal) << ',' << format_short(row.dual) << '\n';
  }
}

/// Solution document keyed by variable id. Contains no timings, so equal
/// runs produce byte-identical files.
inline void write_solution_json(std::ostream& os, const Solution& solution,
                                const RunReport& report) {
  os << "{\n \"iterations\": " << report.iterations << ",\n \"converged\": "
     << (report.converged ? "true" : "false") << ",\n \"variables\": {";
  for (std::size_t v = 0; v < solution.size(); ++v) {
    os << (v == 0 ? "\n" : ",\n") << "  \"" << v << "\": [";
    for (std::size_t k = 0; k < solution[v].size(); ++k) {
      os << (k == 0 ? "" : ", ") << format_exact(solution[v][k]);
    }
    os << ']';
  }
  os << "\n }\n}\n";
}

/// One line per variable: id followed by its z values.
inline void write_z_csv(std::ostream& os, const Solution& solution) {
  for (std::size_t v = 0; v < solution.size(); ++v) {
    os << v;
    for (double value : solution[v]) os << ',' << format_exact(value);
    os << '\n';
  }
}

}  // namespace fgadmm
