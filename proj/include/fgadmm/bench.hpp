// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "fgadmm/engine.hpp"
#include "fgadmm/problems.hpp"

namespace fgadmm {

enum class BenchProblem { kPacking, kMpc, kSvm };

inline std::string to_string(BenchProblem p) {
  switch (p) {
    case BenchProblem::kPacking: return "pack";
    case BenchProblem::kMpc: return "mpc";
    case BenchProblem::kSvm: return "svm";
  }
  return "unknown";
}

inline BenchProblem parse_bench_problem(const std::string& name) {
  if (name == "pack" || name == "packing") return BenchProblem::kPacking;
  if (name == "mpc") return BenchProblem::kMpc;
  if (name == "svm") return BenchProblem::kSvm;
  throw UsageError("unknown benchmark problem '" + name + "' (expected pack, mpc or svm)");
}

/// A generated instance together with the state it starts from.
struct ProblemInstance {
  FactorGraph graph;
  AdmmState initial;
};

/// Packing starts from seeded interior centers (the all-zero state is a
/// trivial fixed point); MPC and SVM start from zero.
inline ProblemInstance make_instance(BenchProblem problem, std::size_t size, std::uint64_t seed) {
  switch (problem) {
    case BenchProblem::kPacking: {
      PackingSpec spec;
      spec.circles = size;
      spec.walls = unit_triangle();
      FactorGraph g = build_packing(spec);
      AdmmState s = state_from_z(g, packing_initial_z(spec, seed));
      return {std::move(g), std::move(s)};
    }
    case BenchProblem::kMpc: {
      FactorGraph g = build_mpc(cartpole_mpc(size));
      AdmmState s = zero_state(g);
      return {std::move(g), std::move(s)};
    }
    case BenchProblem::kSvm: {
      SvmSpec spec;
      spec.points = gen_gaussian_data(size, 2, 4.0, seed);
      FactorGraph g = build_svm(spec);
      AdmmState s = zero_state(g);
      return {std::move(g), std::move(s)};
    }
  }
  throw UsageError("unknown benchmark problem");
}

struct BenchResult {
  std::string problem;
  std::size_t size = 0;
  std::size_t workers = 0;
  std::size_t iterations = 0;
  std::size_t edges = 0;
  PhaseTimes mean_phase_seconds{};
  double total_seconds = 0.0;
  double speedup = 0.0;  // relative to the workers = 1 cell of the same size, 0 if absent

  double seconds_per_iteration() const {
    return iterations == 0 ? 0.0 : total_seconds / static_cast<double>(iterations);
  }
};

/// Times one (size, workers) cell for a fixed number of iterations.
inline BenchResult bench_cell(BenchProblem problem, std::size_t size, std::size_t workers,
                              std::size_t iterations, std::uint64_t seed = 1) {
  ProblemInstance inst = make_instance(problem, size, seed);
  RunConfig config;
  config.max_iterations = iterations;
  config.workers = workers;
  config.record_every = iterations;
  AdmmEngine engine(inst.graph, workers);
  const RunReport report = engine.run(inst.initial, config);

  BenchResult r;
  r.problem = to_string(problem);
  r.size = size;
  r.workers = workers;
  r.iterations = report.iterations;
  r.edges = inst.graph.counts().edges;
  for (std::size_t p = 0; p < kPhaseCount; ++p) {
    r.mean_phase_seconds[p] = report.mean_phase_seconds(static_cast<Phase>(p));
  }
  r.total_seconds = report.total_seconds;
  return r;
}

/// Every (size, workers) combination, sizes outermost. Speedups are filled
/// in against the workers = 1 row of each size when present.
inline std::vector<BenchResult> run_bench(BenchProblem problem, const std::vector<std::size_t>& sizes,
                                          const std::vector<std::size_t>& workers,
                                          std::size_t iterations, std::uint64_t seed = 1) {
  if (iterations == 0) throw UsageError("bench: iterations must be >= 1");
  std::vector<BenchResult> rows;
  for (std::size_t size : sizes) {
    const std::size_t first = rows.size();
    for (std::size_t w : workers) rows.push_back(bench_cell(problem, size, w, iterations, seed));
    double serial = 0.0;
    for (std::size_t i = first; i < rows.size(); ++i) {
      if (rows[i].workers == 1) serial = rows[i].seconds_per_iteration();
    }
    if (serial > 0.0) {
      for (std::size_t i = first; i < rows.size(); ++i) {
        rows[i].speedup = serial / rows[i].seconds_per_iteration();
      }
    }
  }
  return rows;
}

inline constexpr const char* kBenchHeader =
    "problem,size,workers,iters,edges,t_x,t_m,t_z,t_u,t_n,total,time_per_iter,speedup";

inline void write_bench_csv(std::ostream& os, const std::vector<BenchResult>& rows) {
  os << kBenchHeader << '\n';
  for (const BenchResult& r : rows) {
    os << r.problem << ',' << r.size << ',' << r.workers << ',' << r.iterations << ',' << r.edges;
    for (double t : r.mean_phase_seconds) os << ',' << format_short(t);
    os << ',' << format_short(r.total_seconds) << ',' << format_short(r.seconds_per_iteration())
       << ',' << format_short(r.speedup) << '\n';
  }
}

}  // namespace fgadmm
