// SPDX-License-Identifier: Apache-2.0
//
// fgadmm command-line front end: generate and solve the packing, MPC and SVM
// instances, solve a serialized graph, or sweep benchmark cells.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fgadmm/fgadmm.hpp"

namespace {

using namespace fgadmm;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::size_t default_workers() {
  if (const char* env = std::getenv("FGADMM_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid FGADMM_WORKERS='" << env << "'\n";
  }
  return 1;
}

struct RunFlags {
  std::size_t iters = 1000;
  double tol = 0.0;
  std::size_t workers = 1;
  std::uint64_t seed = 1;
  std::optional<double> rho;
  std::optional<double> alpha;
  std::string out;
  std::string metrics;
  std::string graph_out;

  RunConfig config() const {
    RunConfig c;
    c.max_iterations = iters;
    c.primal_tol = tol;
    c.dual_tol = tol;
    c.workers = workers;
    c.seed = seed;
    c.record_every = std::max<std::size_t>(1, iters / 100);
    return c;
  }
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--iters", f.iters, "Iteration budget")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", f.tol, "Stop once primal and dual residuals fall below this (0 = off)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--workers", f.workers, "Worker threads (default: $FGADMM_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Seed for data generation and initialisation");
  cmd->add_option("--rho", f.rho, "Penalty on every edge")->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", f.alpha, "Dual step on every edge")->check(CLI::PositiveNumber);
  cmd->add_option("--out", f.out, "Solution file (JSON)");
  cmd->add_option("--metrics", f.metrics, "Per-iteration metrics CSV");
  cmd->add_option("--graph-out", f.graph_out, "Write the factor graph document");
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << content;
  if (!os) throw Error("failed writing '" + path + "'");
}

/// Applies --rho/--alpha overrides to every edge.
void override_params(FactorGraph& graph, const RunFlags& f) {
  if (!f.rho && !f.alpha) return;
  for (EdgeId e = 0; e < graph.edges().size(); ++e) {
    graph.set_edge_params(e, f.rho.value_or(graph.rho(e)), f.alpha.value_or(graph.alpha(e)));
  }
}

RunResult solve_and_report(const FactorGraph& graph, AdmmState initial, const RunFlags& f) {
  if (!f.graph_out.empty()) write_file(f.graph_out, serialize(graph));
  RunResult result = run(graph, std::move(initial), f.config());
  const RunReport& rep = result.report;
  std::cout << "iterations " << rep.iterations << '\n'
            << "converged " << (rep.converged ? "yes" : "no") << '\n'
            << "primal_residual " << format_short(rep.final_residuals.primal) << '\n'
            << "dual_residual " << format_short(rep.final_residuals.dual) << '\n'
            << "seconds_per_iteration " << format_short(rep.seconds_per_iteration()) << '\n';
  if (!f.out.empty()) {
    std::ostringstream os;
    write_solution_json(os, result.solution, rep);
    write_file(f.out, os.str());
  }
  if (!f.metrics.empty()) {
    std::ostringstream os;
    write_metrics_csv(os, rep);
    write_file(f.metrics, os.str());
  }
  return result;
}

std::vector<std::size_t> parse_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(item, &pos);
      if (pos != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError(std::string("invalid ") + what + " list entry '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError(std::string("empty ") + what + " list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factor-graph ADMM solver"};
  app.require_subcommand(1);

  RunFlags flags;
  flags.workers = default_workers();

  // pack
  auto* pack = app.add_subcommand("pack", "Pack N disks into the unit triangle");
  add_run_flags(pack, flags);
  std::size_t circles = 10;
  double kappa = 1.0;
  double rho_radius = 2.0;
  pack->add_option("--n", circles, "Number of circles")->check(CLI::PositiveNumber);
  pack->add_option("--kappa", kappa, "Area reward weight")->check(CLI::NonNegativeNumber);
  pack->add_option("--rho-radius", rho_radius, "Penalty on radius-factor edges (> kappa)")
      ->check(CLI::PositiveNumber);

  // mpc
  auto* mpc = app.add_subcommand("mpc", "Cart-pole MPC over a horizon of K steps");
  add_run_flags(mpc, flags);
  std::size_t horizon = 10;
  mpc->add_option("--k", horizon, "Horizon K")->check(CLI::PositiveNumber);

  // svm
  auto* svm = app.add_subcommand("svm", "Soft-margin linear SVM on two Gaussian classes");
  add_run_flags(svm, flags);
  std::size_t points = 100;
  std::size_t dim = 2;
  double separation = 4.0;
  double lambda = 1.0;
  std::string data_out;
  svm->add_option("--n", points, "Number of points")->check(CLI::Range(2, 100000000));
  svm->add_option("--dim", dim, "Feature dimension")->check(CLI::PositiveNumber);
  svm->add_option("--sep", separation, "Distance between class means")->check(CLI::NonNegativeNumber);
  svm->add_option("--lambda", lambda, "Hinge weight")->check(CLI::NonNegativeNumber);
  svm->add_option("--data-out", data_out, "Write the generated dataset as CSV");

  // run
  auto* runcmd = app.add_subcommand("run", "Solve a serialized factor graph");
  add_run_flags(runcmd, flags);
  std::string graph_in;
  bool random_init = false;
  runcmd->add_option("--graph-in", graph_in, "Graph document")->required();
  runcmd->add_flag("--random-init", random_init, "Random z/u initialisation from --seed");

  // bench
  auto* bench = app.add_subcommand("bench", "Time fixed-iteration runs over sizes and worker counts");
  std::string problem = "pack";
  std::string sizes = "50,100,200";
  std::string worker_list = "1";
  std::size_t bench_iters = 100;
  std::string bench_out;
  std::uint64_t bench_seed = 1;
  bench->add_option("--problem", problem, "pack, mpc or svm");
  bench->add_option("--sizes", sizes, "Comma-separated sizes (N or K)");
  bench->add_option("--workers", worker_list, "Comma-separated worker counts");
  bench->add_option("--iters", bench_iters, "Iterations per cell")->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_out, "Benchmark CSV (default: stdout)");
  bench->add_option("--seed", bench_seed, "Instance seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (pack->parsed()) {
      PackingSpec spec;
      spec.circles = circles;
      spec.walls = unit_triangle();
      spec.kappa = kappa;
      spec.rho_radius = rho_radius;
      if (flags.rho) spec.rho = *flags.rho;
      if (flags.alpha) spec.alpha = *flags.alpha;
      const FactorGraph graph = build_packing(spec);
      const RunResult r = solve_and_report(
          graph, state_from_z(graph, packing_initial_z(spec, flags.seed)), flags);
      const PackingQuality q = evaluate_packing(spec, packing_circles(spec, r.solution));
      std::cout << "objective " << format_short(-0.5 * kappa * q.covered_area / M_PI) << '\n'
                << "coverage " << format_short(q.covered_area / (std::sqrt(3.0) / 4.0)) << '\n'
                << "max_overlap " << format_short(q.max_overlap) << '\n'
                << "max_wall_violation " << format_short(q.max_wall_violation) << '\n'
                << "min_radius " << format_short(q.min_radius) << '\n';
    } else if (mpc->parsed()) {
      MpcSpec spec = cartpole_mpc(horizon);
      if (flags.rho) spec.rho = *flags.rho;
      if (flags.alpha) spec.alpha = *flags.alpha;
      const FactorGraph graph = build_mpc(spec);
      const RunResult r = solve_and_report(graph, zero_state(graph), flags);
      std::cout << "objective " << format_short(mpc_cost(spec, r.solution)) << '\n'
                << "constraint_violation "
                << format_short(mpc_constraint_violation(spec, r.solution)) << '\n'
                << "u0 " << format_short(r.solution.at(0).at(spec.state_dim())) << '\n';
    } else if (svm->parsed()) {
      SvmSpec spec;
      spec.points = gen_gaussian_data(points, dim, separation, flags.seed);
      spec.lambda = lambda;
      if (flags.rho) spec.rho = *flags.rho;
      if (flags.alpha) spec.alpha = *flags.alpha;
      if (!data_out.empty()) {
        std::ostringstream os;
        write_dataset_csv(os, spec.points);
        write_file(data_out, os.str());
      }
      const FactorGraph graph = build_svm(spec);
      const RunResult r = solve_and_report(graph, zero_state(graph), flags);
      const SvmModel model = svm_model(spec, r.solution);
      std::cout << "objective " << format_short(svm_objective(spec.points, lambda, model)) << '\n'
                << "accuracy " << format_short(svm_accuracy(spec.points, model)) << '\n';
    } else if (runcmd->parsed()) {
      std::ifstream is(graph_in, std::ios::binary);
      if (!is) throw Error("cannot open '" + graph_in + "'");
      std::stringstream buf;
      buf << is.rdbuf();
      FactorGraph graph = deserialize(buf.str());
      override_params(graph, flags);
      AdmmState init = random_init ? random_state(graph, flags.seed) : zero_state(graph);
      solve_and_report(graph, std::move(init), flags);
    } else if (bench->parsed()) {
      const auto rows = run_bench(parse_bench_problem(problem), parse_list(sizes, "size"),
                                  parse_list(worker_list, "worker"), bench_iters, bench_seed);
      std::ostringstream os;
      write_bench_csv(os, rows);
      if (bench_out.empty()) {
        std::cout << os.str();
      } else {
        write_file(bench_out, os.str());
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
