// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fgadmm/error.hpp"
#include "fgadmm/prox.hpp"

namespace fgadmm {

using VariableId = std::size_t;
using FactorId = std::size_t;
using EdgeId = std::size_t;

struct VariableNode {
  VariableId id = 0;
  std::size_t dim = 0;
  std::size_t degree = 0;
  double weight_sum = 0.0;  // Σ ρ over incident edges, in edge-creation order
  std::size_t z_offset = 0;  // offset into the flat z array
};

struct FunctionNode {
  FactorId id = 0;
  ProxOperatorPtr op;
  std::vector<VariableId> vars;  // ∂a, in the order given to add_factor
  EdgeId first_edge = 0;
  std::size_t edge_count = 0;
  std::size_t payload_offset = 0;  // offset of first_edge in the flat edge arrays
  std::size_t payload_size = 0;
};

/// Topology of one edge. ρ and α live in separate flat arrays on the graph.
struct Edge {
  FactorId factor = 0;
  VariableId var = 0;
  std::size_t dim = 0;
  std::size_t offset = 0;    // into x, m, u, n
  std::size_t z_offset = 0;  // of the variable, into z
};

struct GraphCounts {
  std::size_t variables = 0;
  std::size_t factors = 0;
  std::size_t edges = 0;

  friend bool operator==(const GraphCounts&, const GraphCounts&) = default;
};

/// A scalar applied to every edge of a factor, or one value per edge.
using EdgeParam = std::variant<double, std::vector<double>>;

class FactorGraph;

/// Collects variables and factors, then freezes them into a FactorGraph.
class GraphBuilder {
 public:
  VariableId declare_variable(std::size_t dim) {
    check_open();
    if (dim == 0) throw UsageError("declare_variable: dim must be >= 1");
    dims_.push_back(dim);
    return dims_.size() - 1;
  }

  FactorId add_factor(ProxOperatorPtr op, std::vector<VariableId> vars, EdgeParam rho = 1.0,
                      EdgeParam alpha = 1.0);

  std::size_t variable_count() const noexcept { return dims_.size(); }
  std::size_t factor_count() const noexcept { return factors_.size(); }

  /// Materialises the flat layout. The builder cannot be used afterwards.
  FactorGraph freeze();

 private:
  struct PendingFactor {
    ProxOperatorPtr op;
    std::vector<VariableId> vars;
    std::vector<double> rho;
    std::vector<double> alpha;
  };

  void check_open() const {
    if (frozen_) throw UsageError("graph builder is frozen");
  }

  static std::vector<double> expand(const EdgeParam& p, std::size_t count, const char* name);

  std::vector<std::size_t> dims_;
  std::vector<PendingFactor> factors_;
  bool frozen_ = false;
};

/// Immutable bipartite graph with edge-ordered flat storage.
///
/// Edge e occupies [offset(e), offset(e) + dim(e)) of every edge array, with
/// offsets assigned in edge-creation order. z is laid out in variable
/// declaration order. Only ρ and α may change after freezing.
class FactorGraph {
 public:
  std::span<const VariableNode> variables() const noexcept { return variables_; }
  std::span<const FunctionNode> factors() const noexcept { return factors_; }
  std::span<const Edge> edges() const noexcept { return edges_; }

  const VariableNode& variable(VariableId v) const { return variables_.at(v); }
  const FunctionNode& factor(FactorId f) const { return factors_.at(f); }
  const Edge& edge(EdgeId e) const { return edges_.at(e); }

  std::span<const double> rho() const noexcept { return rho_; }
  std::span<const double> alpha() const noexcept { return alpha_; }
  double rho(EdgeId e) const { return rho_.at(e); }
  double alpha(EdgeId e) const { return alpha_.at(e); }

  /// Edges incident to v, in creation order.
  std::span<const EdgeId> incident_edges(VariableId v) const {
    const VariableNode& node = variables_.at(v);
    return std::span<const EdgeId>(incident_).subspan(incident_offsets_[v], node.degree);
  }

  std::size_t total_edge_payload() const noexcept { return edge_payload_; }
  std::size_t total_variable_payload() const noexcept { return variable_payload_; }

  GraphCounts counts() const noexcept {
    return {variables_.size(), factors_.size(), edges_.size()};
  }

  void set_edge_params(EdgeId e, double rho, double alpha) {
    if (e >= edges_.size()) throw UsageError("set_edge_params: unknown edge " + std::to_string(e));
    if (!(rho > 0.0) || !(alpha > 0.0)) {
      throw UsageError("set_edge_params: rho and alpha must be positive");
    }
    rho_[e] = rho;
    alpha_[e] = alpha;
    const VariableId v = edges_[e].var;
    variables_[v].weight_sum = recompute_weight_sum(v);
  }

  /// Σ ρ over the incident edges of v, summed in creation order.
  double recompute_weight_sum(VariableId v) const {
    double sum = 0.0;
    for (EdgeId e : incident_edges(v)) sum += rho_[e];
    return sum;
  }

 private:
  friend class GraphBuilder;
  FactorGraph() = default;

  std::vector<VariableNode> variables_;
  std::vector<FunctionNode> factors_;
  std::vector<Edge> edges_;
  std::vector<double> rho_;
  std::vector<double> alpha_;
  std::vector<std::size_t> incident_offsets_;
  std::vector<EdgeId> incident_;
  std::size_t edge_payload_ = 0;
  std::size_t variable_payload_ = 0;
};

inline std::vector<double> GraphBuilder::expand(const EdgeParam& p, std::size_t count,
                                                const char* name) {
  std::vector<double> values;
  if (const double* scalar = std::get_if<double>(&p)) {
    values.assign(count, *scalar);
  } else {
    values = std::get<std::vector<double>>(p);
    if (values.size() != count) {
      throw UsageError(std::string("add_factor: expected ") + std::to_string(count) + " " + name +
                       " values, got " + std::to_string(values.size()));
    }
  }
  for (double v : values) {
    if (!(v > 0.0)) throw UsageError(std::string("add_factor: ") + name + " must be positive");
  }
  return values;
}

inline FactorId GraphBuilder::add_factor(ProxOperatorPtr op, std::vector<VariableId> vars,
                                         EdgeParam rho, EdgeParam alpha) {
  check_open();
  if (!op) throw UsageError("add_factor: null operator");
  if (vars.empty()) throw UsageError("add_factor: factor needs at least one variable");
  const auto dims = op->slot_dims();
  if (vars.size() != dims.size()) {
    throw UsageError("add_factor: operator '" + std::string(op->kind()) + "' takes " +
                     std::to_string(dims.size()) + " variables, got " +
                     std::to_string(vars.size()));
  }
  for (std::size_t i = 0; i < vars.size(); ++i) {
    if (vars[i] >= dims_.size()) {
      throw UsageError("add_factor: variable " + std::to_string(vars[i]) + " is not declared");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (vars[j] == vars[i]) {
        throw UsageError("add_factor: variable " + std::to_string(vars[i]) +
                         " appears twice in one factor");
      }
    }
    if (dims_[vars[i]] != dims[i]) {
      throw UsageError("add_factor: operator '" + std::string(op->kind()) + "' slot " +
                       std::to_string(i) + " has dim " + std::to_string(dims[i]) +
                       " but variable " + std::to_string(vars[i]) + " has dim " +
                       std::to_string(dims_[vars[i]]));
    }
  }
  PendingFactor f{std::move(op), std::move(vars), {}, {}};
  f.rho = expand(rho, f.vars.size(), "rho");
  f.alpha = expand(alpha, f.vars.size(), "alpha");
  factors_.push_back(std::move(f));
  return factors_.size() - 1;
}

inline FactorGraph GraphBuilder::freeze() {
  check_open();
  if (factors_.empty()) throw ConstructionError("freeze: graph has no factors");

  FactorGraph g;
  g.variables_.resize(dims_.size());
  for (std::size_t v = 0; v < dims_.size(); ++v) {
    g.variables_[v].id = v;
    g.variables_[v].dim = dims_[v];
    g.variables_[v].z_offset = g.variable_payload_;
    g.variable_payload_ += dims_[v];
  }

  for (std::size_t a = 0; a < factors_.size(); ++a) {
    PendingFactor& pending = factors_[a];
    FunctionNode node;
    node.id = a;
    node.first_edge = g.edges_.size();
    node.edge_count = pending.vars.size();
    node.payload_offset = g.edge_payload_;
    for (std::size_t i = 0; i < pending.vars.size(); ++i) {
      VariableNode& var = g.variables_[pending.vars[i]];
      g.edges_.push_back(Edge{a, var.id, var.dim, g.edge_payload_, var.z_offset});
      g.rho_.push_back(pending.rho[i]);
      g.alpha_.push_back(pending.alpha[i]);
      g.edge_payload_ += var.dim;
      ++var.degree;
    }
    node.payload_size = g.edge_payload_ - node.payload_offset;
    node.op = std::move(pending.op);
    node.vars = std::move(pending.vars);
    g.factors_.push_back(std::move(node));
  }

  for (const VariableNode& var : g.variables_) {
    if (var.degree == 0) {
      throw ConstructionError("freeze: variable " + std::to_string(var.id) +
                              " is not attached to any factor");
    }
  }

  // Incidence lists in CSR form; edges are visited in creation order.
  g.incident_offsets_.assign(g.variables_.size() + 1, 0);
  for (const VariableNode& var : g.variables_) {
    g.incident_offsets_[var.id + 1] = g.incident_offsets_[var.id] + var.degree;
  }
  g.incident_.resize(g.edges_.size());
  std::vector<std::size_t> fill(g.incident_offsets_.begin(), g.incident_offsets_.end() - 1);
  for (EdgeId e = 0; e < g.edges_.size(); ++e) g.incident_[fill[g.edges_[e].var]++] = e;

  for (VariableNode& var : g.variables_) var.weight_sum = g.recompute_weight_sum(var.id);

  frozen_ = true;
  factors_.clear();
  return g;
}

}  // namespace fgadmm
