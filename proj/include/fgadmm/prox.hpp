// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgadmm/error.hpp"

namespace fgadmm {

/// A proximal operator attached to one function node.
///
/// Given one incoming block n_b and one penalty ρ_b per neighbour slot, eval
/// writes the minimiser of
///
///     f(s) + Σ_b ρ_b/2 ‖s_b − n_b‖²
///
/// into x. Blocks are concatenated in neighbour order, which is exactly the
/// layout of a factor's contiguous edge range in the flat edge arrays.
/// Implementations are immutable and eval must be a pure function of its
/// arguments so it can run concurrently from any worker.
class ProxOperator {
 public:
  virtual ~ProxOperator() = default;

  /// Registry name, also used as the `operator` key of the graph document.
  virtual std::string_view kind() const noexcept = 0;

  virtual void eval(std::span<const double> n, std::span<const double> rho,
                    std::span<double> x) const = 0;

  /// Parameter block as stored in the graph document.
  virtual nlohmann::json params() const = 0;

  std::span<const std::size_t> slot_dims() const noexcept { return slot_dims_; }
  std::size_t arity() const noexcept { return slot_dims_.size(); }
  std::size_t total_dim() const noexcept { return total_dim_; }

 protected:
  explicit ProxOperator(std::vector<std::size_t> slot_dims)
      : slot_dims_(std::move(slot_dims)),
        total_dim_(std::accumulate(slot_dims_.begin(), slot_dims_.end(), std::size_t{0})) {}

 private:
  std::vector<std::size_t> slot_dims_;
  std::size_t total_dim_;
};

using ProxOperatorPtr = std::shared_ptr<const ProxOperator>;

struct ProxInput {
  std::vector<std::vector<double>> n;  // one block per neighbour, in ∂a order
  std::vector<double> rho;             // one penalty per neighbour
};

struct ProxOutput {
  std::vector<std::vector<double>> x;
};

namespace detail {

inline std::vector<double> flatten(const std::vector<std::vector<double>>& blocks) {
  std::vector<double> flat;
  for (const auto& b : blocks) flat.insert(flat.end(), b.begin(), b.end());
  return flat;
}

inline std::vector<std::vector<double>> unflatten(std::span<const double> flat,
                                                  std::span<const std::size_t> dims) {
  std::vector<std::vector<double>> blocks;
  blocks.reserve(dims.size());
  std::size_t offset = 0;
  for (std::size_t d : dims) {
    blocks.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(offset),
                        flat.begin() + static_cast<std::ptrdiff_t>(offset + d));
    offset += d;
  }
  return blocks;
}

}  // namespace detail

/// Checks `input` against the operator signature and evaluates it.
inline ProxOutput eval(const ProxOperator& op, const ProxInput& input) {
  const auto dims = op.slot_dims();
  if (input.n.size() != dims.size() || input.rho.size() != dims.size()) {
    throw UsageError("prox '" + std::string(op.kind()) + "': expected " +
                     std::to_string(dims.size()) + " neighbour blocks, got " +
                     std::to_string(input.n.size()));
  }
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (input.n[i].size() != dims[i]) {
      throw UsageError("prox '" + std::string(op.kind()) + "': slot " + std::to_string(i) +
                       " has dim " + std::to_string(input.n[i].size()) + ", expected " +
                       std::to_string(dims[i]));
    }
    if (!(input.rho[i] > 0.0)) {
      throw UsageError("prox '" + std::string(op.kind()) + "': rho must be positive");
    }
  }
  const std::vector<double> n = detail::flatten(input.n);
  std::vector<double> x(n.size());
  op.eval(n, input.rho, x);
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw NumericalError("prox '" + std::string(op.kind()) + "' produced a non-finite value");
    }
  }
  return ProxOutput{detail::unflatten(x, dims)};
}

}  // namespace fgadmm
