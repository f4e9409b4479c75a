// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgadmm/error.hpp"
#include "fgadmm/factor_graph.hpp"
#include "fgadmm/prox_library.hpp"

namespace fgadmm {

inline constexpr const char* kGraphFormat = "fgadmm-v1";

/// Builds an operator from the parameter block stored in a graph document.
using OperatorFactory = std::function<ProxOperatorPtr(const nlohmann::json& params)>;

/// Name → factory map for every operator kind that can appear in a document.
class OperatorRegistry {
 public:
  static OperatorRegistry& instance() {
    static OperatorRegistry registry = make_default();
    return registry;
  }

  void add(std::string kind, OperatorFactory factory) {
    factories_[std::move(kind)] = std::move(factory);
  }

  bool contains(const std::string& kind) const { return factories_.count(kind) != 0; }

  ProxOperatorPtr create(const std::string& kind, const nlohmann::json& params) const {
    auto it = factories_.find(kind);
    if (it == factories_.end()) throw FormatError("unknown operator kind '" + kind + "'");
    try {
      return it->second(params);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("bad parameters for operator '" + kind + "': " + e.what());
    }
  }

  std::vector<std::string> kinds() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : factories_) out.push_back(k);
    return out;
  }

 private:
  static Eigen::MatrixXd matrix_from_json(const nlohmann::json& rows) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = r == 0 ? 0 : static_cast<Eigen::Index>(rows.at(0).size());
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
      const auto& row = rows.at(static_cast<std::size_t>(i));
      if (static_cast<Eigen::Index>(row.size()) != c) throw FormatError("ragged matrix");
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
    }
    return m;
  }

  static OperatorRegistry make_default() {
    using nlohmann::json;
    OperatorRegistry r;
    r.add("collision", [](const json&) { return std::make_shared<CollisionOperator>(); });
    r.add("wall", [](const json& p) {
      return std::make_shared<WallOperator>(
          HalfPlane(p.at("normal").get<Vec2>(), p.at("point").get<Vec2>()));
    });
    r.add("radius", [](const json& p) {
      return std::make_shared<RadiusOperator>(p.value("kappa", 1.0), p.value("nonnegative", false));
    });
    r.add("mpc_cost", [](const json& p) {
      return std::make_shared<MpcCostOperator>(p.at("q").get<std::vector<double>>(),
                                               p.at("r").get<std::vector<double>>());
    });
    r.add("mpc_dyn", [](const json& p) {
      return std::make_shared<MpcDynOperator>(
          LinearSystem(matrix_from_json(p.at("a")), matrix_from_json(p.at("b"))));
    });
    r.add("mpc_init", [](const json& p) {
      return std::make_shared<MpcInitOperator>(p.at("q0").get<std::vector<double>>(),
                                               p.at("k").get<std::size_t>());
    });
    r.add("svm_slack", [](const json& p) {
      return std::make_shared<SvmSlackOperator>(p.at("lambda").get<double>());
    });
    r.add("svm_norm", [](const json& p) {
      return std::make_shared<SvmNormOperator>(p.at("dim").get<std::size_t>(),
                                               p.at("scale").get<double>());
    });
    r.add("svm_margin", [](const json& p) {
      return std::make_shared<SvmMarginOperator>(
          LabeledPoint{p.at("x").get<std::vector<double>>(), p.at("y").get<int>()});
    });
    r.add("equality", [](const json& p) {
      return std::make_shared<EqualityOperator>(p.at("dim").get<std::size_t>());
    });
    r.add("quadratic", [](const json& p) {
      return std::make_shared<QuadraticOperator>(p.at("weight").get<double>(),
                                                 p.at("target").get<std::vector<double>>());
    });
    return r;
  }

  std::map<std::string, OperatorFactory> factories_;
};

// ---------------------------------------------------------------------------
// Graph document
// ---------------------------------------------------------------------------

inline nlohmann::json to_document(const FactorGraph& graph) {
  using nlohmann::json;
  json variables = json::array();
  for (const VariableNode& v : graph.variables()) {
    variables.push_back({{"id", v.id}, {"dim", v.dim}});
  }
  json factors = json::array();
  for (const FunctionNode& f : graph.factors()) {
    std::vector<double> rho(graph.rho().begin() + static_cast<std::ptrdiff_t>(f.first_edge),
                            graph.rho().begin() +
                                static_cast<std::ptrdiff_t>(f.first_edge + f.edge_count));
    std::vector<double> alpha(graph.alpha().begin() + static_cast<std::ptrdiff_t>(f.first_edge),
                              graph.alpha().begin() +
                                  static_cast<std::ptrdiff_t>(f.first_edge + f.edge_count));
    factors.push_back({{"operator", std::string(f.op->kind())},
                       {"params", f.op->params()},
                       {"vars", f.vars},
                       {"rho", rho},
                       {"alpha", alpha}});
  }
  return {{"format", kGraphFormat}, {"variables", variables}, {"factors", factors}};
}

inline FactorGraph from_document(const nlohmann::json& doc,
                                 const OperatorRegistry& registry = OperatorRegistry::instance()) {
  if (!doc.is_object()) throw FormatError("graph document must be an object");
  if (doc.value("format", std::string{}) != kGraphFormat) {
    throw FormatError(std::string("graph document: missing or unsupported format tag (expected '") +
                      kGraphFormat + "')");
  }
  if (!doc.contains("variables") || !doc["variables"].is_array()) {
    throw FormatError("graph document: 'variables' must be a list");
  }
  if (!doc.contains("factors") || !doc["factors"].is_array()) {
    throw FormatError("graph document: 'factors' must be a list");
  }

  GraphBuilder builder;
  const auto& variables = doc["variables"];
  for (std::size_t i = 0; i < variables.size(); ++i) {
    const auto& v = variables[i];
    try {
      if (v.at("id").get<std::size_t>() != i) {
        throw FormatError("graph document: variables[" + std::to_string(i) +
                          "] has out-of-order id");
      }
      builder.declare_variable(v.at("dim").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("graph document: variables[" + std::to_string(i) + "]: " + e.what());
    } catch (const UsageError& e) {
      throw FormatError("graph document: variables[" + std::to_string(i) + "]: " + e.what());
    }
  }

  const auto& factors = doc["factors"];
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const auto& f = factors[i];
    const std::string where = "graph document: factors[" + std::to_string(i) + "]";
    try {
      const std::string kind = f.at("operator").get<std::string>();
      if (!registry.contains(kind)) throw FormatError(where + ": unknown operator kind '" + kind + "'");
      ProxOperatorPtr op = registry.create(kind, f.value("params", nlohmann::json::object()));
      builder.add_factor(std::move(op), f.at("vars").get<std::vector<VariableId>>(),
                         f.at("rho").get<std::vector<double>>(),
                         f.at("alpha").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(where + ": " + e.what());
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      throw FormatError(where + ": " + e.what());
    }
  }
  try {
    return builder.freeze();
  } catch (const ConstructionError& e) {
    throw FormatError(std::string("graph document: ") + e.what());
  }
}

inline std::string serialize(const FactorGraph& graph) { return to_document(graph).dump(1); }

inline FactorGraph deserialize(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("graph document is not valid JSON: ") + e.what());
  }
  return from_document(doc);
}

// ---------------------------------------------------------------------------
// Number formatting shared by solution and metrics writers
// ---------------------------------------------------------------------------

/// Decimal with 17 significant digits; round-trips every double exactly.
inline std::string format_exact(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

/// Shortest decimal that round-trips.
inline std::string format_short(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace fgadmm
