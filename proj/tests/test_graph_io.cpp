#include <gtest/gtest.h>

#include "fgadmm/fgadmm.hpp"

using namespace fgadmm;

namespace {

FactorGraph packing_graph(std::size_t n) {
  PackingSpec spec;
  spec.circles = n;
  spec.walls = unit_triangle();
  return build_packing(spec);
}

void expect_same_graph(const FactorGraph& a, const FactorGraph& b) {
  ASSERT_EQ(a.counts(), b.counts());
  for (std::size_t v = 0; v < a.variables().size(); ++v) {
    EXPECT_EQ(a.variables()[v].dim, b.variables()[v].dim);
    EXPECT_EQ(a.variables()[v].weight_sum, b.variables()[v].weight_sum);
  }
  for (std::size_t f = 0; f < a.factors().size(); ++f) {
    EXPECT_EQ(a.factors()[f].op->kind(), b.factors()[f].op->kind());
    EXPECT_EQ(a.factors()[f].op->params(), b.factors()[f].op->params());
    EXPECT_EQ(a.factors()[f].vars, b.factors()[f].vars);
  }
  for (EdgeId e = 0; e < a.edges().size(); ++e) {
    EXPECT_EQ(a.rho(e), b.rho(e));
    EXPECT_EQ(a.alpha(e), b.alpha(e));
  }
}

}  // namespace

TEST(GraphDocument, PackingRoundTripIsIdentity) {
  const FactorGraph g = packing_graph(3);
  const std::string text = serialize(g);
  const FactorGraph back = deserialize(text);
  expect_same_graph(g, back);
  EXPECT_EQ(serialize(back), text);
}

TEST(GraphDocument, MpcRoundTripKeepsCounts) {
  const FactorGraph g = build_mpc(cartpole_mpc(4));
  EXPECT_EQ(deserialize(serialize(g)).counts(), g.counts());
  expect_same_graph(g, deserialize(serialize(g)));
}

TEST(GraphDocument, SvmRoundTripKeepsParametersBitExact) {
  SvmSpec spec;
  spec.points = gen_gaussian_data(7, 3, 1.5, 4);
  spec.lambda = 0.1;
  FactorGraph g = build_svm(spec);
  g.set_edge_params(3, 0.1 + 0.2, 1.0 / 3.0);
  expect_same_graph(g, deserialize(serialize(g)));
}

TEST(GraphDocument, RegistryKnowsEveryLibraryKind) {
  for (const char* kind : {"collision", "wall", "radius", "mpc_cost", "mpc_dyn", "mpc_init",
                           "svm_slack", "svm_norm", "svm_margin", "equality", "quadratic"}) {
    EXPECT_TRUE(OperatorRegistry::instance().contains(kind)) << kind;
  }
}

TEST(GraphDocument, UnknownOperatorNamed) {
  auto doc = to_document(packing_graph(2));
  doc["factors"][4]["operator"] = "teleport";
  try {
    (void)from_document(doc);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("teleport"), std::string::npos) << msg;
    EXPECT_NE(msg.find("factors[4]"), std::string::npos) << msg;
  }
}

TEST(GraphDocument, MalformedDocumentsRejected) {
  EXPECT_THROW(deserialize("{not json"), FormatError);
  EXPECT_THROW(deserialize("[]"), FormatError);
  EXPECT_THROW(deserialize(R"({"format":"other","variables":[],"factors":[]})"), FormatError);

  auto doc = to_document(packing_graph(2));
  doc["factors"][0]["vars"] = {0, 99, 2, 3};
  EXPECT_THROW(from_document(doc), FormatError);

  doc = to_document(packing_graph(2));
  doc["factors"][0]["rho"] = {1.0, -1.0, 1.0, 1.0};
  EXPECT_THROW(from_document(doc), FormatError);

  doc = to_document(packing_graph(2));
  doc["factors"][0].erase("vars");
  EXPECT_THROW(from_document(doc), FormatError);

  doc = to_document(packing_graph(2));
  doc["variables"][1]["dim"] = 0;
  EXPECT_THROW(from_document(doc), FormatError);
}

TEST(NumberFormat, ExactFormattingRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(format_exact(v)), v);
    EXPECT_EQ(std::stod(format_short(v)), v);
  }
}
