#include <gtest/gtest.h>

#include <random>

#include "fgadmm/fgadmm.hpp"
#include "prox_cases.hpp"
#include "test_ops.hpp"

using namespace fgadmm;

TEST(ProxEval, QuadraticAveragesTargetAndInput) {
  QuadraticOperator op(1.0, {1.0});
  const ProxOutput out = eval(op, ProxInput{{{3.0}}, {1.0}});
  EXPECT_DOUBLE_EQ(out.x[0][0], 2.0);
}

TEST(ProxEval, QuadraticAtMinimiserIsFixed) {
  QuadraticOperator op(2.5, {0.3, -1.0});
  const ProxOutput out = eval(op, ProxInput{{{0.3, -1.0}}, {4.0}});
  EXPECT_EQ(out.x[0], (std::vector<double>{0.3, -1.0}));
}

TEST(ProxEval, FeasibleInputUnchangedByProjections) {
  CollisionOperator collision;
  const ProxInput apart{{{0.0, 0.0}, {1.0}, {3.0, 0.0}, {1.0}}, {1.0, 1.0, 1.0, 1.0}};
  EXPECT_EQ(eval(collision, apart).x, apart.n);

  EqualityOperator equality(2);
  const ProxInput same{{{1.5, -2.0}, {1.5, -2.0}}, {0.3, 7.0}};
  EXPECT_EQ(eval(equality, same).x, same.n);
}

TEST(ProxEval, RejectsDimensionMismatch) {
  EqualityOperator op(2);
  EXPECT_THROW(eval(op, ProxInput{{{1.0}, {1.0, 2.0}}, {1.0, 1.0}}), UsageError);
  EXPECT_THROW(eval(op, ProxInput{{{1.0, 2.0}}, {1.0}}), UsageError);
  EXPECT_THROW(eval(op, ProxInput{{{1.0, 2.0}, {1.0, 2.0}}, {1.0, 0.0}}), UsageError);
}

TEST(ProxEval, NonFiniteOutputReported) {
  testing_ops::PoisonOperator op;
  EXPECT_THROW(eval(op, ProxInput{{{1.0}}, {1.0}}), NumericalError);
}

TEST(ProxEval, RepeatedEvaluationIsBitIdentical) {
  std::mt19937_64 rng(3);
  for (const cases::Kind& kind : cases::library_kinds()) {
    for (int t = 0; t < 10; ++t) {
      const cases::Case c = kind.make(rng);
      EXPECT_EQ(eval(*c.op, c.input).x, eval(*c.op, c.input).x) << kind.name;
    }
  }
}

TEST(ProxReference, UnconstrainedQuadraticMatchesClosedForm) {
  ReferenceProblem p;
  p.objective = [](std::span<const double> s) {
    return 0.5 * 3.0 * ((s[0] - 1.0) * (s[0] - 1.0) + (s[1] + 2.0) * (s[1] + 2.0));
  };
  const ProxInput in{{{0.5, 4.0}}, {2.0}};
  const ProxOutput ref = prox_reference(p, in);
  const ProxOutput closed = eval(QuadraticOperator(3.0, {1.0, -2.0}), in);
  EXPECT_NEAR(ref.x[0][0], closed.x[0][0], 1e-8);
  EXPECT_NEAR(ref.x[0][1], closed.x[0][1], 1e-8);
}

TEST(ProxReference, SemiLasso) {
  ReferenceProblem p;
  p.objective = [](std::span<const double> s) { return s[0]; };
  p.inequalities.push_back([](std::span<const double> s) { return -s[0]; });
  const ProxOutput ref = prox_reference(p, ProxInput{{{2.0}}, {1.0}});
  EXPECT_NEAR(ref.x[0][0], 1.0, 1e-8);
}

TEST(ProxReference, HalfPlaneConstrainedQuadraticSatisfiesKkt) {
  ReferenceProblem p;
  p.objective = [](std::span<const double> s) { return 0.5 * (s[0] * s[0] + s[1] * s[1]); };
  p.inequalities.push_back([](std::span<const double> s) { return 1.0 - s[0] - s[1]; });
  const ProxInput in{{{-1.0, 0.25}}, {1.5}};
  const ProxOutput ref = prox_reference(p, in);
  EXPECT_LT(kkt_residual(p, in, ref), 1e-6);
  // A point that is feasible but not optimal has a large residual.
  EXPECT_GT(kkt_residual(p, in, ProxOutput{{{1.0, 1.0}}}), 1e-2);
}

TEST(ProxReference, InfeasibleProblemReported) {
  ReferenceProblem p;
  p.equalities.push_back([](std::span<const double>) { return 1.0; });
  EXPECT_THROW(prox_reference(p, ProxInput{{{0.0}}, {1.0}}), NonConvergence);
}

TEST(ProxProperties, ConvexKindsAreNonexpansive) {
  std::mt19937_64 rng(17);
  for (const cases::Kind& kind : cases::library_kinds()) {
    for (int t = 0; t < 100; ++t) {
      const cases::Case a = kind.make(rng);
      if (!a.convex) break;
      // Second input for the same operator and weights.
      ProxInput b = a.input;
      for (auto& block : b.n) {
        for (double& v : block) v += cases::uniform(rng, -1.0, 1.0);
      }
      // Nonexpansive in the ρ-weighted norm, which is the metric of the prox.
      auto weighted = [&](const std::vector<std::vector<double>>& p,
                          const std::vector<std::vector<double>>& q) {
        double s = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
          for (std::size_t i = 0; i < p[k].size(); ++i) {
            s += a.input.rho[k] * (p[k][i] - q[k][i]) * (p[k][i] - q[k][i]);
          }
        }
        return std::sqrt(s);
      };
      const double out = weighted(eval(*a.op, a.input).x, eval(*a.op, b).x);
      const double in = weighted(a.input.n, b.n);
      EXPECT_LE(out, in * (1.0 + 1e-12) + 1e-14) << kind.name;
    }
  }
}
