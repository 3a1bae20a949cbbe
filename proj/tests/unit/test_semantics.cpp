#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "fuzzyc/lang/constraint_file.hpp"
#include "fuzzyc/lang/parser.hpp"
#include "fuzzyc/lang/validate.hpp"
#include "fuzzyc/random.hpp"
#include "fuzzyc/semantics/compile.hpp"
#include "fuzzyc/semantics/tnorm.hpp"
#include "oracle/closed_forms.hpp"

using namespace fuzzyc;
using namespace fuzzyc::semantics;

namespace {

constexpr ConnectiveOp kBinaryOps[] = {ConnectiveOp::And, ConnectiveOp::Or, ConnectiveOp::Implies, ConnectiveOp::Iff};

double apply(ConnectiveOp op, double x, double y, TNorm t) {
  const double args[2] = {x, y};
  return eval_connective(op, std::span<const double>(args, op == ConnectiveOp::Not ? 1 : 2), t);
}

ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

}  // namespace

TEST(Connectives, GridMatchesClosedForms) {
  for (auto t : kAllTNorms) {
    for (int i = 0; i <= 10; ++i) {
      for (int j = 0; j <= 10; ++j) {
        const double x = i / 10.0, y = j / 10.0;
        EXPECT_NEAR(apply(ConnectiveOp::Not, x, y, t), 1.0 - x, 1e-12);
        for (auto op : kBinaryOps) {
          EXPECT_NEAR(apply(op, x, y, t), oracle::closed_form(op, x, y, t), 1e-12)
              << lang::to_string(op) << " " << to_string(t) << " x=" << x << " y=" << y;
        }
      }
    }
  }
}

TEST(Connectives, BooleanBoundary) {
  // every (x, y) in {0,1}^2 for every connective; negation ignores y
  int cases = 0;
  for (auto t : kAllTNorms) {
    for (int x = 0; x <= 1; ++x) {
      for (int y = 0; y <= 1; ++y) {
        for (auto op : {ConnectiveOp::Not, ConnectiveOp::And, ConnectiveOp::Or, ConnectiveOp::Implies, ConnectiveOp::Iff}) {
          EXPECT_EQ(apply(op, x, y, t), oracle::boolean(op, x, y) ? 1.0 : 0.0) << lang::to_string(op) << " " << to_string(t);
          ++cases;
        }
      }
    }
  }
  EXPECT_EQ(cases, 60);
}

TEST(Connectives, TNormAxioms) {
  Rng rng(3);
  for (auto t : kAllTNorms) {
    for (int k = 0; k < 500; ++k) {
      const double x = uniform(rng), y = uniform(rng), z = uniform(rng);
      const double d = uniform(rng, 0.0, 1.0 - y);
      EXPECT_NEAR(apply(ConnectiveOp::And, x, y, t), apply(ConnectiveOp::And, y, x, t), 1e-15);
      EXPECT_NEAR(apply(ConnectiveOp::And, apply(ConnectiveOp::And, x, y, t), z, t),
                  apply(ConnectiveOp::And, x, apply(ConnectiveOp::And, y, z, t), t), 1e-12);
      EXPECT_LE(apply(ConnectiveOp::And, x, y, t), apply(ConnectiveOp::And, x, y + d, t) + 1e-15);
      EXPECT_NEAR(apply(ConnectiveOp::And, x, 1.0, t), x, 1e-15);
      EXPECT_NEAR(apply(ConnectiveOp::Or, x, 0.0, t), x, 1e-15);
    }
  }
}

TEST(Connectives, DeMorganDuality) {
  Rng rng(4);
  for (auto t : kAllTNorms) {
    for (int k = 0; k < 500; ++k) {
      const double x = uniform(rng), y = uniform(rng);
      EXPECT_NEAR(apply(ConnectiveOp::Or, x, y, t), 1.0 - apply(ConnectiveOp::And, 1.0 - x, 1.0 - y, t), 1e-12);
    }
  }
}

TEST(Connectives, ResiduationOnGrid) {
  // z <= (x => y)  iff  z & x <= y
  for (auto t : kAllTNorms) {
    for (int i = 0; i <= 10; ++i) {
      for (int j = 0; j <= 10; ++j) {
        for (int k = 0; k <= 10; ++k) {
          const double x = i / 10.0, y = j / 10.0, z = k / 10.0;
          const bool lhs = z <= apply(ConnectiveOp::Implies, x, y, t) + 1e-12;
          const bool rhs = apply(ConnectiveOp::And, z, x, t) <= y + 1e-12;
          EXPECT_EQ(lhs, rhs) << to_string(t) << " " << x << " " << y << " " << z;
        }
      }
    }
  }
}

TEST(Connectives, ImplicationIsOneExactlyWhenOrdered) {
  Rng rng(5);
  for (auto t : kAllTNorms) {
    for (int k = 0; k < 500; ++k) {
      const double x = uniform(rng), y = uniform(rng);
      EXPECT_EQ(apply(ConnectiveOp::Implies, x, y, t) == 1.0, x <= y) << to_string(t) << " " << x << " " << y;
    }
  }
}

TEST(Connectives, RejectsOutOfRangeAndArity) {
  for (auto t : kAllTNorms) {
    EXPECT_EQ(error_of([&] { apply(ConnectiveOp::And, 1.2, 0.3, t); }), ErrorCode::DomainError);
    EXPECT_EQ(error_of([&] { apply(ConnectiveOp::Or, 0.2, -0.1, t); }), ErrorCode::DomainError);
    EXPECT_EQ(error_of([&] { apply(ConnectiveOp::Not, NAN, 0.0, t); }), ErrorCode::DomainError);
    const double three[3] = {0.1, 0.2, 0.3};
    EXPECT_EQ(error_of([&] { eval_connective(ConnectiveOp::And, three, t); }), ErrorCode::ArityMismatch);
  }
  // round-off just outside [0,1] is clamped
  EXPECT_EQ(check_truth(1.0 + 1e-12), 1.0);
  EXPECT_EQ(check_truth(-1e-12), 0.0);
}

TEST(Quantifiers, FoldsAndEmptyDomains) {
  const std::vector<double> v = {0.9, 0.5, 0.8};
  EXPECT_NEAR(eval_quantifier(QuantifierKind::Forall, v, TNorm::Goedel), 0.5, 1e-15);
  EXPECT_NEAR(eval_quantifier(QuantifierKind::Forall, v, TNorm::Product), 0.36, 1e-15);
  EXPECT_NEAR(eval_quantifier(QuantifierKind::Forall, v, TNorm::Lukasiewicz), 0.2, 1e-15);
  EXPECT_NEAR(eval_quantifier(QuantifierKind::Exists, v, TNorm::Goedel), 0.9, 1e-15);
  EXPECT_NEAR(eval_quantifier(QuantifierKind::Exists, v, TNorm::Product), 1.0 - 0.1 * 0.5 * 0.2, 1e-15);
  EXPECT_NEAR(eval_quantifier(QuantifierKind::Exists, v, TNorm::Lukasiewicz), 1.0, 1e-15);
  for (auto t : kAllTNorms) {
    EXPECT_EQ(eval_quantifier(QuantifierKind::Forall, {}, t), 1.0);
    EXPECT_EQ(eval_quantifier(QuantifierKind::Exists, {}, t), 0.0);
    const std::vector<double> bad = {0.5, 1.5};
    EXPECT_EQ(error_of([&] { eval_quantifier(QuantifierKind::Forall, bad, t); }), ErrorCode::DomainError);
  }
}

TEST(Quantifiers, FoldMatchesRepeatedConnective) {
  Rng rng(6);
  for (auto t : kAllTNorms) {
    for (int k = 0; k < 100; ++k) {
      std::vector<double> v(1 + uniform_index(rng, 6));
      for (auto& x : v) x = uniform(rng);
      double all = 1.0, any = 0.0;
      for (double x : v) {
        all = apply(ConnectiveOp::And, all, x, t);
        any = apply(ConnectiveOp::Or, any, x, t);
      }
      EXPECT_NEAR(eval_quantifier(QuantifierKind::Forall, v, t), all, 1e-12);
      EXPECT_NEAR(eval_quantifier(QuantifierKind::Exists, v, t), any, 1e-12);
    }
  }
}

TEST(GraphSemantics, NodesAgreeWithScalarSemantics) {
  Rng rng(8);
  const std::size_t n = 200;
  Tensor xs = Tensor::zeros({n}), ys = Tensor::zeros({n});
  for (std::size_t i = 0; i < n; ++i) {
    // a few exact ties and boundary values among random points
    xs[i] = i % 10 == 0 ? 0.0 : (i % 10 == 1 ? 1.0 : uniform(rng));
    ys[i] = i % 7 == 0 ? xs[i] : uniform(rng);
  }
  for (auto t : kAllTNorms) {
    ad::Graph g;
    const auto x = g.constant(xs), y = g.constant(ys);
    for (auto op : {ConnectiveOp::Not, ConnectiveOp::And, ConnectiveOp::Or, ConnectiveOp::Implies, ConnectiveOp::Iff}) {
      const ad::NodeId args[2] = {x, y};
      const auto node = connective_node(g, op, std::span<const ad::NodeId>(args, lang::arity(op)), t);
      for (std::size_t i = 0; i < n; ++i) {
        EXPECT_NEAR(g.value(node)[i], apply(op, xs[i], ys[i], t), 1e-12) << lang::to_string(op) << " " << to_string(t);
      }
    }
    Tensor m = Tensor::zeros({20, 10});
    for (auto& v : m.data) v = uniform(rng);
    const auto mn = g.constant(m);
    for (auto kind : {QuantifierKind::Forall, QuantifierKind::Exists}) {
      const auto folded = quantifier_node(g, kind, mn, t);
      for (std::size_t r = 0; r < 20; ++r) {
        const auto row = m.row(r);
        EXPECT_NEAR(g.value(folded)[r], eval_quantifier(kind, std::vector<double>(row.begin(), row.end()), t), 1e-12);
      }
    }
  }
}

TEST(Compile, TemplateMirrorsFormula) {
  const auto file = lang::parse_constraint_file(
      "domain People 4\n"
      "predicate Married(People, People) given\n"
      "predicate Republican(People) learnable\n"
      "name=married : forall x: forall y: Married(x, y) implies (Republican(x) iff Republican(y))\n");
  for (auto t : kAllTNorms) {
    CompileOptions o;
    o.tnorm = t;
    const auto c = compile(file.constraints[0], file.signature, o);
    EXPECT_EQ(c.name, "married");
    EXPECT_EQ(c.tnorm, t);
    ASSERT_EQ(c.plan.size(), 2u);
    EXPECT_EQ(c.plan[0].variable, "x");
    EXPECT_EQ(c.plan[1].parent, std::optional<std::size_t>(0));
    EXPECT_EQ(c.plan[1].aggregation, t);
    // Married(x,y), Republican(x), Republican(y)
    EXPECT_EQ(c.slots.size(), 3u);
  }
}

TEST(Compile, ScalarEvaluationMatchesHandComputation) {
  const auto file = lang::parse_constraint_file(
      "domain People 4\n"
      "predicate Married(People, People) given\n"
      "predicate Republican(People) learnable\n"
      "forall x: forall y: Married(x, y) implies (Republican(x) iff Republican(y))\n");
  const auto c = compile(file.constraints[0], file.signature);
  // two people, married to each other; f_R = (0.8, 0.4)
  const double rep[2] = {0.8, 0.4};
  const auto value = c.evaluate(
      [&](std::size_t slot, const std::vector<std::size_t>& a) {
        const auto& s = c.slots[slot];
        if (s.symbol == "Married") return a[0] != a[1] ? 1.0 : 0.0;
        return rep[a[c.terms[s.args[0]].quantifier]];
      },
      [](const std::string&) { return std::size_t{2}; });
  EXPECT_NEAR(value, 0.5 * 0.5, 1e-12);
}

TEST(Compile, TagsOverrideDefaults) {
  const auto file = lang::parse_constraint_file(
      "domain D 2\n"
      "predicate p(D) learnable\n"
      "[tnorm=goedel] [exists=lukasiewicz] [mapping=linear] name=a : forall x: exists y: p(x) and p(y)\n"
      "[colour=red] name=b : forall x: p(x)\n");
  const auto a = compile(file.constraints[0], file.signature);
  EXPECT_EQ(a.tnorm, TNorm::Goedel);
  EXPECT_EQ(a.plan[0].aggregation, TNorm::Goedel);
  EXPECT_EQ(a.plan[1].aggregation, TNorm::Lukasiewicz);
  EXPECT_EQ(error_of([&] { compile(file.constraints[1], file.signature); }), ErrorCode::ConfigError);
}

TEST(Compile, EqualityNeedsABinding) {
  const auto file = lang::parse_constraint_file(
      "domain D 2\n"
      "function f(D) -> D\n"
      "name=fixed : forall x: f(x) = x\n");
  CompileOptions o;
  o.equality = EqualityBinding{};
  EXPECT_EQ(error_of([&] { compile(file.constraints[0], file.signature, o); }), ErrorCode::MissingEqualityBinding);
  EXPECT_NO_THROW(compile(file.constraints[0], file.signature));
}

TEST(Compile, RejectsInvalidFormulas) {
  const auto file = lang::parse_constraint_file(
      "domain D 2\n"
      "predicate p(D) learnable\n"
      "name=bad : forall x: p(y)\n");
  EXPECT_EQ(error_of([&] { compile(file.constraints[0], file.signature); }), ErrorCode::UnboundVariable);
}
