#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <functional>

#include "fuzzyc/autodiff/gradcheck.hpp"
#include "fuzzyc/models/given.hpp"
#include "fuzzyc/models/model.hpp"
#include "fuzzyc/models/registry.hpp"
#include "fuzzyc/models/similarity.hpp"
#include "oracle/interpreter.hpp"

using namespace fuzzyc;
using namespace fuzzyc::models;

namespace {

Tensor random_batch(Rng& rng, std::size_t rows, std::size_t cols, double scale) {
  Tensor t = Tensor::zeros({rows, cols});
  for (auto& v : t.data) v = scale * normal(rng);
  return t;
}

Mlp::Options mlp_options(std::size_t in, std::size_t out, Head head, std::vector<std::size_t> hidden = {50}) {
  Mlp::Options o;
  o.input = in;
  o.output = out;
  o.head = head;
  o.hidden = std::move(hidden);
  return o;
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

TEST(Mlp, ZeroWeightsGiveOneHalf) {
  Rng rng(1);
  Mlp m("m", mlp_options(4, 3, Head::Sigmoid), rng);
  for (const auto& p : m.params()) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
  const auto out = m.apply(random_batch(rng, 5, 4, 3.0));
  for (double v : out.data) EXPECT_EQ(v, 0.5);
}

TEST(Mlp, ImageCodomainKeepsSizeAndRange) {
  Rng rng(2);
  Mlp m("next", mlp_options(64, 64, Head::Sigmoid), rng);
  Tensor x = Tensor::zeros({10, 64});
  for (auto& v : x.data) v = uniform(rng);
  const auto y = m.apply(x);
  EXPECT_EQ(y.shape, (Shape{10, 64}));
  for (double v : y.data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Mlp, GlorotInitBounds) {
  Rng rng(3);
  Mlp m("m", mlp_options(64, 10, Head::Sigmoid), rng);
  const double limit = std::sqrt(6.0 / (64 + 50));
  for (double v : m.layers()[0].weight->value.data) EXPECT_LE(std::abs(v), limit);
  for (double v : m.layers()[0].bias->value.data) EXPECT_EQ(v, 0.0);
}

TEST(Mlp, MatchesPlainLoopForward) {
  Rng rng(4);
  for (auto head : {Head::Sigmoid, Head::Softmax, Head::Linear}) {
    Mlp m("m", mlp_options(5, 3, head, {7, 4}), rng);
    for (const auto& p : m.params()) {
      for (auto& v : p->value.data) v = uniform(rng, -1.5, 1.5);
    }
    const auto x = random_batch(rng, 20, 5, 1.0);
    const auto y = m.apply(x);
    for (std::size_t r = 0; r < 20; ++r) {
      const auto row = x.row(r);
      const auto expect = oracle::mlp_forward(m, {row.begin(), row.end()});
      for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(y.data[r * 3 + j], expect[j], 1e-12);
    }
  }
}

TEST(Mlp, BinaryClassifierLossGradient) {
  Rng rng(5);
  Mlp m("m", mlp_options(4, 1, Head::Sigmoid, {8}), rng);
  ad::Graph g;
  const auto x = g.constant(random_batch(rng, 16, 4, 1.0));
  Tensor labels = Tensor::zeros({16, 1});
  for (auto& v : labels.data) v = uniform(rng) < 0.5 ? 1.0 : 0.0;
  const auto y = g.constant(labels);
  const auto p = m.forward(g, x);
  const auto one = g.scalar(1.0);
  const auto ll = g.add(g.mul(y, g.log(p)), g.mul(g.sub(one, y), g.log(g.sub(one, p))));
  const auto loss = g.neg(g.mean(ll));
  const auto r = ad::check_gradients(g, loss);
  EXPECT_LT(r.max_relative_error, 1e-4);
  EXPECT_GT(r.checked, 40u);
}

TEST(Mlp, ShapeMismatch) {
  Rng rng(6);
  Mlp m("m", mlp_options(4, 1, Head::Sigmoid), rng);
  EXPECT_EQ(error_of([&] { m.apply(Tensor::zeros({2, 3})); }), ErrorCode::ShapeMismatch);
}

TEST(Mlp, SharedFirstLayer) {
  Rng rng(7);
  Mlp a("a", mlp_options(4, 4, Head::Sigmoid, {6}), rng), b("b", mlp_options(4, 4, Head::Sigmoid, {6}), rng);
  b.share_first_layer(a);
  EXPECT_EQ(a.layers()[0].weight, b.layers()[0].weight);
  EXPECT_NE(a.layers()[1].weight, b.layers()[1].weight);
  a.layers()[0].weight->value[0] = 42.0;
  EXPECT_EQ(b.layers()[0].weight->value[0], 42.0);
}

TEST(Rbf, SoftmaxSumsToOneAndMatchesLoop) {
  Rng rng(8);
  const auto data = random_batch(rng, 30, 4, 1.0);
  auto m = Rbf::from_data("d", data, {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, {10, 11, 12, 13, 14}, {20, 21, 22}}, 3, 3, rng);
  EXPECT_EQ(m->units(), 9u);
  const auto x = random_batch(rng, 50, 4, 1.0);
  const auto y = m->apply(x);
  for (std::size_t r = 0; r < 50; ++r) {
    double s = 0.0;
    const auto row = x.row(r);
    const auto expect = oracle::rbf_forward(*m, {row.begin(), row.end()});
    for (std::size_t j = 0; j < 3; ++j) {
      s += y.data[r * 3 + j];
      EXPECT_NEAR(y.data[r * 3 + j], expect[j], 1e-12);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Rbf, UnitAtItsCentreIsOne) {
  Rng rng(9);
  Tensor centers({2, 2}, {0.0, 0.0, 100.0, 100.0});
  Rbf m("r", centers, {1.0, 1.0}, 3, rng);
  ad::Graph g;
  const auto x = g.constant(Tensor({1, 2}, {0.0, 0.0}));
  const auto d2 = g.sqdist(x, g.param(m.centers()));
  const auto act = g.value(g.exp(g.neg(d2)));
  EXPECT_EQ(act[0], 1.0);
  EXPECT_EQ(act[1], 0.0);
}

TEST(Rbf, MembershipsBecomeUniformFarAway) {
  Rng rng(10);
  const auto data = random_batch(rng, 30, 8, 1.0);
  auto m = Rbf::from_data("d", data, {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}}, 9, 3, rng);
  for (auto& v : m->weight()->value.data) v = uniform(rng, -5, 5);
  for (int k = 0; k < 20; ++k) {
    Tensor dir = random_batch(rng, 1, 8, 1.0);
    double norm = 0.0;
    for (double v : dir.data) norm += v * v;
    for (auto& v : dir.data) v *= 1e3 / std::sqrt(norm);
    const auto y = m->apply(dir);
    for (double v : y.data) EXPECT_NEAR(v, 1.0 / 3.0, 1e-12);
  }
}

TEST(Models, PredicateOutputsStayInUnitInterval) {
  Rng rng(11);
  Mlp sig("s", mlp_options(6, 1, Head::Sigmoid, {50}), rng);
  Mlp soft("t", mlp_options(6, 3, Head::Softmax, {50}), rng);
  for (auto* m : {&sig, &soft}) {
    for (const auto& p : m->params()) {
      for (auto& v : p->value.data) v *= 5.0;
    }
  }
  const auto data = random_batch(rng, 40, 6, 1.0);
  auto rbf = Rbf::from_data("r", data, {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}}, 12, 3, rng);
  const auto x = random_batch(rng, 10000, 6, 10.0);
  for (const Model* m : std::initializer_list<const Model*>{&sig, &soft, rbf.get()}) {
    const auto y = m->apply(x);
    for (double v : y.data) {
      ASSERT_GE(v, 0.0) << m->name();
      ASSERT_LE(v, 1.0) << m->name();
    }
  }
}

TEST(Similarity, PixelFormulaAndExamples) {
  const Tensor x({2, 2}, {0.0, 1.0, 0.5, 0.25});
  EXPECT_EQ(pixel_similarity(x, x), 1.0);
  const Tensor zeros = Tensor::zeros({2, 2}), ones = Tensor::filled({2, 2}, 1.0);
  EXPECT_NEAR(pixel_similarity(zeros, ones), 0.23840584404423515, 1e-15);
  EXPECT_EQ(error_of([&] { pixel_similarity(x, Tensor::zeros({4})); }), ErrorCode::ShapeMismatch);
}

TEST(Similarity, SymmetricAndMonotoneAlongRays) {
  Rng rng(12);
  for (int k = 0; k < 200; ++k) {
    Tensor x = Tensor::zeros({8, 8}), y = Tensor::zeros({8, 8});
    for (auto& v : x.data) v = uniform(rng);
    for (auto& v : y.data) v = uniform(rng);
    EXPECT_EQ(pixel_similarity(x, y), pixel_similarity(y, x));
    double last = 1.0;
    for (int s = 1; s <= 10; ++s) {
      Tensor z = x;
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = x[i] + (y[i] - x[i]) * s / 10.0;
      const double sim = pixel_similarity(x, z);
      EXPECT_LE(sim, last);
      last = sim;
    }
  }
}

TEST(Similarity, GraphFormsAgreeWithScalar) {
  Rng rng(13);
  const auto a = random_batch(rng, 4, 6, 1.0), b = random_batch(rng, 3, 6, 1.0);
  for (auto kind : {semantics::EqualityKind::PixelSimilarity, semantics::EqualityKind::SquaredExponential}) {
    ad::Graph g;
    const auto pw = similarity_pairwise(g, kind, g.constant(a), g.constant(b));
    const auto rows = similarity_rows(g, kind, g.constant(a), g.constant(a));
    for (std::size_t i = 0; i < 4; ++i) {
      const Tensor ai({6}, {a.row(i).begin(), a.row(i).end()});
      EXPECT_NEAR(g.value(rows)[i], 1.0, 1e-15);
      for (std::size_t j = 0; j < 3; ++j) {
        const Tensor bj({6}, {b.row(j).begin(), b.row(j).end()});
        EXPECT_NEAR(g.value(pw)[i * 3 + j], similarity(kind, ai, bj), 1e-12);
      }
    }
  }
}

TEST(Given, LookupComplementAndErrors) {
  GivenTable t;
  t.declare("isZero", {3});
  t.declare("isOne", {3});
  const std::size_t e0[1] = {0}, e1[1] = {1}, e5[1] = {5};
  t.set("isZero", e0, 1.0);
  t.set("isOne", e1, 1.0);
  EXPECT_EQ(t.eval("isZero", e0), 1.0);
  EXPECT_EQ(t.eval("isOne", e0), 0.0);
  t.declare("notZero", {3});
  t.complement("notZero", "isZero");
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t e[1] = {i};
    EXPECT_EQ(t.eval("notZero", e), 1.0 - t.eval("isZero", e));
  }
  EXPECT_EQ(error_of([&] { t.eval("isZero", e5); }), ErrorCode::UnknownElement);
  EXPECT_EQ(error_of([&] { t.eval("isTwo", e0); }), ErrorCode::UnknownSymbol);
  EXPECT_EQ(error_of([&] { t.set("isZero", e0, 0.5); }), ErrorCode::ConfigError);
}

TEST(Given, CsvRoundTrip) {
  GivenTable t;
  t.declare("Married", {4, 4});
  const std::size_t ab[2] = {1, 2}, ba[2] = {2, 1};
  t.set("Married", ab, 1.0);
  t.set("Married", ba, 1.0);
  GivenTable u;
  u.declare("Married", {4, 4});
  u.load_csv(t.to_csv());
  EXPECT_EQ(u.to_csv(), t.to_csv());
  EXPECT_EQ(u.eval("Married", ab), 1.0);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(14);
  Mlp m("m", mlp_options(3, 2, Head::Softmax, {5}), rng);
  for (const auto& p : m.params()) {
    for (auto& v : p->value.data) v = normal(rng) / 3.0;
  }
  const auto path = (std::filesystem::temp_directory_path() / "fuzzyc_ckpt_test.json").string();
  save_checkpoint(path, m.params());
  Rng other(99);
  Mlp n("m", mlp_options(3, 2, Head::Softmax, {5}), other);
  load_checkpoint(path, n.params());
  for (std::size_t i = 0; i < m.params().size(); ++i) EXPECT_EQ(m.params()[i]->value, n.params()[i]->value);
  EXPECT_EQ(checkpoint_string(m.params()), checkpoint_string(n.params()));
  std::filesystem::remove(path);
}
