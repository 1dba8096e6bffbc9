#include <cmath>

#include "doctest.h"
#include "fgan/core/error.hpp"
#include "fgan/core/layers.hpp"
#include "fgan/core/ops.hpp"
#include "fgan/core/optim.hpp"
#include "gradcheck.hpp"

using namespace fgan;
using fgan::testing::gradcheck;
using fgan::testing::probe_weights;

namespace {

Var probe_loss(const Var& y, unsigned seed = 7) {
  return ops::sum(ops::mul(y, constant(probe_weights(y.shape(), seed))));
}

constexpr double kTol = 1e-6;

}  // namespace

TEST_CASE("elementwise ops match finite differences") {
  Rng rng(1);
  Var a = parameter(rng.normal_tensor({2, 3}));
  Var b = parameter(rng.normal_tensor({2, 3}));
  Var s = parameter(Tensor::scalar(0.7));
  CHECK(gradcheck([&] { return probe_loss(ops::add(a, b)); }, {a, b}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::sub(a, b)); }, {a, b}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::mul(a, b)); }, {a, b}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::scale_by(a, s)); }, {a, s}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::sigmoid(a)); }, {a}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::tanh(a)); }, {a}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::relu(a)); }, {a}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return ops::mean(ops::mul(a, a)); }, {a}).worst_relative_error < kTol);
}

TEST_CASE("matrix products match finite differences") {
  Rng rng(2);
  Var a = parameter(rng.normal_tensor({3, 4}));
  Var b = parameter(rng.normal_tensor({4, 2}));
  Var bias = parameter(rng.normal_tensor({2}));
  CHECK(gradcheck([&] { return probe_loss(ops::add_row_bias(ops::matmul(a, b), bias)); }, {a, b, bias})
            .worst_relative_error < kTol);

  for (int ta = 0; ta < 2; ++ta)
    for (int tb = 0; tb < 2; ++tb) {
      Var x = parameter(rng.normal_tensor(ta ? std::vector<int>{2, 4, 3} : std::vector<int>{2, 3, 4}));
      Var y = parameter(rng.normal_tensor(tb ? std::vector<int>{2, 5, 4} : std::vector<int>{2, 4, 5}));
      auto report = gradcheck([&] { return probe_loss(ops::bmm(x, y, ta, tb)); }, {x, y});
      CHECK_MESSAGE(report.worst_relative_error < kTol, "trans_a=" << ta << " trans_b=" << tb);
    }

  Var x3 = parameter(rng.normal_tensor({2, 3, 4}));
  Var y2 = parameter(rng.normal_tensor({2, 4}));
  CHECK(gradcheck([&] { return probe_loss(ops::add_broadcast_mid(x3, y2)); }, {x3, y2}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::transpose12(x3)); }, {x3}).worst_relative_error < kTol);
  Var r1 = parameter(rng.normal_tensor({3, 4}));
  Var r2 = parameter(rng.normal_tensor({3, 4}));
  CHECK(gradcheck([&] { return probe_loss(ops::row_dot(r1, r2)); }, {r1, r2}).worst_relative_error < kTol);
}

TEST_CASE("convolution and resampling match finite differences") {
  Rng rng(3);
  Var x = parameter(rng.normal_tensor({2, 2, 5, 6}));
  Var w3 = parameter(rng.normal_tensor({3, 2, 3, 3}));
  Var w1 = parameter(rng.normal_tensor({3, 2, 1, 1}));
  Var b = parameter(rng.normal_tensor({3}));
  CHECK(gradcheck([&] { return probe_loss(ops::conv2d(x, w3, &b, {1, 1})); }, {x, w3, b}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::conv2d(x, w3, nullptr, {2, 1})); }, {x, w3}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::conv2d(x, w1, &b, {1, 0})); }, {x, w1, b}).worst_relative_error < kTol);
  Var x4 = parameter(rng.normal_tensor({2, 2, 4, 6}));
  CHECK(gradcheck([&] { return probe_loss(ops::avg_pool2(x4)); }, {x4}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::max_pool2(x4)); }, {x4}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::upsample_nearest2(x4)); }, {x4}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::global_sum_pool(x4)); }, {x4}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::global_avg_pool(x4)); }, {x4}).worst_relative_error < kTol);
  Var y4 = parameter(rng.normal_tensor({2, 3, 4, 6}));
  CHECK(gradcheck([&] { return probe_loss(ops::concat1({x4, y4})); }, {x4, y4}).worst_relative_error < kTol);
}

TEST_CASE("normalization matches finite differences") {
  Rng rng(4);
  Var x = parameter(rng.normal_tensor({3, 2, 3, 3}));
  Var gain = parameter(rng.normal_tensor({3, 2}));
  Var bias = parameter(rng.normal_tensor({3, 2}));
  ops::BatchNormState st{Tensor({2}), Tensor({2}, 1.0)};
  CHECK(gradcheck([&] { return probe_loss(ops::batch_norm(x, st, true)); }, {x}).worst_relative_error < 1e-5);
  CHECK(gradcheck([&] { return probe_loss(ops::batch_norm(x, st, false)); }, {x}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::channel_affine(x, gain, bias)); }, {x, gain, bias})
            .worst_relative_error < kTol);
  Var g1 = parameter(rng.normal_tensor({2}));
  Var b1 = parameter(rng.normal_tensor({2}));
  CHECK(gradcheck([&] { return probe_loss(ops::channel_affine(x, g1, b1)); }, {x, g1, b1}).worst_relative_error < kTol);
}

TEST_CASE("batch norm in training mode whitens each channel and tracks running statistics") {
  Rng rng(5);
  Var x = constant(rng.normal_tensor({4, 2, 3, 3}, 3.0));
  ops::BatchNormState st{Tensor({2}), Tensor({2}, 1.0)};
  Var y = ops::batch_norm(x, st, true);
  for (int c = 0; c < 2; ++c) {
    double s = 0, ss = 0;
    for (int n = 0; n < 4; ++n)
      for (int i = 0; i < 9; ++i) {
        const double v = y.value()[(n * 2 + c) * 9 + i];
        s += v;
        ss += v * v;
      }
    CHECK(s / 36 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(ss / 36 == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(st.running_var[c] != 1.0);
  }
}

TEST_CASE("softmax family matches finite differences") {
  Rng rng(6);
  Var x = parameter(rng.normal_tensor({3, 5}));
  CHECK(gradcheck([&] { return probe_loss(ops::softmax_last(x)); }, {x}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return probe_loss(ops::log_softmax_last(x)); }, {x}).worst_relative_error < kTol);
  CHECK(gradcheck([&] { return ops::cross_entropy_sum(x, {1, 0, 4}, 0); }, {x}).worst_relative_error < kTol);
  Var table = parameter(rng.normal_tensor({4, 3}));
  CHECK(gradcheck([&] { return probe_loss(ops::embedding(table, {2, 0, 2})); }, {table}).worst_relative_error < kTol);
}

TEST_CASE("cross entropy skips ignored rows and equals -log p") {
  Var logits = constant(Tensor({2, 4}));  // uniform rows
  CHECK(ops::cross_entropy_sum(logits, {1, 2}, 0).item() == doctest::Approx(2 * std::log(4.0)));
  CHECK(ops::cross_entropy_sum(logits, {0, 2}, 0).item() == doctest::Approx(std::log(4.0)));
}

TEST_CASE("spectral normalization yields unit top singular value and correct gradient") {
  Rng rng(8);
  Var w = parameter(rng.normal_tensor({4, 2, 3, 3}));
  Tensor u = rng.normal_tensor({4});
  for (int i = 0; i < 50; ++i) ops::spectral_normalize(w, u, true);
  Var wsn = ops::spectral_normalize(w, u, false);
  // Power iteration on the normalized matrix: its top singular value must be ~1.
  Tensor u2 = u;
  for (int i = 0; i < 50; ++i) ops::spectral_normalize(wsn, u2, true);
  Var twice = ops::spectral_normalize(wsn, u2, false);
  for (std::size_t i = 0; i < twice.value().size(); ++i) CHECK(twice.value()[i] == doctest::Approx(wsn.value()[i]).epsilon(1e-6));
  CHECK(gradcheck([&] { return probe_loss(ops::spectral_normalize(w, u, false)); }, {w}).worst_relative_error < 1e-5);
}

TEST_CASE("shape errors are reported") {
  Var a = constant(Tensor({2, 3}));
  Var b = constant(Tensor({3, 2}));
  CHECK_THROWS_AS(ops::add(a, b), ShapeMismatch);
  CHECK_THROWS_AS(ops::matmul(a, a), ShapeMismatch);
  CHECK_THROWS_AS(ops::conv2d(constant(Tensor({1, 2, 4, 4})), constant(Tensor({1, 3, 3, 3})), nullptr, {1, 1}),
                  ShapeMismatch);
}

TEST_CASE("no-grad mode records nothing") {
  Var a = parameter(Tensor({2}, 1.0));
  NoGradGuard guard;
  Var y = ops::mul(a, a);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("gru cell matches finite differences") {
  Rng rng(9);
  GRUCell cell(3, 4, rng);
  Var x = parameter(rng.normal_tensor({2, 3}));
  Var h = parameter(rng.normal_tensor({2, 4}));
  auto params = cell.parameters();
  params.push_back(x);
  params.push_back(h);
  CHECK(gradcheck([&] { return probe_loss(cell.forward(x, h)); }, params).worst_relative_error < kTol);
}

TEST_CASE("orthogonal init produces orthonormal rows or columns") {
  Rng rng(10);
  Tensor w = orthogonal_init({3, 2, 2, 2}, rng);  // 3 x 8: orthonormal rows
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double dot = 0;
      for (int k = 0; k < 8; ++k) dot += w[i * 8 + k] * w[j * 8 + k];
      CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-9));
    }
}

TEST_CASE("optimizers descend a quadratic") {
  Var p = parameter(Tensor({2}, std::vector<Real>{3.0, -2.0}));
  Adam adam({p}, 0.1, 0.0, 0.9);
  for (int i = 0; i < 300; ++i) {
    adam.zero_grad();
    backward(ops::sum(ops::mul(p, p)));
    adam.step();
  }
  CHECK(std::abs(p.value()[0]) < 0.1);

  Var q = parameter(Tensor({2}, std::vector<Real>{3.0, -2.0}));
  SgdMomentum sgd({q}, 0.01, 0.9);
  for (int i = 0; i < 300; ++i) {
    sgd.zero_grad();
    backward(ops::sum(ops::mul(q, q)));
    sgd.step();
  }
  CHECK(std::abs(q.value()[0]) < 1e-2);
  CHECK_THROWS_AS(SgdMomentum({q}, 0.01, 1.0), ConfigError);
}

TEST_CASE("gradient clipping bounds the global norm") {
  Var p = parameter(Tensor({2}));
  p.mutable_grad()[0] = 3;
  p.mutable_grad()[1] = 4;
  SgdMomentum sgd({p}, 0.1, 0.0);
  CHECK(sgd.clip_grad_norm(1.0) == doctest::Approx(5.0));
  CHECK(p.grad()[0] == doctest::Approx(0.6));
}
