#include "doctest.h"
#include "oracles.hpp"

#include "drsl/kernel_net.hpp"

using namespace drsl;

TEST_CASE("activations at the origin") {
  CHECK(activate(Activation::sigmoid, 0.0) == 0.5);
  CHECK(activate(Activation::tanh, 0.0) == 0.0);
  for (double x : {0.0, 0.5, 3.0}) CHECK(activate(Activation::relu, -x) == 0.0);
  CHECK(activate(Activation::relu, 2.0) == 2.0);
}

TEST_CASE("init_params shapes and determinism") {
  const std::vector<Index> sizes{8, 5, 4, 3};
  const auto a = init_params(sizes, InitScheme::scaled_normal, 42);
  const auto b = init_params(sizes, InitScheme::scaled_normal, 42);
  REQUIRE(a.layers.size() == 3);
  CHECK(a.layers[0].weight.rows() == 5);
  CHECK(a.layers[0].weight.cols() == 8);
  CHECK(a.layers[1].weight.rows() == 4);
  CHECK(a.layers[1].weight.cols() == 5);
  CHECK(a.layers[2].weight.rows() == 3);
  CHECK(a.layers[2].weight.cols() == 4);
  CHECK(a.layers[0].bias.size() == 5);
  CHECK(a.layers[1].bias.size() == 4);
  CHECK(a.layers[2].bias.size() == 3);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(a.layers[m].weight == b.layers[m].weight);
    CHECK(a.layers[m].bias == b.layers[m].bias);
  }
  CHECK(init_params(sizes, InitScheme::scaled_normal, 43).layers[0].weight != a.layers[0].weight);
  CHECK_THROWS_AS(init_params({4, 3}, InitScheme::scaled_normal, 1), Error);
}

TEST_CASE("init scales") {
  const auto p = init_params({10000, 20, 3}, InitScheme::scaled_normal, 3);
  const Matrix& w = p.layers[0].weight;
  const double sd = std::sqrt((w.array() - w.mean()).square().sum() / static_cast<double>(w.size() - 1));
  CHECK(std::abs(sd - 0.01) < 0.001);

  const auto q = init_params({200, 50, 3}, InitScheme::unit_normal, 3);
  const Matrix& wq = q.layers[0].weight;
  const double sdq = std::sqrt((wq.array() - wq.mean()).square().sum() / static_cast<double>(wq.size() - 1));
  CHECK(std::abs(sdq - 1.0) < 0.05);
}

TEST_CASE("forward on degenerate networks") {
  auto p = init_params({3, 4, 2}, InitScheme::scaled_normal, 1);
  for (auto& l : p.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  std::mt19937_64 rng(2);
  const Matrix x = oracle::random_matrix(5, 3, rng);
  const auto trace = forward_trace(p, x, Activation::sigmoid);
  CHECK(trace.activations[1].isConstant(0.5));
  CHECK(trace.output().isZero(0.0));

  p.layers.back().bias << 1.5, -2.0;
  const Matrix out = forward(p, x, Activation::sigmoid);
  for (Index r = 0; r < out.rows(); ++r) {
    CHECK(out(r, 0) == 1.5);
    CHECK(out(r, 1) == -2.0);
  }
  CHECK_THROWS_AS(forward(p, Matrix::Ones(2, 4), Activation::sigmoid), Error);
}

TEST_CASE("forward matches the per-neuron oracle") {
  std::mt19937_64 rng(7);
  const auto p = init_params({3, 4, 4, 2}, InitScheme::unit_normal, 99);
  const Matrix x = oracle::random_matrix(6, 3, rng);
  for (auto g : {Activation::sigmoid, Activation::tanh, Activation::relu}) {
    const Matrix out = forward(p, x, g);
    const auto trace = forward_trace(p, x, g);
    CHECK(trace.activations.front() == x);
    CHECK(trace.output() == out);
    for (Index r = 0; r < x.rows(); ++r) {
      const auto expected =
          oracle::mlp(p, oracle::row(x, r), [g](double z) { return activate(g, z); });
      for (Index c = 0; c < 2; ++c) CHECK(std::abs(out(r, c) - expected[static_cast<std::size_t>(c)]) < 1e-12);
    }
  }
}

TEST_CASE("forward is row-decomposable") {
  std::mt19937_64 rng(8);
  const auto p = init_params({5, 6, 3}, InitScheme::scaled_normal, 4);
  const Matrix a = oracle::random_matrix(4, 5, rng);
  const Matrix b = oracle::random_matrix(3, 5, rng);
  Matrix stacked(7, 5);
  stacked << a, b;
  const Matrix joint = forward(p, stacked, Activation::tanh);
  CHECK((joint.topRows(4) - forward(p, a, Activation::tanh)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((joint.bottomRows(3) - forward(p, b, Activation::tanh)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("kernel_loss values") {
  std::mt19937_64 rng(3);
  auto p = init_params({4, 5, 3}, InitScheme::scaled_normal, 5);
  const Matrix x = oracle::random_matrix(2, 4, rng);
  CHECK(kernel_loss(p, x, forward(p, x, Activation::sigmoid), Activation::sigmoid) == 0.0);

  for (auto& l : p.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  CHECK(kernel_loss(p, x, Matrix::Ones(2, 3), Activation::sigmoid) == 6.0);
  CHECK_THROWS_AS(kernel_loss(p, x, Matrix::Ones(3, 3), Activation::sigmoid), Error);

  const auto q = init_params({4, 6, 3}, InitScheme::unit_normal, 8);
  const Matrix y = oracle::random_matrix(2, 3, rng);
  double brute = 0;
  for (Index r = 0; r < 2; ++r) {
    const auto f = oracle::mlp(q, oracle::row(x, r), oracle::sigmoid);
    for (Index c = 0; c < 3; ++c) brute += (f[static_cast<std::size_t>(c)] - y(r, c)) * (f[static_cast<std::size_t>(c)] - y(r, c));
  }
  const double loss = kernel_loss(q, x, y, Activation::sigmoid);
  CHECK(std::abs(loss - brute) < 1e-10);
  CHECK(loss >= 0.0);
}

TEST_CASE("backprop vanishes at the exact fit") {
  std::mt19937_64 rng(4);
  const auto p = init_params({4, 5, 3, 2}, InitScheme::unit_normal, 6);
  const Matrix x = oracle::random_matrix(7, 4, rng);
  const auto g = backprop(p, x, forward(p, x, Activation::tanh), Activation::tanh);
  for (const auto& l : g.layers) {
    CHECK(l.weight.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(l.bias.cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("backprop on a 1-1-1 sigmoid net matches the hand-derived chain rule") {
  NetworkParameters p;
  p.layer_sizes = {1, 1, 1};
  p.layers = {{Matrix::Constant(1, 1, 0.7), Vector::Constant(1, -0.2)},
              {Matrix::Constant(1, 1, 1.3), Vector::Constant(1, 0.4)}};
  const double x = 0.9, y = 0.25;
  // h = s(w1 x + a1), f = w2 h + a2, L = (f - y)^2
  const double z = 0.7 * x - 0.2;
  const double h = 1.0 / (1.0 + std::exp(-z));
  const double f = 1.3 * h + 0.4;
  const double dl_df = 2.0 * (f - y);
  const double dl_dz = dl_df * 1.3 * h * (1.0 - h);
  const auto g = backprop(p, Matrix::Constant(1, 1, x), Matrix::Constant(1, 1, y), Activation::sigmoid);
  CHECK(g.layers[1].weight(0, 0) == doctest::Approx(dl_df * h).epsilon(1e-14));
  CHECK(g.layers[1].bias(0) == doctest::Approx(dl_df).epsilon(1e-14));
  CHECK(g.layers[0].weight(0, 0) == doctest::Approx(dl_dz * x).epsilon(1e-14));
  CHECK(g.layers[0].bias(0) == doctest::Approx(dl_dz).epsilon(1e-14));
}

TEST_CASE("backprop matches central finite differences") {
  std::mt19937_64 rng(12);
  double worst = 0;
  int probes = 0;
  for (auto g : {Activation::sigmoid, Activation::tanh, Activation::relu}) {
    for (int trial = 0; trial < 4; ++trial) {
      auto p = init_params({6, 5, 4, 3}, InitScheme::unit_normal, rng());
      const Matrix x = oracle::random_matrix(8, 6, rng);
      const Matrix y = oracle::random_matrix(8, 3, rng);
      const auto grads = backprop(p, x, y, g);
      auto loss = [&] { return kernel_loss(p, x, y, g); };
      std::uniform_int_distribution<std::size_t> layer(0, p.layers.size() - 1);
      for (int k = 0; k < 100 / 12 + 1; ++k) {
        const std::size_t m = layer(rng);
        std::uniform_int_distribution<Index> wi(0, p.layers[m].weight.size() - 1);
        const Index i = wi(rng);
        const double fd = oracle::central_difference(p.layers[m].weight.data()[i], loss);
        const double err = oracle::rel_error(grads.layers[m].weight.data()[i], fd);
        // relu kinks can sit inside the difference stencil; skip those rare probes
        if (g != Activation::relu || err < 1e-3) worst = std::max(worst, err);
        std::uniform_int_distribution<Index> bi(0, p.layers[m].bias.size() - 1);
        const Index j = bi(rng);
        const double fdb = oracle::central_difference(p.layers[m].bias(j), loss);
        const double errb = oracle::rel_error(grads.layers[m].bias(j), fdb);
        if (g != Activation::relu || errb < 1e-3) worst = std::max(worst, errb);
        probes += 2;
      }
    }
  }
  CHECK(probes >= 100);
  CHECK(worst < 1e-5);
}

TEST_CASE("gradients are shape congruent") {
  const auto p = init_params({5, 7, 2}, InitScheme::scaled_normal, 1);
  const auto g = backprop(p, Matrix::Ones(3, 5), Matrix::Zero(3, 2), Activation::sigmoid);
  CHECK(same_shape(p, g));
  CHECK_THROWS_AS(backprop(p, Matrix::Ones(3, 5), Matrix::Zero(2, 2), Activation::sigmoid), Error);
}
