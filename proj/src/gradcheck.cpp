#include "drsl/gradcheck.hpp"

#include "drsl/kernel_net.hpp"
#include "drsl/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace drsl {

namespace {

constexpr double kStep = 1e-5;

Matrix normal_matrix(Index r, Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = n(rng);
  return m;
}

double rel_error(double analytic, double fd) { return std::abs(analytic - fd) / std::max(1.0, std::abs(fd)); }

}  // namespace

GradcheckResult check_grad_b(std::uint64_t seed, int instances) {
  GradcheckResult res;
  std::mt19937_64 rng(seed);
  const double alpha = 10.0;
  for (int it = 0; it < instances; ++it) {
    const Matrix d = normal_matrix(20, 3, rng);
    const Matrix f = normal_matrix(20, 6, rng);
    Matrix b = normal_matrix(3, 6, rng);
    const auto idx = sample_batch(rng, 20, 10);
    const Matrix db = d(idx, Eigen::all);
    const Matrix fb = f(idx, Eigen::all);
    const Matrix g = grad_b(b, db, fb, alpha);
    for (Index j = 0; j < b.cols(); ++j) {
      for (Index i = 0; i < b.rows(); ++i) {
        if (std::abs(b(i, j)) <= 1e-3) continue;
        const double keep = b(i, j);
        b(i, j) = keep + kStep;
        const double up = objective(b, db, fb, alpha);
        b(i, j) = keep - kStep;
        const double down = objective(b, db, fb, alpha);
        b(i, j) = keep;
        res.max_error = std::max(res.max_error, rel_error(g(i, j), (up - down) / (2 * kStep)));
        ++res.coordinates;
      }
    }
  }
  return res;
}

GradcheckResult check_backprop(std::uint64_t seed, int instances) {
  GradcheckResult res;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> width(1, 8);
  for (int it = 0; it < instances; ++it) {
    const Activation g = it % 2 == 0 ? Activation::sigmoid : Activation::tanh;
    std::vector<Index> sizes{std::min<Index>(width(rng), 8), std::min<Index>(width(rng), 6),
                             std::min<Index>(width(rng), 5), std::min<Index>(width(rng), 4)};
    auto params = init_params(sizes, InitScheme::unit_normal, rng());
    const Matrix x = normal_matrix(5, sizes.front(), rng);
    const Matrix y = normal_matrix(5, sizes.back(), rng);
    const auto grads = backprop(params, x, y, g);
    auto probe = [&](double& slot, double analytic) {
      const double keep = slot;
      slot = keep + kStep;
      const double up = kernel_loss(params, x, y, g);
      slot = keep - kStep;
      const double down = kernel_loss(params, x, y, g);
      slot = keep;
      res.max_error = std::max(res.max_error, rel_error(analytic, (up - down) / (2 * kStep)));
      ++res.coordinates;
    };
    for (std::size_t m = 0; m < params.layers.size(); ++m) {
      auto& layer = params.layers[m];
      for (Index i = 0; i < layer.weight.size(); ++i)
        probe(layer.weight.data()[i], grads.layers[m].weight.data()[i]);
      for (Index i = 0; i < layer.bias.size(); ++i) probe(layer.bias(i), grads.layers[m].bias(i));
    }
  }
  return res;
}

}  // namespace drsl
