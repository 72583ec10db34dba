#pragma once
// Test-only reference computations. Everything here is written with plain
// loops so it shares no code path with the Eigen expressions under test.

#include "drsl/core.hpp"
#include "drsl/data_model.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

using drsl::Index;
using drsl::Matrix;
using drsl::Vector;

inline Matrix random_matrix(Index r, Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = n(rng);
  return m;
}

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline std::vector<double> row(const Matrix& m, Index r) {
  std::vector<double> out;
  for (Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

inline std::vector<double> col(const Matrix& m, Index c) {
  std::vector<double> out;
  for (Index r = 0; r < m.rows(); ++r) out.push_back(m(r, c));
  return out;
}

/// Canonical double gamma written with tgamma/pow directly.
inline double hrf(double t) {
  if (t <= 0) return 0.0;
  auto g = [t](double k) { return std::pow(t, k - 1) * std::exp(-t) / std::tgamma(k); };
  return g(6.0) - g(16.0) / 6.0;
}

/// out[t] = sum_k s[t - k] h[k], truncated to s.size()
inline std::vector<double> convolve(const std::vector<double>& s, const std::vector<double>& h) {
  std::vector<double> out(s.size(), 0.0);
  for (std::size_t t = 0; t < s.size(); ++t)
    for (std::size_t k = 0; k < h.size() && k <= t; ++k) out[t] += s[t - k] * h[k];
  return out;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Per-neuron forward pass of an MLP with a linear last layer.
inline std::vector<double> mlp(const drsl::NetworkParameters& p, const std::vector<double>& x,
                               const std::function<double(double)>& g) {
  std::vector<double> h = x;
  for (std::size_t m = 0; m < p.layers.size(); ++m) {
    const auto& l = p.layers[m];
    std::vector<double> next(static_cast<std::size_t>(l.weight.rows()));
    for (Index r = 0; r < l.weight.rows(); ++r) {
      double z = l.bias(r);
      for (Index c = 0; c < l.weight.cols(); ++c) z += l.weight(r, c) * h[static_cast<std::size_t>(c)];
      next[static_cast<std::size_t>(r)] = m + 1 == p.layers.size() ? z : g(z);
    }
    h = std::move(next);
  }
  return h;
}

/// sum_i ||f_i - d_i B||^2 + sum alpha |b| + 10 alpha b^2 by loops
inline double objective(const Matrix& b, const Matrix& d, const Matrix& f, double alpha) {
  double total = 0;
  for (Index i = 0; i < d.rows(); ++i)
    for (Index j = 0; j < b.cols(); ++j) {
      double pred = 0;
      for (Index k = 0; k < b.rows(); ++k) pred += d(i, k) * b(k, j);
      total += (f(i, j) - pred) * (f(i, j) - pred);
    }
  for (Index k = 0; k < b.rows(); ++k)
    for (Index j = 0; j < b.cols(); ++j) total += alpha * std::abs(b(k, j)) + 10 * alpha * b(k, j) * b(k, j);
  return total;
}

/// Central difference of `fn` with respect to `slot`.
inline double central_difference(double& slot, const std::function<double()>& fn, double step = 1e-5) {
  const double keep = slot;
  slot = keep + step;
  const double up = fn();
  slot = keep - step;
  const double down = fn();
  slot = keep;
  return (up - down) / (2 * step);
}

inline double rel_error(double analytic, double fd) {
  return std::abs(analytic - fd) / std::max(1.0, std::abs(fd));
}

}  // namespace oracle
