#include "drsl/data_model.hpp"

#include <algorithm>
#include <cmath>

namespace drsl {

void FitConfig::validate() const {
  if (regularization == Regularization::drsl)
    require(alpha >= 1.0 && std::isfinite(alpha), Errc::BadAlpha, "alpha must be >= 1");
  require(eta > 0.0 && std::isfinite(eta), Errc::BadConfig, "eta must be positive");
  require(m1 >= 0 && m2 >= 0, Errc::BadConfig, "iteration counts must be non-negative");
  require(batch_size >= 1, Errc::BadConfig, "batch size must be >= 1");
  require(adam.mu1 > 0.0 && adam.mu1 < 1.0, Errc::BadConfig, "mu1 must lie in (0, 1)");
  require(adam.mu2 > 0.0 && adam.mu2 < 1.0, Errc::BadConfig, "mu2 must lie in (0, 1)");
  require(adam.epsilon > 0.0, Errc::BadConfig, "epsilon must be positive");
  for (Index u : units) require(u >= 1, Errc::BadArchitecture, "layer widths must be >= 1");
}

std::vector<Index> default_units(Index n_voxels) {
  if (n_voxels >= 1000) return {1000, 700, 500};
  if (n_voxels >= 200) return {700, 500, 200};
  const double s = static_cast<double>(std::max<Index>(n_voxels, 1)) / 200.0;
  auto scaled = [s](double u) { return std::max<Index>(1, static_cast<Index>(std::lround(u * s))); };
  return {scaled(700), scaled(500), std::max<Index>(1, n_voxels)};
}

std::vector<Index> FitConfig::layer_sizes(Index n_voxels) const {
  std::vector<Index> sizes{n_voxels};
  const auto u = units.empty() ? default_units(n_voxels) : units;
  sizes.insert(sizes.end(), u.begin(), u.end());
  return sizes;
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "?";
}

std::string_view to_string(InitScheme s) {
  return s == InitScheme::unit_normal ? "unit_normal" : "scaled_normal";
}

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  fail(Errc::BadConfig, "unknown activation '" + std::string(name) + "'");
}

InitScheme parse_init_scheme(std::string_view name) {
  if (name == "unit_normal") return InitScheme::unit_normal;
  if (name == "scaled_normal") return InitScheme::scaled_normal;
  fail(Errc::BadConfig, "unknown init scheme '" + std::string(name) + "'");
}

void validate_pair(const SubjectData& data, const DesignMatrix& design) {
  require(design.n_conditions() >= 2, Errc::EmptyDesign, "design needs at least two conditions");
  require(static_cast<Index>(design.conditions.size()) == design.n_conditions(), Errc::ShapeMismatch,
          "condition names do not match design columns");
  require(data.n_scans() >= 1 && data.n_voxels() >= 1, Errc::ShapeMismatch, "empty response matrix");
  require(data.n_scans() == design.n_scans(), Errc::ShapeMismatch,
          "responses have " + std::to_string(data.n_scans()) + " scans, design has " +
              std::to_string(design.n_scans()));
  require(all_finite(data.responses), Errc::NonFinite, "responses of " + data.subject_id);
  require(all_finite(design.values), Errc::NonFinite, "design of " + data.subject_id);
}

void column_moments(const Matrix& x, Vector& mean, Vector& stddev) {
  const Index t = x.rows();
  require(t >= 2, Errc::TooFewRows, "need at least two rows for sample moments");
  mean = x.colwise().mean().transpose();
  stddev = ((x.rowwise() - mean.transpose()).colwise().squaredNorm() / static_cast<double>(t - 1))
               .cwiseSqrt()
               .transpose();
}

Matrix standardize_columns(const Matrix& x) {
  Vector mean, sd;
  column_moments(x, mean, sd);
  Matrix out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    // relative threshold: a column of equal values can carry rounding noise in sd
    const double scale = std::max(1.0, mean.cwiseAbs()(j));
    if (!(sd(j) > 1e-14 * scale))
      out.col(j).setZero();
    else
      out.col(j) = (x.col(j).array() - mean(j)) / sd(j);
  }
  return out;
}

SubjectData standardize_columns(const SubjectData& data) {
  return {data.subject_id, standardize_columns(data.responses)};
}

}  // namespace drsl
