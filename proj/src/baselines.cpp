#include "drsl/baselines.hpp"

#include "drsl/parallel.hpp"

#include <cmath>

namespace drsl {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::drsl: return "drsl";
    case Method::lrsl: return "lrsl";
    case Method::glm: return "glm";
    case Method::lasso: return "lasso";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  if (name == "drsl") return Method::drsl;
  if (name == "lrsl") return Method::lrsl;
  if (name == "glm") return Method::glm;
  if (name == "lasso") return Method::lasso;
  fail(Errc::BadConfig, "unknown method '" + std::string(name) + "'");
}

SignatureMatrix fit_glm(const SubjectData& data, const DesignMatrix& design) {
  validate_pair(data, design);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design.values);
  return {cod.solve(data.responses), design.conditions};
}

double lasso_step(const DesignMatrix& design) {
  Eigen::JacobiSVD<Matrix> svd(design.values);
  const double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  require(s > 0.0, Errc::BadStep, "design matrix is zero");
  return 1.0 / (2.0 * s * s);
}

SignatureMatrix fit_lasso(const SubjectData& data, const DesignMatrix& design, double alpha_lasso, double eta,
                          int iterations) {
  // Only shapes matter here; single-condition problems are legitimate for the solver itself.
  require(design.n_conditions() >= 1 && data.n_voxels() >= 1, Errc::ShapeMismatch, "empty problem");
  require(data.n_scans() == design.n_scans(), Errc::ShapeMismatch, "responses and design differ in scans");
  require(all_finite(data.responses) && all_finite(design.values), Errc::NonFinite, "lasso inputs");
  require(alpha_lasso >= 0.0, Errc::BadParams, "alpha_lasso must be >= 0");
  require(eta > 0.0 && std::isfinite(eta), Errc::BadStep, "step must be positive");
  require(iterations >= 0, Errc::BadParams, "iterations must be >= 0");
  const Matrix& d = design.values;
  const Matrix dtd = d.transpose() * d;
  const Matrix dtx = d.transpose() * data.responses;
  const double thresh = eta * alpha_lasso;
  Matrix b = Matrix::Zero(d.cols(), data.n_voxels());
  for (int it = 0; it < iterations; ++it) {
    const Matrix step = b - eta * 2.0 * (dtd * b - dtx);
    b = step.unaryExpr([thresh](double v) {
      const double m = std::abs(v) - thresh;
      return m > 0.0 ? std::copysign(m, v) : 0.0;
    });
  }
  return {std::move(b), design.conditions};
}

GroupFit fit_lrsl(std::span<const Subject> datasets, const FitConfig& config) {
  return fit(datasets, config, KernelMode::identity);
}

GroupFit fit_group(Method method, std::span<const Subject> datasets, const MethodOptions& options) {
  switch (method) {
    case Method::drsl: return fit(datasets, options.config, KernelMode::deep);
    case Method::lrsl: return fit(datasets, options.config, KernelMode::identity);
    case Method::glm:
    case Method::lasso: break;
  }
  check_group(datasets);
  GroupFit group;
  group.activation = options.config.activation;
  group.subjects.resize(datasets.size());
  const int iterations =
      options.lasso_iterations > 0 ? options.lasso_iterations : options.config.m1 * options.config.m2;
  parallel_for(static_cast<Index>(datasets.size()), [&](Index l) {
    const auto& s = datasets[static_cast<std::size_t>(l)];
    auto& out = group.subjects[static_cast<std::size_t>(l)];
    out.signatures = method == Method::glm
                         ? fit_glm(s.data, s.design)
                         : fit_lasso(s.data, s.design, options.alpha_lasso, lasso_step(s.design), iterations);
  });
  const Index v = group.subjects.front().signatures.n_features();
  for (const auto& s : group.subjects)
    require(s.signatures.n_features() == v, Errc::ShapeMismatch, "subjects have different voxel counts");
  group.signatures.conditions = datasets.front().design.conditions;
  group.signatures.values = Matrix::Zero(datasets.front().design.n_conditions(), v);
  for (const auto& s : group.subjects) group.signatures.values += s.signatures.values;
  group.signatures.values /= static_cast<double>(group.subjects.size());
  return group;
}

}  // namespace drsl
