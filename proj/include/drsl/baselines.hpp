#pragma once
/** \file
    Linear comparison methods: per-subject least squares (classical GLM RSA),
    LASSO, and the linear-kernel ablation of the deep model.
*/

#include "drsl/data_model.hpp"
#include "drsl/optimizer.hpp"

#include <span>
#include <string_view>

namespace drsl {

enum class BaselineKind { glm_rsa, lasso, lrsl };

/// Every signature estimator the pipeline can run.
enum class Method { drsl, lrsl, glm, lasso };

std::string_view to_string(Method m);
Method parse_method(std::string_view name);

/// Minimum-norm least squares B = pinv(D) X.
SignatureMatrix fit_glm(const SubjectData& data, const DesignMatrix& design);

/// Proximal gradient (ISTA) on ||X - D B||_F^2 + alpha_lasso sum|b|.
SignatureMatrix fit_lasso(const SubjectData& data, const DesignMatrix& design, double alpha_lasso, double eta,
                          int iterations);

/// Largest step for which the proximal iteration is guaranteed to descend: 1 / (2 ||D||_2^2).
double lasso_step(const DesignMatrix& design);

/// Outer/inner training loops with f(x) = x.
GroupFit fit_lrsl(std::span<const Subject> datasets, const FitConfig& config);

struct MethodOptions {
  FitConfig config;
  double alpha_lasso = 0.9;
  /// 0 selects config.m1 * config.m2.
  int lasso_iterations = 0;
};

/// Group signatures for any method; per-subject closed-form fits are averaged.
GroupFit fit_group(Method method, std::span<const Subject> datasets, const MethodOptions& options);

}  // namespace drsl
