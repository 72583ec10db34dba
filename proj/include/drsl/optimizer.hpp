#pragma once
/** \file
    Regularized multi-set regression objective, its gradient with respect to
    the signatures, Adam for the kernel parameters, and the two nested
    training loops (per subject and across subjects).
*/

#include "drsl/data_model.hpp"
#include "drsl/kernel_net.hpp"

#include <optional>
#include <random>
#include <span>
#include <vector>

namespace drsl {

namespace detail {

template <class Scalar, class Derived>
Scalar regularizer_unchecked(const Eigen::MatrixBase<Derived>& b, Scalar alpha) {
  return alpha * b.cwiseAbs().sum() + Scalar(10) * alpha * b.squaredNorm();
}

}  // namespace detail

/// sum_kj alpha |b_kj| + 10 alpha b_kj^2
template <class Derived>
typename Derived::Scalar regularizer(const Eigen::MatrixBase<Derived>& b, typename Derived::Scalar alpha) {
  require(alpha >= 1, Errc::BadAlpha, "alpha must be >= 1");
  return detail::regularizer_unchecked(b, alpha);
}

/// Elementwise sign with sign(0) = 0.
template <class Derived>
auto sign0(const Eigen::MatrixBase<Derived>& b) {
  using S = typename Derived::Scalar;
  return b.unaryExpr([](S v) { return static_cast<S>((S(0) < v) - (v < S(0))); });
}

/// Gradient of the subject objective with respect to B for one batch:
///   alpha sign(B) + 20 alpha B - 2 sum_i d_i^T (f(x_i) - d_i B)
/// `alpha` may be zero, which drops the regularizer.
template <class Scalar, class DB, class DD, class DF>
Mat<Scalar> grad_b_weighted(const Eigen::MatrixBase<DB>& b, const Eigen::MatrixBase<DD>& design_rows,
                            const Eigen::MatrixBase<DF>& f_outputs, Scalar alpha) {
  require(design_rows.cols() == b.rows() && f_outputs.cols() == b.cols() && design_rows.rows() == f_outputs.rows(),
          Errc::ShapeMismatch, "grad_b: inconsistent B / design / output shapes");
  Mat<Scalar> g = alpha * sign0(b) + Scalar(20) * alpha * b;
  if (design_rows.rows() > 0) {
    const Mat<Scalar> residual = f_outputs - design_rows * b;
    g.noalias() -= Scalar(2) * design_rows.transpose() * residual;
  }
  return g;
}

template <class DB, class DD, class DF>
Mat<typename DB::Scalar> grad_b(const Eigen::MatrixBase<DB>& b, const Eigen::MatrixBase<DD>& design_rows,
                                const Eigen::MatrixBase<DF>& f_outputs, typename DB::Scalar alpha) {
  require(alpha >= 1, Errc::BadAlpha, "alpha must be >= 1");
  return grad_b_weighted(b, design_rows, f_outputs, alpha);
}

/// sum_i ||f(x_i) - d_i B||^2 + r(B), with alpha = 0 meaning "no regularizer".
template <class Scalar, class DB, class DD, class DF>
Scalar objective_weighted(const Eigen::MatrixBase<DB>& b, const Eigen::MatrixBase<DD>& design_rows,
                          const Eigen::MatrixBase<DF>& f_outputs, Scalar alpha) {
  require(design_rows.cols() == b.rows() && f_outputs.cols() == b.cols() && design_rows.rows() == f_outputs.rows(),
          Errc::ShapeMismatch, "objective: inconsistent B / design / output shapes");
  return (f_outputs - design_rows * b).squaredNorm() + detail::regularizer_unchecked(b, alpha);
}

template <class DB, class DD, class DF>
typename DB::Scalar objective(const Eigen::MatrixBase<DB>& b, const Eigen::MatrixBase<DD>& design_rows,
                              const Eigen::MatrixBase<DF>& f_outputs, typename DB::Scalar alpha) {
  require(alpha >= 1, Errc::BadAlpha, "alpha must be >= 1");
  return objective_weighted(b, design_rows, f_outputs, alpha);
}

/// Effective regularizer weight for a config (0 when disabled).
inline double effective_alpha(const FitConfig& c) {
  return c.regularization == Regularization::disabled ? 0.0 : c.alpha;
}

/// N distinct indices drawn uniformly without replacement from [0, T).
std::vector<Index> sample_batch(std::mt19937_64& rng, Index n_scans, Index batch_size);

template <class Scalar>
struct BasicAdamState {
  BasicNetworkParameters<Scalar> delta;  // first moment
  BasicNetworkParameters<Scalar> gamma;  // second moment
  long step_count = 0;

  static BasicAdamState zeros_for(const BasicNetworkParameters<Scalar>& params) {
    return {zeros_like(params), zeros_like(params), 0};
  }
};

using AdamState = BasicAdamState<double>;

/// One Adam update of `params` in place.
template <class Scalar>
void adam_step(BasicNetworkParameters<Scalar>& params, BasicAdamState<Scalar>& state,
               const BasicParameterGradients<Scalar>& grads, Scalar eta, const AdamConstants& c,
               AdamDenominator denom = AdamDenominator::plus_epsilon) {
  require(same_shape(params, grads) && same_shape(params, state.delta) && same_shape(params, state.gamma),
          Errc::ShapeMismatch, "adam_step: parameter, gradient and moment shapes differ");
  ++state.step_count;
  const auto k = static_cast<Scalar>(state.step_count);
  const Scalar mu1 = static_cast<Scalar>(c.mu1);
  const Scalar mu2 = static_cast<Scalar>(c.mu2);
  const Scalar eps = static_cast<Scalar>(denom == AdamDenominator::plus_epsilon ? c.epsilon : -c.epsilon);
  const Scalar corr1 = Scalar(1) - std::pow(mu1, k);
  const Scalar corr2 = Scalar(1) - std::pow(mu2, k);

  auto update = [&](auto& theta, auto& delta, auto& gamma, const auto& phi) {
    delta = mu1 * delta + (Scalar(1) - mu1) * phi;
    gamma = mu2 * gamma + (Scalar(1) - mu2) * phi.cwiseAbs2();
    theta.array() -= eta * (delta.array() / corr1) / ((gamma.array() / corr2).sqrt() + eps);
  };
  for (std::size_t m = 0; m < params.layers.size(); ++m) {
    update(params.layers[m].weight, state.delta.layers[m].weight, state.gamma.layers[m].weight,
           grads.layers[m].weight);
    update(params.layers[m].bias, state.delta.layers[m].bias, state.gamma.layers[m].bias, grads.layers[m].bias);
  }
}

/// Which transformation the training loops learn: the multilayer kernel, or
/// f(x) = x (the linear ablation, no network parameters).
enum class KernelMode { deep, identity };

struct SubjectFit {
  SignatureMatrix signatures;
  std::optional<NetworkParameters> params;  // empty for the identity kernel
  std::vector<double> loss_history;         // batch objective after each B step
};

struct GroupFit {
  SignatureMatrix signatures;  // mean of the per-subject signatures
  std::vector<SubjectFit> subjects;
  Activation activation = Activation::sigmoid;
};

/// Responses mapped into the signature space: f(X; theta) for a deep fit, X otherwise.
Matrix map_responses(const SubjectFit& fit, const Matrix& responses, Activation g);

/// Inner loop for one subject. `stream_seed` drives both the parameter
/// initialization and the batch sampler.
SubjectFit fit_subject(const SubjectData& data, const DesignMatrix& design, const SignatureMatrix& b_init,
                       const FitConfig& config, std::uint64_t stream_seed, KernelMode mode = KernelMode::deep,
                       const NetworkParameters* warm_params = nullptr);

SubjectFit fit_subject(const SubjectData& data, const DesignMatrix& design, const SignatureMatrix& b_init,
                       const FitConfig& config);

/// Seed of the RNG stream used for subject `subject_index` in outer iteration `outer`.
std::uint64_t subject_stream_seed(std::uint64_t master, std::size_t subject_index, int outer);

/// Outer loop: B~ ~ N(0,1), then m1 rounds of per-subject fits warm-started
/// from B~ followed by averaging. Subjects within a round run concurrently.
GroupFit fit(std::span<const Subject> datasets, const FitConfig& config, KernelMode mode = KernelMode::deep);

/// Checks that all subjects share the condition list and pass validate_pair.
void check_group(std::span<const Subject> datasets);

}  // namespace drsl
