#pragma once
/** \file
    Evaluation protocols: between-class correlation of signatures, group MSE,
    and signature-based pairwise hyperplanes decoded through an exhaustive
    ECOC codebook under one-subject-out cross-validation.
*/

#include "drsl/baselines.hpp"
#include "drsl/data_model.hpp"
#include "drsl/optimizer.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace drsl {

/// Sample Pearson correlation. Throws LengthMismatch / ConstantVector.
double pearson_corr(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

/// max_{i<j} |corr(b_i, b_j)| over signature rows; lower means more distinct.
double between_class_correlation(const SignatureMatrix& signatures);

/// (1 / sum T*V) * sum_l ||Y_l - D_l B_l||_F^2 where Y_l is the observable
/// the model regresses on (raw responses, or kernel outputs for a deep fit).
double group_mse(std::span<const Matrix> observables, std::span<const Matrix> designs,
                 std::span<const Matrix> signatures);

/// group_mse for a fitted model, mapping each subject through its own kernel.
double group_mse(std::span<const Subject> datasets, const GroupFit& fit);

/// Per-feature mean squared residual of Y - D B (no floor).
Vector residual_mean_square(const Matrix& observables, const Matrix& design, const Matrix& signatures);

/// Per-feature RMS residual, floored at 1e-8.
Vector residual_scale(const Matrix& observables, const Matrix& design, const Matrix& signatures);

inline constexpr double kResidualFloor = 1e-8;

struct Hyperplane {
  Index i = 0;
  Index j = 0;
  Vector normal;
  double offset = 0.0;

  /// Positive side votes for class i.
  double evaluate(const Eigen::Ref<const Vector>& x) const { return normal.dot(x) + offset; }
};

/// a_ij = (b_i - b_j) / scale (elementwise), z_ij = -(a_ij . m_i + a_ij . m_j) / 2
/// where m_c are the class means of the training projections (P x V).
std::vector<Hyperplane> build_hyperplanes(const SignatureMatrix& signatures, const Vector& scale,
                                          const Matrix& class_means);

/// Hyperplane for the swapped pair (j, i).
Hyperplane swapped(const Hyperplane& h);

struct EcocCodebook {
  /// P x P(P-1)/2 over {+1, -1, 0}; column c belongs to pairs[c] = (i, j), i < j.
  Eigen::MatrixXi code;
  std::vector<std::pair<Index, Index>> pairs;
};

EcocCodebook ecoc_codebook(Index n_classes);

/// Class with the smallest Hamming distance to `bits` counted over the
/// nonzero entries of its codeword; ties go to the lowest index.
Index decode(const Eigen::VectorXi& bits, const EcocCodebook& codebook);

Index predict(const Eigen::Ref<const Vector>& sample, const std::vector<Hyperplane>& hyperplanes,
              const EcocCodebook& codebook);

/// Rows whose design row has a unique maximum above half of that column's
/// maximum. `labels` receives the argmax condition of each selected row.
std::vector<Index> dominant_rows(const DesignMatrix& design, std::vector<Index>& labels);

/// Fits a fresh kernel on a held-out subject with the signatures frozen,
/// running only the parameter half of the inner loop for m1 * m2 iterations.
NetworkParameters adapt_test_subject(const SubjectData& test_data, const DesignMatrix& test_design,
                                     const SignatureMatrix& frozen, const FitConfig& config,
                                     std::uint64_t stream_seed, std::vector<double>* loss_history = nullptr);

struct FoldResult {
  std::string subject_id;
  double accuracy = 0.0;
  Index n_samples = 0;
  Eigen::MatrixXi confusion;  // truth (rows) x prediction (cols)
};

struct CvReport {
  std::vector<FoldResult> folds;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
};

struct CvOptions {
  /// Permute test labels before scoring; gives the chance-level null.
  bool shuffle_test_labels = false;
  std::uint64_t shuffle_seed = 0;
  /// Called with the subject ids handed to each training fit.
  std::function<void(std::size_t fold, const std::vector<std::string>& training_ids)> audit;
};

CvReport cross_validate(std::span<const Subject> datasets, Method method, const MethodOptions& options,
                        const CvOptions& cv = {});

}  // namespace drsl
