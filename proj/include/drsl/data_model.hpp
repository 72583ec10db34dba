#pragma once
/** \file
    Typed containers shared by every stage of the pipeline.

    Matrices follow the "samples in rows" convention: a subject's responses
    are T x V_org (one row per TR), a design is T x P and signatures are
    P x V.
*/

#include "drsl/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace drsl {

struct SubjectData {
  std::string subject_id;
  Matrix responses;  // T x V_org

  Index n_scans() const { return responses.rows(); }
  Index n_voxels() const { return responses.cols(); }
};

struct DesignMatrix {
  std::vector<std::string> conditions;
  Matrix values;  // T x P

  Index n_scans() const { return values.rows(); }
  Index n_conditions() const { return values.cols(); }
};

struct SignatureMatrix {
  Matrix values;  // P x V
  std::vector<std::string> conditions;

  Index n_conditions() const { return values.rows(); }
  Index n_features() const { return values.cols(); }
};

/// Weights and biases of one affine layer, W is (out x in).
template <class Scalar>
struct DenseLayer {
  Mat<Scalar> weight;
  Vec<Scalar> bias;
};

/// Parameters of the multilayer kernel. layer_sizes = [V_org, U2, ..., V];
/// layers[m] maps layer_sizes[m] -> layer_sizes[m + 1].
template <class Scalar>
struct BasicNetworkParameters {
  std::vector<Index> layer_sizes;
  std::vector<DenseLayer<Scalar>> layers;

  Index input_size() const { return layer_sizes.front(); }
  Index output_size() const { return layer_sizes.back(); }
  Index depth() const { return static_cast<Index>(layer_sizes.size()); }  // C

  Index parameter_count() const {
    Index n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }
};

using NetworkParameters = BasicNetworkParameters<double>;

enum class Activation { sigmoid, tanh, relu };
enum class InitScheme { unit_normal, scaled_normal };
/// `disabled` exists for the OLS-equivalence checks; FitConfig::alpha is then ignored.
enum class Regularization { drsl, disabled };
/// plus_epsilon is standard Adam; minus_epsilon reproduces the literal printed update.
enum class AdamDenominator { plus_epsilon, minus_epsilon };

struct AdamConstants {
  double mu1 = 0.9;
  double mu2 = 0.999;
  double epsilon = 1e-8;
};

struct FitConfig {
  double alpha = 10.0;
  double eta = 1e-3;
  int m1 = 10;
  int m2 = 100;
  int batch_size = 50;
  AdamConstants adam;
  /// Hidden and output units, e.g. {1000, 700, 500}. Empty selects
  /// default_units() for the dataset's voxel count.
  std::vector<Index> units;
  Activation activation = Activation::sigmoid;
  InitScheme init = InitScheme::scaled_normal;
  Regularization regularization = Regularization::drsl;
  AdamDenominator adam_denominator = AdamDenominator::plus_epsilon;
  bool warm_start_theta = false;
  std::uint64_t seed = 0;

  /// Throws BadConfig / BadAlpha on out-of-range values.
  void validate() const;
  /// units resolved against V_org, prefixed with V_org.
  std::vector<Index> layer_sizes(Index n_voxels) const;
};

/// [1000, 700, 500] for V_org >= 1000, [700, 500, 200] for 200 <= V_org < 1000,
/// and [700, 500, 200] scaled by V_org / 200 below that so that V <= V_org.
std::vector<Index> default_units(Index n_voxels);

std::string_view to_string(Activation a);
std::string_view to_string(InitScheme s);
Activation parse_activation(std::string_view name);
InitScheme parse_init_scheme(std::string_view name);

void validate_pair(const SubjectData& data, const DesignMatrix& design);

/// Column-wise z-score with the T-1 sample deviation; constant columns become zero.
Matrix standardize_columns(const Matrix& x);
SubjectData standardize_columns(const SubjectData& data);

/// Sample mean and (T-1) standard deviation of every column.
void column_moments(const Matrix& x, Vector& mean, Vector& stddev);

}  // namespace drsl

namespace drsl {

/// One subject's responses paired with its design.
struct Subject {
  SubjectData data;
  DesignMatrix design;
};

}  // namespace drsl
