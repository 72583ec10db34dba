#pragma once
/** \file
    Synthetic multi-subject block-design datasets with known signatures.
*/

#include "drsl/data_model.hpp"
#include "drsl/design.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace drsl {

enum class Warp { identity, tanh_warp, quadratic_mix };
enum class SignatureStyle { orthogonal, correlated };

std::string_view to_string(Warp w);
Warp parse_warp(std::string_view name);

struct SynthSpec {
  Index subjects = 4;
  Index scans = 200;  // T
  Index voxels = 50;  // V_org
  Index conditions = 4;
  double tr = 2.0;
  /// Ratio of clean-signal std to noise std, per voxel.
  double snr = 2.0;
  Warp warp = Warp::identity;
  SignatureStyle style = SignatureStyle::orthogonal;
  double rho = 0.0;  // pairwise correlation for SignatureStyle::correlated
  double block_s = 10.0;
  double rest_s = 10.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Quadratic mixing strength of Warp::quadratic_mix.
inline constexpr double kQuadraticMix = 0.3;

std::vector<std::string> condition_names(Index n_conditions);

/// Ground truth B (P x V_org), unit-norm rows.
SignatureMatrix generate_signatures(const SynthSpec& spec);

/// Shuffled blocks, floor(T tr / (P (block + rest))) per condition.
EventTable generate_events(const SynthSpec& spec);

/// clean = D B, plus per-voxel Gaussian noise at the requested SNR, then the
/// warp and a final column standardization.
SubjectData generate_subject(const SignatureMatrix& b_true, const DesignMatrix& design, const SynthSpec& spec,
                             Index subject_index);

struct SynthDataset {
  SignatureMatrix truth;
  EventTable events;
  std::vector<Subject> subjects;
};

SynthDataset generate_dataset(const SynthSpec& spec);

}  // namespace drsl
