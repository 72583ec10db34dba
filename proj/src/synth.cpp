#include "drsl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace drsl {

namespace {

Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> normal(0.0, sd);
  Matrix m(rows, cols);
  for (Index c = 0; c < cols; ++c)
    for (Index r = 0; r < rows; ++r) m(r, c) = normal(rng);
  return m;
}

Matrix orthonormal_columns(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  return qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
}

}  // namespace

std::string_view to_string(Warp w) {
  switch (w) {
    case Warp::identity: return "identity";
    case Warp::tanh_warp: return "tanh_warp";
    case Warp::quadratic_mix: return "quadratic_mix";
  }
  return "?";
}

Warp parse_warp(std::string_view name) {
  if (name == "identity") return Warp::identity;
  if (name == "tanh_warp" || name == "tanh") return Warp::tanh_warp;
  if (name == "quadratic_mix" || name == "quadratic") return Warp::quadratic_mix;
  fail(Errc::BadSpec, "unknown warp '" + std::string(name) + "'");
}

void SynthSpec::validate() const {
  require(subjects >= 2, Errc::BadSpec, "need at least two subjects");
  require(conditions >= 2, Errc::BadSpec, "need at least two conditions");
  require(scans >= 4 * conditions, Errc::BadSpec, "need at least 4 scans per condition");
  require(voxels >= 1, Errc::BadSpec, "need at least one voxel");
  require(tr > 0.0 && snr > 0.0, Errc::BadSpec, "tr and snr must be positive");
  require(block_s > 0.0 && rest_s >= 0.0, Errc::BadSpec, "block length must be positive");
  if (style == SignatureStyle::orthogonal)
    require(voxels >= conditions, Errc::BadSpec, "orthogonal signatures need V_org >= P");
  else
    require(voxels >= conditions + 2 && rho >= 0.0 && rho < 1.0,
            Errc::BadSpec, "correlated signatures need V_org >= P + 2 and 0 <= rho < 1");
}

std::vector<std::string> condition_names(Index n_conditions) {
  std::vector<std::string> names;
  for (Index k = 0; k < n_conditions; ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "cond%02ld", static_cast<long>(k));
    names.emplace_back(buf);
  }
  return names;
}

SignatureMatrix generate_signatures(const SynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(derive_seed(spec.seed, 0x516));
  const Index p = spec.conditions;
  const Index v = spec.voxels;
  Matrix b(p, v);
  if (spec.style == SignatureStyle::orthogonal) {
    b = orthonormal_columns(gaussian(v, p, rng)).transpose();
  } else {
    // Centered orthonormal basis z_0..z_P; b_i = sqrt(rho) z_0 + sqrt(1 - rho) z_i
    // then has pairwise Pearson correlation exactly rho.
    Matrix a(v, p + 2);
    a.col(0).setOnes();
    a.rightCols(p + 1) = gaussian(v, p + 1, rng);
    const Matrix q = orthonormal_columns(a);
    const double shared = std::sqrt(spec.rho);
    const double own = std::sqrt(1.0 - spec.rho);
    for (Index i = 0; i < p; ++i) b.row(i) = (shared * q.col(1) + own * q.col(i + 2)).transpose();
  }
  for (Index i = 0; i < p; ++i) b.row(i).normalize();
  return {std::move(b), condition_names(p)};
}

EventTable generate_events(const SynthSpec& spec) {
  spec.validate();
  const double period = spec.block_s + spec.rest_s;
  const double run = static_cast<double>(spec.scans) * spec.tr;
  const auto per_condition = static_cast<Index>(std::floor(run / (static_cast<double>(spec.conditions) * period)));
  require(per_condition >= 2, Errc::InfeasibleSchedule,
          "run of " + std::to_string(run) + " s fits fewer than two blocks per condition");
  const auto names = condition_names(spec.conditions);
  std::vector<Index> order;
  for (Index k = 0; k < spec.conditions; ++k)
    for (Index r = 0; r < per_condition; ++r) order.push_back(k);
  std::mt19937_64 rng(derive_seed(spec.seed, 0xE7));
  std::shuffle(order.begin(), order.end(), rng);
  EventTable table;
  table.tr = spec.tr;
  table.n_scans = spec.scans;
  for (std::size_t b = 0; b < order.size(); ++b)
    table.events.push_back({static_cast<double>(b) * period, spec.block_s, names[static_cast<std::size_t>(order[b])]});
  return table;
}

SubjectData generate_subject(const SignatureMatrix& b_true, const DesignMatrix& design, const SynthSpec& spec,
                             Index subject_index) {
  require(design.n_conditions() == b_true.n_conditions(), Errc::ShapeMismatch, "design and signatures disagree on P");
  require(design.n_scans() >= 2, Errc::ShapeMismatch, "need at least two scans");
  require(spec.snr > 0.0, Errc::BadSpec, "snr must be positive");
  std::mt19937_64 rng(derive_seed(spec.seed, 0x5B, static_cast<std::uint64_t>(subject_index)));
  const Matrix clean = design.values * b_true.values;
  Vector mean, sd;
  column_moments(clean, mean, sd);

  Matrix noisy = clean;
  if (std::isfinite(spec.snr)) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index c = 0; c < noisy.cols(); ++c) {
      const double noise_sd = sd(c) / spec.snr;
      for (Index r = 0; r < noisy.rows(); ++r) noisy(r, c) += noise_sd * normal(rng);
    }
  }

  Matrix warped;
  switch (spec.warp) {
    case Warp::identity:
      warped = std::move(noisy);
      break;
    case Warp::tanh_warp:
      warped = standardize_columns(noisy).array().tanh();
      break;
    case Warp::quadratic_mix: {
      const Index v = noisy.cols();
      const Matrix z = standardize_columns(noisy);
      const Matrix mixing = gaussian(v, v, rng, 1.0 / std::sqrt(static_cast<double>(v)));
      warped = z + kQuadraticMix * (z * mixing.transpose()).cwiseProduct(z);
      break;
    }
  }
  char id[32];
  std::snprintf(id, sizeof id, "%02ld", static_cast<long>(subject_index + 1));
  return {id, standardize_columns(warped)};
}

SynthDataset generate_dataset(const SynthSpec& spec) {
  spec.validate();
  SynthDataset ds;
  ds.truth = generate_signatures(spec);
  ds.events = generate_events(spec);
  const DesignMatrix design = build_design_matrix(ds.events, canonical_hrf(spec.tr));
  for (Index s = 0; s < spec.subjects; ++s) ds.subjects.push_back({generate_subject(ds.truth, design, spec, s), design});
  return ds;
}

}  // namespace drsl
