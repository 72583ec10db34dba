#include "drsl/optimizer.hpp"

#include "drsl/parallel.hpp"

#include <numeric>

namespace drsl {

std::vector<Index> sample_batch(std::mt19937_64& rng, Index n_scans, Index batch_size) {
  require(batch_size >= 1, Errc::BadConfig, "batch size must be >= 1");
  require(batch_size <= n_scans, Errc::BatchTooLarge,
          "batch of " + std::to_string(batch_size) + " from " + std::to_string(n_scans) + " scans");
  std::vector<Index> pool(static_cast<std::size_t>(n_scans));
  std::iota(pool.begin(), pool.end(), Index{0});
  // partial Fisher-Yates
  for (Index i = 0; i < batch_size; ++i) {
    std::uniform_int_distribution<Index> pick(i, n_scans - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(batch_size));
  return pool;
}

Matrix map_responses(const SubjectFit& fit, const Matrix& responses, Activation g) {
  if (!fit.params) return responses;
  return forward(*fit.params, responses, g);
}

std::uint64_t subject_stream_seed(std::uint64_t master, std::size_t subject_index, int outer) {
  return derive_seed(master, 0x5u, subject_index, static_cast<std::uint64_t>(outer));
}

SubjectFit fit_subject(const SubjectData& data, const DesignMatrix& design, const SignatureMatrix& b_init,
                       const FitConfig& config, std::uint64_t stream_seed, KernelMode mode,
                       const NetworkParameters* warm_params) {
  config.validate();
  validate_pair(data, design);
  const Index p = design.n_conditions();
  require(b_init.n_conditions() == p, Errc::ShapeMismatch, "initial signatures need one row per condition");

  SubjectFit out;
  out.signatures = b_init;
  out.signatures.conditions = design.conditions;
  Matrix& b = out.signatures.values;

  NetworkParameters theta;
  AdamState adam;
  if (mode == KernelMode::deep) {
    if (warm_params) {
      theta = *warm_params;
    } else {
      theta = init_params(config.layer_sizes(data.n_voxels()), config.init, derive_seed(stream_seed, 0xA));
    }
    require(theta.input_size() == data.n_voxels(), Errc::ShapeMismatch, "network input does not match voxels");
    require(theta.output_size() == b.cols(), Errc::ShapeMismatch,
            "network output width " + std::to_string(theta.output_size()) + " != signature width " +
                std::to_string(b.cols()));
    adam = AdamState::zeros_for(theta);
  } else {
    require(b.cols() == data.n_voxels(), Errc::ShapeMismatch, "identity kernel needs V == V_org");
  }

  const double alpha = effective_alpha(config);
  const double eta = config.eta;
  std::mt19937_64 rng(derive_seed(stream_seed, 0xB));
  out.loss_history.reserve(static_cast<std::size_t>(config.m2));

  for (int k = 0; k < config.m2; ++k) {
    const auto idx = sample_batch(rng, data.n_scans(), config.batch_size);
    const Matrix xb = data.responses(idx, Eigen::all);
    const Matrix db = design.values(idx, Eigen::all);
    if (mode == KernelMode::deep) {
      const ForwardTrace trace = forward_trace(theta, xb, config.activation);
      const Matrix& f = trace.output();
      b -= eta * grad_b_weighted(b, db, f, alpha);
      out.loss_history.push_back(objective_weighted(b, db, f, alpha));
      // theta is unchanged since the forward pass, so the trace is still current;
      // only the regression targets move with B.
      const Matrix targets = db * b;
      const ParameterGradients grads = backprop(theta, trace, targets, config.activation);
      adam_step(theta, adam, grads, eta, config.adam, config.adam_denominator);
    } else {
      b -= eta * grad_b_weighted(b, db, xb, alpha);
      out.loss_history.push_back(objective_weighted(b, db, xb, alpha));
    }
  }
  if (mode == KernelMode::deep) out.params = std::move(theta);
  return out;
}

SubjectFit fit_subject(const SubjectData& data, const DesignMatrix& design, const SignatureMatrix& b_init,
                       const FitConfig& config) {
  return fit_subject(data, design, b_init, config, subject_stream_seed(config.seed, 0, 0));
}

void check_group(std::span<const Subject> datasets) {
  require(!datasets.empty(), Errc::TooFewSubjects, "no subjects");
  const auto& names = datasets.front().design.conditions;
  for (const auto& s : datasets) {
    validate_pair(s.data, s.design);
    require(s.design.conditions == names, Errc::ConditionMismatch,
            "subject " + s.data.subject_id + " has a different condition set");
  }
}

GroupFit fit(std::span<const Subject> datasets, const FitConfig& config, KernelMode mode) {
  config.validate();
  check_group(datasets);
  const Index p = datasets.front().design.n_conditions();
  const Index v = mode == KernelMode::deep ? config.layer_sizes(datasets.front().data.n_voxels()).back()
                                           : datasets.front().data.n_voxels();
  for (const auto& s : datasets) {
    const Index vs = mode == KernelMode::deep ? config.layer_sizes(s.data.n_voxels()).back() : s.data.n_voxels();
    require(vs == v, Errc::ShapeMismatch, "subjects map to different feature counts");
  }

  GroupFit group;
  group.activation = config.activation;
  group.signatures.conditions = datasets.front().design.conditions;
  {
    std::mt19937_64 rng(derive_seed(config.seed, 0xB7));
    std::normal_distribution<double> normal(0.0, 1.0);
    group.signatures.values.resize(p, v);
    for (Index c = 0; c < v; ++c)
      for (Index r = 0; r < p; ++r) group.signatures.values(r, c) = normal(rng);
  }

  const auto n_subjects = static_cast<Index>(datasets.size());
  for (int outer = 0; outer < config.m1; ++outer) {
    std::vector<SubjectFit> round(datasets.size());
    parallel_for(n_subjects, [&](Index l) {
      const auto ul = static_cast<std::size_t>(l);
      const NetworkParameters* warm = nullptr;
      if (config.warm_start_theta && outer > 0 && group.subjects[ul].params) warm = &*group.subjects[ul].params;
      round[ul] = fit_subject(datasets[ul].data, datasets[ul].design, group.signatures, config,
                              subject_stream_seed(config.seed, ul, outer), mode, warm);
    });
    // fixed summation order keeps the mean bit-identical across thread counts
    Matrix mean = Matrix::Zero(p, v);
    for (const auto& s : round) mean += s.signatures.values;
    group.signatures.values = mean / static_cast<double>(n_subjects);
    group.subjects = std::move(round);
  }
  return group;
}

}  // namespace drsl
