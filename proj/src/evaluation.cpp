#include "drsl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace drsl {

double pearson_corr(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  require(a.size() == b.size(), Errc::LengthMismatch, "vectors differ in length");
  require(a.size() >= 2, Errc::LengthMismatch, "need at least two entries");
  const Vector ca = a.array() - a.mean();
  const Vector cb = b.array() - b.mean();
  const double na = ca.norm();
  const double nb = cb.norm();
  require(na > 0.0 && nb > 0.0, Errc::ConstantVector, "correlation of a constant vector");
  return std::clamp(ca.dot(cb) / (na * nb), -1.0, 1.0);
}

double between_class_correlation(const SignatureMatrix& signatures) {
  const Matrix& b = signatures.values;
  require(b.rows() >= 2, Errc::EmptyDesign, "need at least two signatures");
  for (Index r = 0; r < b.rows(); ++r) {
    const double spread = b.row(r).maxCoeff() - b.row(r).minCoeff();
    require(spread > 0.0, Errc::ConstantRow, "signature row " + std::to_string(r) + " is constant");
  }
  double rho = 0.0;
  for (Index i = 0; i < b.rows(); ++i)
    for (Index j = i + 1; j < b.rows(); ++j)
      rho = std::max(rho, std::abs(pearson_corr(b.row(i).transpose(), b.row(j).transpose())));
  return rho;
}

double group_mse(std::span<const Matrix> observables, std::span<const Matrix> designs,
                 std::span<const Matrix> signatures) {
  require(observables.size() == designs.size() && designs.size() == signatures.size(), Errc::ShapeMismatch,
          "group_mse needs one design and signature per subject");
  double sse = 0.0;
  double count = 0.0;
  for (std::size_t l = 0; l < observables.size(); ++l) {
    const Matrix& y = observables[l];
    const Matrix& d = designs[l];
    const Matrix& b = signatures[l];
    require(d.rows() == y.rows() && d.cols() == b.rows() && b.cols() == y.cols(), Errc::ShapeMismatch,
            "group_mse: subject " + std::to_string(l) + " has inconsistent shapes");
    sse += (y - d * b).squaredNorm();
    count += static_cast<double>(y.size());
  }
  require(count > 0.0, Errc::ShapeMismatch, "group_mse over no data");
  return sse / count;
}

double group_mse(std::span<const Subject> datasets, const GroupFit& fit) {
  require(datasets.size() == fit.subjects.size(), Errc::ShapeMismatch, "fit and datasets differ in subject count");
  std::vector<Matrix> obs, designs, sigs;
  for (std::size_t l = 0; l < datasets.size(); ++l) {
    obs.push_back(map_responses(fit.subjects[l], datasets[l].data.responses, fit.activation));
    designs.push_back(datasets[l].design.values);
    sigs.push_back(fit.subjects[l].signatures.values);
  }
  return group_mse(obs, designs, sigs);
}

Vector residual_mean_square(const Matrix& observables, const Matrix& design, const Matrix& signatures) {
  require(design.rows() == observables.rows() && design.cols() == signatures.rows() &&
              signatures.cols() == observables.cols(),
          Errc::ShapeMismatch, "residual_scale: inconsistent shapes");
  require(observables.rows() >= 1, Errc::ShapeMismatch, "residual_scale: no rows");
  return (observables - design * signatures).colwise().squaredNorm().transpose() /
         static_cast<double>(observables.rows());
}

Vector residual_scale(const Matrix& observables, const Matrix& design, const Matrix& signatures) {
  return residual_mean_square(observables, design, signatures).cwiseSqrt().cwiseMax(kResidualFloor);
}

std::vector<Hyperplane> build_hyperplanes(const SignatureMatrix& signatures, const Vector& scale,
                                          const Matrix& class_means) {
  const Matrix& b = signatures.values;
  const Index p = b.rows();
  require(p >= 2, Errc::EmptyDesign, "need at least two classes");
  require(scale.size() == b.cols() && class_means.rows() == p && class_means.cols() == b.cols(),
          Errc::ShapeMismatch, "build_hyperplanes: inconsistent shapes");
  require((scale.array() > 0.0).all(), Errc::BadParams, "scales must be positive");
  std::vector<Hyperplane> planes;
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) {
      require(b.row(i) != b.row(j), Errc::DegeneratePair,
              "signatures " + std::to_string(i) + " and " + std::to_string(j) + " are identical");
      Hyperplane h;
      h.i = i;
      h.j = j;
      h.normal = (b.row(i) - b.row(j)).transpose().cwiseQuotient(scale);
      h.offset = -0.5 * (h.normal.dot(class_means.row(i).transpose()) + h.normal.dot(class_means.row(j).transpose()));
      planes.push_back(std::move(h));
    }
  }
  return planes;
}

Hyperplane swapped(const Hyperplane& h) { return {h.j, h.i, -h.normal, -h.offset}; }

EcocCodebook ecoc_codebook(Index n_classes) {
  require(n_classes >= 2, Errc::EmptyDesign, "need at least two classes");
  EcocCodebook cb;
  cb.code = Eigen::MatrixXi::Zero(n_classes, n_classes * (n_classes - 1) / 2);
  Index col = 0;
  for (Index i = 0; i < n_classes; ++i) {
    for (Index j = i + 1; j < n_classes; ++j, ++col) {
      cb.code(i, col) = 1;
      cb.code(j, col) = -1;
      cb.pairs.emplace_back(i, j);
    }
  }
  return cb;
}

Index decode(const Eigen::VectorXi& bits, const EcocCodebook& codebook) {
  require(bits.size() == codebook.code.cols(), Errc::ShapeMismatch, "bit vector does not match codebook");
  Index best = 0;
  int best_distance = std::numeric_limits<int>::max();
  for (Index c = 0; c < codebook.code.rows(); ++c) {
    int distance = 0;
    for (Index k = 0; k < bits.size(); ++k) {
      const int code = codebook.code(c, k);
      if (code != 0 && code != bits(k)) ++distance;
    }
    if (distance < best_distance) {
      best_distance = distance;
      best = c;
    }
  }
  return best;
}

Index predict(const Eigen::Ref<const Vector>& sample, const std::vector<Hyperplane>& hyperplanes,
              const EcocCodebook& codebook) {
  require(static_cast<Index>(hyperplanes.size()) == codebook.code.cols(), Errc::ShapeMismatch,
          "one hyperplane per codebook column required");
  Eigen::VectorXi bits(codebook.code.cols());
  for (Index k = 0; k < bits.size(); ++k) {
    const auto& h = hyperplanes[static_cast<std::size_t>(k)];
    require(h.i == codebook.pairs[static_cast<std::size_t>(k)].first &&
                h.j == codebook.pairs[static_cast<std::size_t>(k)].second,
            Errc::ShapeMismatch, "hyperplanes are not in codebook order");
    bits(k) = h.evaluate(sample) > 0.0 ? 1 : -1;
  }
  return decode(bits, codebook);
}

std::vector<Index> dominant_rows(const DesignMatrix& design, std::vector<Index>& labels) {
  const Matrix& d = design.values;
  const Vector col_max = d.colwise().maxCoeff().transpose();
  std::vector<Index> rows;
  labels.clear();
  for (Index t = 0; t < d.rows(); ++t) {
    Index arg = 0;
    const double top = d.row(t).maxCoeff(&arg);
    if (!(top > 0.5 * col_max(arg)) || !(col_max(arg) > 0.0)) continue;
    bool unique = true;
    for (Index k = 0; k < d.cols(); ++k)
      if (k != arg && d(t, k) == top) unique = false;
    if (!unique) continue;
    rows.push_back(t);
    labels.push_back(arg);
  }
  return rows;
}

NetworkParameters adapt_test_subject(const SubjectData& test_data, const DesignMatrix& test_design,
                                     const SignatureMatrix& frozen, const FitConfig& config,
                                     std::uint64_t stream_seed, std::vector<double>* loss_history) {
  config.validate();
  validate_pair(test_data, test_design);
  require(frozen.n_conditions() == test_design.n_conditions(), Errc::ConditionMismatch,
          "signatures and test design disagree on conditions");
  NetworkParameters theta =
      init_params(config.layer_sizes(test_data.n_voxels()), config.init, derive_seed(stream_seed, 0xA));
  require(theta.output_size() == frozen.n_features(), Errc::ShapeMismatch, "network output != signature width");
  AdamState adam = AdamState::zeros_for(theta);
  std::mt19937_64 rng(derive_seed(stream_seed, 0xB));
  const long iterations = static_cast<long>(config.m1) * config.m2;
  if (loss_history) loss_history->clear();
  for (long k = 0; k < iterations; ++k) {
    const auto idx = sample_batch(rng, test_data.n_scans(), config.batch_size);
    const Matrix xb = test_data.responses(idx, Eigen::all);
    const Matrix targets = test_design.values(idx, Eigen::all) * frozen.values;
    const ForwardTrace trace = forward_trace(theta, xb, config.activation);
    if (loss_history) loss_history->push_back((trace.output() - targets).squaredNorm());
    adam_step(theta, adam, backprop(theta, trace, targets, config.activation), config.eta, config.adam,
              config.adam_denominator);
  }
  return theta;
}

namespace {

void accumulate_class_means(const Matrix& features, const DesignMatrix& design, Matrix& sums, Eigen::VectorXd& counts) {
  std::vector<Index> labels;
  const auto rows = dominant_rows(design, labels);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    sums.row(labels[r]) += features.row(rows[r]);
    counts(labels[r]) += 1.0;
  }
}

}  // namespace

CvReport cross_validate(std::span<const Subject> datasets, Method method, const MethodOptions& options,
                        const CvOptions& cv) {
  require(datasets.size() >= 2, Errc::TooFewSubjects, "one-subject-out needs at least two subjects");
  check_group(datasets);
  const Index p = datasets.front().design.n_conditions();
  const EcocCodebook codebook = ecoc_codebook(p);
  CvReport report;

  for (std::size_t fold = 0; fold < datasets.size(); ++fold) {
    std::vector<Subject> training;
    std::vector<std::string> training_ids;
    for (std::size_t l = 0; l < datasets.size(); ++l) {
      if (l == fold) continue;
      training.push_back(datasets[l]);
      training_ids.push_back(datasets[l].data.subject_id);
    }
    if (cv.audit) cv.audit(fold, training_ids);

    MethodOptions fold_options = options;
    fold_options.config.seed = derive_seed(options.config.seed, 0xF0, fold);
    const GroupFit group = fit_group(method, training, fold_options);
    const Index v = group.signatures.n_features();

    Matrix sums = Matrix::Zero(p, v);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(p);
    Vector mean_square = Vector::Zero(v);
    for (std::size_t l = 0; l < training.size(); ++l) {
      const Matrix features = map_responses(group.subjects[l], training[l].data.responses, group.activation);
      accumulate_class_means(features, training[l].design, sums, counts);
      mean_square += residual_mean_square(features, training[l].design.values, group.signatures.values);
    }
    const Vector scale = (mean_square / static_cast<double>(training.size())).cwiseSqrt().cwiseMax(kResidualFloor);
    Matrix class_means = group.signatures.values;
    for (Index c = 0; c < p; ++c)
      if (counts(c) > 0.0) class_means.row(c) = sums.row(c) / counts(c);
    const auto planes = build_hyperplanes(group.signatures, scale, class_means);

    const Subject& test = datasets[fold];
    Matrix test_features;
    if (method == Method::drsl) {
      const auto theta = adapt_test_subject(test.data, test.design, group.signatures, fold_options.config,
                                            derive_seed(fold_options.config.seed, 0x7E57));
      test_features = forward(theta, test.data.responses, fold_options.config.activation);
    } else {
      test_features = test.data.responses;
    }

    std::vector<Index> labels;
    const auto rows = dominant_rows(test.design, labels);
    if (cv.shuffle_test_labels) {
      std::mt19937_64 rng(derive_seed(cv.shuffle_seed, 0x5F, fold));
      std::shuffle(labels.begin(), labels.end(), rng);
    }
    FoldResult result;
    result.subject_id = test.data.subject_id;
    result.confusion = Eigen::MatrixXi::Zero(p, p);
    Index correct = 0;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const Index guess = predict(test_features.row(rows[r]).transpose(), planes, codebook);
      result.confusion(labels[r], guess) += 1;
      if (guess == labels[r]) ++correct;
    }
    result.n_samples = static_cast<Index>(rows.size());
    result.accuracy = rows.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(rows.size());
    report.folds.push_back(std::move(result));
  }

  const double n = static_cast<double>(report.folds.size());
  for (const auto& f : report.folds) report.mean_accuracy += f.accuracy / n;
  double ss = 0.0;
  for (const auto& f : report.folds) ss += (f.accuracy - report.mean_accuracy) * (f.accuracy - report.mean_accuracy);
  report.std_accuracy = std::sqrt(ss / (n - 1.0));
  return report;
}

}  // namespace drsl
