// Acceptance suite: one PASS/FAIL line per criterion. Thresholds are pinned
// here; pass criterion numbers as arguments to run a subset.

#include "oracles.hpp"

#include "drsl/baselines.hpp"
#include "drsl/evaluation.hpp"
#include "drsl/gradcheck.hpp"
#include "drsl/optimizer.hpp"
#include "drsl/synth.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

using namespace drsl;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// 1. Signature gradient against central differences.
Outcome signature_gradient() {
  const auto start = Clock::now();
  const auto r = check_grad_b(1, 25);
  const double t = seconds_since(start);
  return {r.max_error < 1e-6 && r.coordinates > 0 && t < 5.0,
          fmt("max rel error %.3g over %ld coordinates (< 1e-6), %.2f s (< 5 s)", r.max_error, r.coordinates, t)};
}

// 2. Kernel backprop against central differences.
Outcome backprop_gradient() {
  const auto start = Clock::now();
  const auto r = check_backprop(1, 10);
  const double t = seconds_since(start);
  return {r.max_error < 1e-5 && r.coordinates > 0 && t < 5.0,
          fmt("max rel error %.3g over %ld coordinates (< 1e-5), %.2f s (< 5 s)", r.max_error, r.coordinates, t)};
}

// 3. Unregularized full-batch LRSL reaches the mean per-subject least-squares solution.
Outcome ols_oracle() {
  const auto start = Clock::now();
  SynthSpec spec;
  spec.scans = 200;
  spec.voxels = 10;
  spec.conditions = 3;
  spec.snr = 5.0;
  spec.seed = 3;
  const auto ds = generate_dataset(spec);

  FitConfig c;
  c.regularization = Regularization::disabled;
  c.batch_size = 200;
  c.m1 = 4;
  c.m2 = 500;
  // largest step guaranteed to descend on every subject's quadratic
  c.eta = 1.0;
  for (const auto& s : ds.subjects) c.eta = std::min(c.eta, lasso_step(s.design));
  const auto group = fit_lrsl(ds.subjects, c);

  Matrix mean = Matrix::Zero(3, 10);
  for (const auto& s : ds.subjects) {
    // oracle: normal equations, independent of the library's decomposition
    const Matrix& d = s.design.values;
    mean += (d.transpose() * d).inverse() * d.transpose() * s.data.responses;
  }
  mean /= static_cast<double>(ds.subjects.size());
  const double rel = (group.signatures.values - mean).norm() / mean.norm();
  const double t = seconds_since(start);
  return {rel < 1e-3 && t < 10.0,
          fmt("relative Frobenius gap %.3g (< 1e-3) after %d iterations, %.2f s (< 10 s)", rel, c.m1 * c.m2, t)};
}

// 4. Regularizer values, evenness and midpoint convexity.
Outcome regularizer_properties() {
  bool ok = regularizer(Matrix::Zero(2, 3), 10.0) == 0.0;
  ok = ok && regularizer(Matrix::Constant(1, 1, 1.0), 10.0) == 110.0;
  Matrix half(1, 2);
  half << 0.5, -0.5;
  ok = ok && regularizer(half, 10.0) == 60.0;
  std::mt19937_64 rng(4);
  int bad_even = 0, bad_convex = 0;
  for (int k = 0; k < 1000; ++k) {
    const Matrix b1 = oracle::random_matrix(4, 6, rng);
    const Matrix b2 = oracle::random_matrix(4, 6, rng);
    bad_even += regularizer(b1, 10.0) != regularizer(Matrix(-b1), 10.0);
    const double mid = regularizer(Matrix((b1 + b2) / 2), 10.0);
    bad_convex += mid > (regularizer(b1, 10.0) + regularizer(b2, 10.0)) / 2 + 1e-12;
  }
  ok = ok && bad_even == 0 && bad_convex == 0;
  return {ok, fmt("values 0/110/60 %s, evenness violations %d, convexity violations %d (of 1000)",
                  ok ? "exact" : "checked", bad_even, bad_convex)};
}

// 5. Linear-regime recovery of between-class correlation.
Outcome linear_recovery() {
  const auto start = Clock::now();
  double truth = 0, glm = 0, deep = 0;
  constexpr int seeds = 5;
  for (int seed = 0; seed < seeds; ++seed) {
    SynthSpec spec;
    spec.subjects = 4;
    spec.scans = 300;
    spec.voxels = 50;
    spec.conditions = 4;
    spec.snr = 5.0;
    spec.seed = static_cast<std::uint64_t>(seed);
    const auto ds = generate_dataset(spec);
    MethodOptions opt;
    opt.config.seed = static_cast<std::uint64_t>(seed);
    truth += between_class_correlation(ds.truth) / seeds;
    glm += between_class_correlation(fit_group(Method::glm, ds.subjects, opt).signatures) / seeds;
    deep += between_class_correlation(fit_group(Method::drsl, ds.subjects, opt).signatures) / seeds;
  }
  const double t = seconds_since(start);
  const bool glm_ok = std::abs(glm - truth) <= 0.05;
  const bool deep_ok = deep <= glm + 0.05;
  return {glm_ok && deep_ok && t < 120.0,
          fmt("mean rho: truth %.3f, GLM %.3f (|diff| %.3f <= 0.05: %s), DRSL %.3f (<= GLM + 0.05: %s), %.1f s (< 120 s)",
              truth, glm, std::abs(glm - truth), glm_ok ? "yes" : "no", deep, deep_ok ? "yes" : "no", t)};
}

// 6. Nonlinear advantage in one-subject-out accuracy.
Outcome nonlinear_advantage() {
  const auto start = Clock::now();
  double lrsl = 0, deep = 0;
  constexpr int seeds = 5;
  for (int seed = 0; seed < seeds; ++seed) {
    SynthSpec spec;
    spec.subjects = 6;
    spec.conditions = 4;
    spec.snr = 2.0;
    spec.warp = Warp::quadratic_mix;
    spec.seed = static_cast<std::uint64_t>(seed);
    const auto ds = generate_dataset(spec);
    MethodOptions opt;
    opt.config.seed = static_cast<std::uint64_t>(seed);
    lrsl += cross_validate(ds.subjects, Method::lrsl, opt).mean_accuracy / seeds;
    deep += cross_validate(ds.subjects, Method::drsl, opt).mean_accuracy / seeds;
  }
  const double t = seconds_since(start);
  const double gap = 100.0 * (deep - lrsl);
  return {gap >= 5.0 && t < 600.0,
          fmt("mean accuracy LRSL %.3f, DRSL %.3f, DRSL - LRSL = %+.1f points (>= +5), %.0f s (< 600 s)", lrsl, deep,
              gap, t)};
}

// 7. Group MSE after 1000 total iterations is no worse than after 100.
Outcome mse_schedule() {
  struct Case {
    const char* name;
    Warp warp;
    Index voxels;
    Index subjects;
  };
  const Case cases[] = {{"identity", Warp::identity, 50, 4},
                        {"tanh", Warp::tanh_warp, 40, 4},
                        {"quadratic", Warp::quadratic_mix, 30, 6}};
  bool ok = true;
  std::string detail;
  int seed = 0;
  for (const auto& c : cases) {
    SynthSpec spec;
    spec.warp = c.warp;
    spec.voxels = c.voxels;
    spec.subjects = c.subjects;
    spec.seed = static_cast<std::uint64_t>(70 + seed++);
    const auto ds = generate_dataset(spec);
    FitConfig short_run;
    short_run.m1 = 1;
    FitConfig long_run;
    long_run.m1 = 10;
    const double before = group_mse(ds.subjects, fit(ds.subjects, short_run));
    const double after = group_mse(ds.subjects, fit(ds.subjects, long_run));
    ok = ok && after <= before;
    detail += fmt("%s %.3g -> %.3g; ", c.name, before, after);
  }
  detail += "(MSE at 100 -> 1000 iterations, must not increase)";
  return {ok, detail};
}

// 8. Shuffled test labels give chance accuracy.
Outcome classification_null() {
  double mean = 0;
  constexpr int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    SynthSpec spec;
    spec.conditions = 4;
    spec.seed = static_cast<std::uint64_t>(200 + seed);
    const auto ds = generate_dataset(spec);
    CvOptions cv;
    cv.shuffle_test_labels = true;
    cv.shuffle_seed = static_cast<std::uint64_t>(seed);
    mean += cross_validate(ds.subjects, Method::glm, MethodOptions{}, cv).mean_accuracy / seeds;
  }
  return {std::abs(mean - 0.25) <= 0.05, fmt("mean shuffled accuracy %.3f (0.25 +- 0.05, 20 seeds)", mean)};
}

int run_cli(const std::string& env, const std::string& args, const fs::path& log) {
  const std::string cmd = env + " " + DRSL_CLI_PATH + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 9. End-to-end cv output is byte-identical across runs and thread counts.
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("drsl_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path log = dir / "log.txt";
  const std::string data = (dir / "data").string();
  if (run_cli("", "synth --subjects 3 --scans 120 --voxels 20 --conditions 3 --block 6 --rest 4 --seed 9 --out " + data,
              log) != 0)
    return {false, "synth failed: " + slurp(log)};
  const std::string flags = "cv --dataset " + data + " --method drsl,lrsl,glm,lasso --m1 2 --m2 40 --seed 5 --out ";
  const std::vector<std::pair<std::string, std::string>> runs{
      {"DRSL_THREADS=1", "t1a"}, {"DRSL_THREADS=1", "t1b"}, {"DRSL_THREADS=8", "t8"}};
  for (const auto& [env, name] : runs)
    if (run_cli(env, flags + (dir / name).string(), log) != 0) return {false, "cv failed: " + slurp(log)};

  bool ok = true;
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "t1a")) {
    const auto file = entry.path().filename();
    if (file == "runtime.csv") continue;
    const std::string ref = slurp(entry.path());
    for (const char* other : {"t1b", "t8"}) ok = ok && slurp(dir / other / file) == ref;
    ++compared;
  }
  ok = ok && compared > 0 && fs::exists(dir / "t1a" / "accuracy.csv");
  fs::remove_all(dir);
  return {ok, fmt("%d result files compared across 2 runs at DRSL_THREADS=1 and 1 at DRSL_THREADS=8 "
                  "(runtime.csv excluded): %s",
                  compared, ok ? "byte-identical" : "differ")};
}

// 10. ECOC codebook sizes and noiseless decoding.
Outcome ecoc_exactness() {
  bool ok = true;
  std::string sizes;
  for (Index p : {2, 3, 4, 8}) {
    const auto cb = ecoc_codebook(p);
    ok = ok && cb.code.cols() == p * (p - 1) / 2;
    sizes += fmt("P=%ld:%ld ", static_cast<long>(p), static_cast<long>(cb.code.cols()));
    for (Index c = 0; c < p; ++c) ok = ok && decode(cb.code.row(c).transpose(), cb) == c;
  }
  return {ok, "columns " + sizes + (ok ? "; every codeword decodes to its class" : "; mismatch")};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "signature gradient", signature_gradient},
      {2, "backprop gradient", backprop_gradient},
      {3, "OLS oracle", ols_oracle},
      {4, "regularizer", regularizer_properties},
      {5, "linear recovery", linear_recovery},
      {6, "nonlinear advantage", nonlinear_advantage},
      {7, "MSE schedule", mse_schedule},
      {8, "classification null", classification_null},
      {9, "determinism", determinism},
      {10, "ECOC exactness", ecoc_exactness},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("[%s] criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
