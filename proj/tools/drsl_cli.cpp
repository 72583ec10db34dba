// drsl: command-line front end for synthetic data generation, fitting,
// evaluation, cross-validation, gradient checks and benchmarks.

#include "drsl/baselines.hpp"
#include "drsl/evaluation.hpp"
#include "drsl/gradcheck.hpp"
#include "drsl/io.hpp"
#include "drsl/synth.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace drsl;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

const std::vector<std::string> kMethods{"drsl", "lrsl", "glm", "lasso"};

/// Fit flags shared by fit / cv / bench / iters. Explicitly given flags
/// override a --config file, which overrides the built-in defaults.
struct FitFlags {
  std::string config_file;
  double alpha = 10.0;
  double eta = 1e-3;
  int m1 = 10;
  int m2 = 100;
  int batch = 50;
  std::vector<long> layers;
  std::string activation = "sigmoid";
  std::string init = "scaled_normal";
  std::uint64_t seed = 0;
  bool warm_theta = false;
  bool no_regularizer = false;
  bool literal_epsilon = false;
  double alpha_lasso = 0.9;
  std::vector<CLI::Option*> opts;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "FitConfig JSON (e.g. a previous config.json)")->check(CLI::ExistingFile);
    opts = {
        app->add_option("--alpha", alpha, "Regularizer scaling factor (>= 1)")->capture_default_str(),
        app->add_option("--eta", eta, "Learning rate")->capture_default_str(),
        app->add_option("--m1", m1, "Outer iterations")->capture_default_str(),
        app->add_option("--m2", m2, "Inner iterations per subject")->capture_default_str(),
        app->add_option("--batch", batch, "Mini-batch size N")->capture_default_str(),
        app->add_option("--layers", layers, "Hidden and output units, e.g. 1000,700,500 (default: by voxel count)")
            ->delimiter(','),
        app->add_option("--activation", activation, "Hidden activation")
            ->check(CLI::IsMember({"sigmoid", "tanh", "relu"}))
            ->capture_default_str(),
        app->add_option("--init", init, "Kernel initialization")
            ->check(CLI::IsMember({"unit_normal", "scaled_normal"}))
            ->capture_default_str(),
        app->add_option("--seed", seed, "Master seed")->capture_default_str(),
        app->add_flag("--warm-start-theta", warm_theta, "Reuse kernel parameters across outer iterations"),
        app->add_flag("--no-regularizer", no_regularizer, "Drop the signature regularizer"),
        app->add_flag("--literal-epsilon", literal_epsilon, "Use sqrt(v) - eps in the Adam denominator"),
    };
    app->add_option("--alpha-lasso", alpha_lasso, "LASSO penalty")->capture_default_str();
  }

  bool given(std::size_t i) const { return opts[i]->count() > 0; }

  MethodOptions resolve() const {
    MethodOptions m;
    FitConfig& c = m.config;
    if (!config_file.empty()) {
      std::ifstream in(config_file);
      try {
        c = fit_config_from_json(nlohmann::json::parse(in));
      } catch (const nlohmann::json::exception& e) {
        fail(Errc::BadConfig, e.what());
      }
    }
    const bool base = config_file.empty();
    if (base || given(0)) c.alpha = alpha;
    if (base || given(1)) c.eta = eta;
    if (base || given(2)) c.m1 = m1;
    if (base || given(3)) c.m2 = m2;
    if (base || given(4)) c.batch_size = batch;
    if (base || given(5)) c.units.assign(layers.begin(), layers.end());
    if (base || given(6)) c.activation = parse_activation(activation);
    if (base || given(7)) c.init = parse_init_scheme(init);
    if (base || given(8)) c.seed = seed;
    if (base || given(9)) c.warm_start_theta = warm_theta;
    if (base || given(10)) c.regularization = no_regularizer ? Regularization::disabled : Regularization::drsl;
    if (base || given(11))
      c.adam_denominator = literal_epsilon ? AdamDenominator::minus_epsilon : AdamDenominator::plus_epsilon;
    c.validate();
    m.alpha_lasso = alpha_lasso;
    return m;
  }
};

void write_json(const fs::path& file, const nlohmann::json& j) {
  std::ofstream out(file);
  require(static_cast<bool>(out), Errc::IoError, "cannot write " + file.string());
  out << j.dump(1) << '\n';
}

double safe_rho(const SignatureMatrix& s) {
  try {
    return between_class_correlation(s);
  } catch (const Error& e) {
    if (e.code() == Errc::ConstantRow) return std::nan("");
    throw;
  }
}

int run_synth(const SynthSpec& spec, const std::string& out) {
  const SynthDataset ds = generate_dataset(spec);
  std::vector<SubjectData> subjects;
  for (const auto& s : ds.subjects) subjects.push_back(s.data);
  write_dataset(out, subjects, std::vector<EventTable>(subjects.size(), ds.events));
  write_matrix_tsv(fs::path(out) / "truth_signatures.tsv", ds.truth.values);
  std::cout << "wrote " << subjects.size() << " subjects to " << out << '\n';
  return 0;
}

int run_fit(const std::string& dataset, const std::string& method_name, const FitFlags& flags, int repeats,
            const std::string& out) {
  const Method method = parse_method(method_name);
  const MethodOptions base = flags.resolve();
  auto t0 = Clock::now();
  const Dataset ds = read_dataset(dataset);
  const double load_ms = ms_since(t0);

  RunResult result;
  result.method = method_name;
  result.config = base.config;
  result.version = library_version();
  GroupFit first;
  double fit_ms = 0.0;
  double eval_ms = 0.0;
  for (int r = 0; r < repeats; ++r) {
    MethodOptions opt = base;
    opt.config.seed = base.config.seed + static_cast<std::uint64_t>(r);
    t0 = Clock::now();
    GroupFit g = fit_group(method, ds.subjects, opt);
    fit_ms += ms_since(t0);
    t0 = Clock::now();
    result.rho.push_back(safe_rho(g.signatures));
    if (r == 0) {
      result.mse_by_iters.emplace_back(static_cast<long>(base.config.m1) * base.config.m2, group_mse(ds.subjects, g));
      first = std::move(g);
    }
    eval_ms += ms_since(t0);
  }
  result.runtime = {{"design-build", load_ms}, {"fit", fit_ms}, {"eval", eval_ms}};

  fs::create_directories(out);
  write_matrix_tsv(fs::path(out) / "signatures.tsv", first.signatures.values);
  write_json(fs::path(out) / "config.json", to_json(base.config));
  nlohmann::json fit_doc = to_json(first);
  fit_doc["method"] = method_name;
  fit_doc["dataset"] = fs::absolute(dataset).string();
  fit_doc["config"] = to_json(base.config);
  fit_doc["version"] = result.version;
  write_json(fs::path(out) / "fit.json", fit_doc);
  write_results({result}, out);
  std::cout << method_name << ": rho=" << format_double(result.rho.front())
            << " mse=" << format_double(result.mse_by_iters.front().second) << '\n';
  return 0;
}

int run_eval(const std::string& fit_output, std::string out) {
  std::ifstream in(fs::path(fit_output) / "fit.json");
  require(static_cast<bool>(in), Errc::MissingFile, (fs::path(fit_output) / "fit.json").string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, e.what());
  }
  const GroupFit g = group_fit_from_json(doc);
  const FitConfig config = fit_config_from_json(doc.at("config"));
  const Dataset ds = read_dataset(doc.at("dataset").get<std::string>());
  RunResult result;
  result.method = doc.at("method").get<std::string>();
  result.config = config;
  result.rho.push_back(safe_rho(g.signatures));
  result.mse_by_iters.emplace_back(static_cast<long>(config.m1) * config.m2, group_mse(ds.subjects, g));
  if (out.empty()) out = fit_output;
  write_results({result}, out);
  std::cout << result.method << ": rho=" << format_double(result.rho.front())
            << " mse=" << format_double(result.mse_by_iters.front().second) << '\n';
  return 0;
}

int run_cv(const std::string& dataset, const std::vector<std::string>& methods, const FitFlags& flags, bool shuffle,
           const std::string& out) {
  const MethodOptions opt = flags.resolve();
  const Dataset ds = read_dataset(dataset);
  std::vector<RunResult> results;
  for (const auto& name : methods) {
    RunResult r;
    r.method = name;
    r.config = opt.config;
    r.version = library_version();
    CvOptions cv;
    cv.shuffle_test_labels = shuffle;
    cv.shuffle_seed = opt.config.seed;
    const auto t0 = Clock::now();
    r.cv = cross_validate(ds.subjects, parse_method(name), opt, cv);
    r.runtime = {{"cv", ms_since(t0)}};
    std::cout << name << ": accuracy " << format_double(r.cv->mean_accuracy) << " +/- "
              << format_double(r.cv->std_accuracy) << '\n';
    results.push_back(std::move(r));
  }
  write_results(results, out);
  return 0;
}

int run_gradcheck(std::uint64_t seed) {
  const auto gb = check_grad_b(seed);
  const auto bp = check_backprop(seed);
  const bool ok_b = gb.max_error < kGradBTolerance;
  const bool ok_p = bp.max_error < kBackpropTolerance;
  std::printf("grad_b   max_rel_error=%.3e over %ld coords (threshold %.0e) %s\n", gb.max_error, gb.coordinates,
              kGradBTolerance, ok_b ? "PASS" : "FAIL");
  std::printf("backprop max_rel_error=%.3e over %ld coords (threshold %.0e) %s\n", bp.max_error, bp.coordinates,
              kBackpropTolerance, ok_p ? "PASS" : "FAIL");
  return ok_b && ok_p ? 0 : 1;
}

int run_bench(const std::string& dataset, const std::vector<std::string>& methods, const FitFlags& flags,
              const std::string& out) {
  const MethodOptions opt = flags.resolve();
  const Dataset ds = read_dataset(dataset);
  std::vector<RunResult> results;
  for (const auto& name : methods) {
    RunResult r;
    r.method = name;
    r.config = opt.config;
    auto t0 = Clock::now();
    std::vector<Subject> subjects = ds.subjects;
    const HrfKernel hrf = canonical_hrf(ds.tr);
    for (std::size_t s = 0; s < subjects.size(); ++s) subjects[s].design = build_design_matrix(ds.events[s], hrf);
    r.runtime.push_back({"design-build", ms_since(t0)});
    t0 = Clock::now();
    const GroupFit g = fit_group(parse_method(name), subjects, opt);
    r.runtime.push_back({"fit", ms_since(t0)});
    t0 = Clock::now();
    safe_rho(g.signatures);
    group_mse(subjects, g);
    r.runtime.push_back({"eval", ms_since(t0)});
    for (const auto& t : r.runtime) std::printf("%-6s %-13s %10.2f ms\n", name.c_str(), t.phase.c_str(), t.ms);
    results.push_back(std::move(r));
  }
  write_results(results, out);
  return 0;
}

int run_iters(const std::string& dataset, const std::string& method_name, const std::vector<long>& schedule,
              const FitFlags& flags, const std::string& out) {
  const MethodOptions base = flags.resolve();
  const Dataset ds = read_dataset(dataset);
  RunResult r;
  r.method = method_name;
  r.config = base.config;
  for (long total : schedule) {
    require(total >= 1, Errc::BadConfig, "schedule entries must be positive");
    MethodOptions opt = base;
    // split into outer x inner with the configured inner length
    const long inner = std::min<long>(std::max(base.config.m2, 1), total);
    opt.config.m2 = static_cast<int>(inner);
    opt.config.m1 = static_cast<int>((total + inner - 1) / inner);
    opt.lasso_iterations = static_cast<int>(total);
    const GroupFit g = fit_group(parse_method(method_name), ds.subjects, opt);
    const double mse = group_mse(ds.subjects, g);
    r.mse_by_iters.emplace_back(static_cast<long>(opt.config.m1) * opt.config.m2, mse);
    std::printf("%ld iterations: mse=%s\n", r.mse_by_iters.back().first, format_double(mse).c_str());
  }
  write_results({r}, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep representational similarity learning: signatures, baselines and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", library_version());

  SynthSpec spec;
  std::string synth_out;
  std::string warp = "identity";
  std::string style = "orthogonal";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with known signatures");
  synth->add_option("--subjects", spec.subjects, "Number of subjects")->capture_default_str();
  synth->add_option("--scans", spec.scans, "Time points per subject (T)")->capture_default_str();
  synth->add_option("--voxels", spec.voxels, "Voxels per subject (V_org)")->capture_default_str();
  synth->add_option("--conditions", spec.conditions, "Stimulus categories (P)")->capture_default_str();
  synth->add_option("--tr", spec.tr, "Repetition time in seconds")->capture_default_str();
  synth->add_option("--snr", spec.snr, "Signal-to-noise ratio as a std (amplitude) ratio")->capture_default_str();
  synth->add_option("--warp", warp, "Response nonlinearity")
      ->check(CLI::IsMember({"identity", "tanh_warp", "quadratic_mix"}))
      ->capture_default_str();
  synth->add_option("--style", style, "Signature style")
      ->check(CLI::IsMember({"orthogonal", "correlated"}))
      ->capture_default_str();
  synth->add_option("--rho", spec.rho, "Pairwise correlation for --style correlated")->capture_default_str();
  synth->add_option("--block", spec.block_s, "Block length in seconds")->capture_default_str();
  synth->add_option("--rest", spec.rest_s, "Rest between blocks in seconds")->capture_default_str();
  synth->add_option("--seed", spec.seed, "Seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();

  std::string dataset;
  std::string method = "drsl";
  std::string out;
  int repeats = 1;
  FitFlags fit_flags;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate group signatures");
  fit_cmd->add_option("--dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  fit_cmd->add_option("--method", method, "Estimator")->check(CLI::IsMember(kMethods))->capture_default_str();
  fit_cmd->add_option("--repeats", repeats, "Seeds seed..seed+n-1 for rho statistics")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fit_cmd->add_option("--out", out, "Output directory")->required();
  fit_flags.attach(fit_cmd);

  std::string fit_output;
  std::string eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Correlation and MSE tables for a fit");
  eval_cmd->add_option("--fit-output", fit_output, "Directory written by `fit`")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--out", eval_out, "Output directory (default: the fit directory)");

  std::vector<std::string> cv_methods{"drsl"};
  bool shuffle = false;
  FitFlags cv_flags;
  auto* cv_cmd = app.add_subcommand("cv", "One-subject-out classification accuracy");
  cv_cmd->add_option("--dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  cv_cmd->add_option("--method", cv_methods, "Estimators (comma separated)")
      ->delimiter(',')
      ->check(CLI::IsMember(kMethods));
  cv_cmd->add_flag("--shuffle-labels", shuffle, "Permute test labels (chance-level null)");
  cv_cmd->add_option("--out", out, "Output directory")->required();
  cv_flags.attach(cv_cmd);

  std::uint64_t grad_seed = 1;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Finite-difference checks of the analytic gradients");
  grad_cmd->add_option("--seed", grad_seed, "Seed")->capture_default_str();

  std::vector<std::string> bench_methods = kMethods;
  FitFlags bench_flags;
  auto* bench_cmd = app.add_subcommand("bench", "Wall-clock per method and phase");
  bench_cmd->add_option("--dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  bench_cmd->add_option("--methods", bench_methods, "Estimators (comma separated)")
      ->delimiter(',')
      ->check(CLI::IsMember(kMethods));
  bench_cmd->add_option("--out", out, "Output directory")->required();
  bench_flags.attach(bench_cmd);

  std::vector<long> schedule{100, 500, 900, 1000, 1500, 2000, 2500, 3000};
  FitFlags iter_flags;
  auto* iters_cmd = app.add_subcommand("iters", "Group MSE against the total iteration budget");
  iters_cmd->add_option("--dataset", dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  iters_cmd->add_option("--method", method, "Estimator")->check(CLI::IsMember(kMethods))->capture_default_str();
  iters_cmd->add_option("--schedule", schedule, "Total iterations, split as ceil(total / m2) x m2")->delimiter(',');
  iters_cmd->add_option("--out", out, "Output directory")->required();
  iter_flags.attach(iters_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code != 0) {
      std::cerr << app.help();
      return 2;
    }
    return 0;
  }

  try {
    if (*synth) {
      spec.warp = parse_warp(warp);
      spec.style = style == "correlated" ? SignatureStyle::correlated : SignatureStyle::orthogonal;
      return run_synth(spec, synth_out);
    }
    if (*fit_cmd) return run_fit(dataset, method, fit_flags, repeats, out);
    if (*eval_cmd) return run_eval(fit_output, eval_out);
    if (*cv_cmd) return run_cv(dataset, cv_methods, cv_flags, shuffle, out);
    if (*grad_cmd) return run_gradcheck(grad_seed);
    if (*bench_cmd) return run_bench(dataset, bench_methods, bench_flags, out);
    if (*iters_cmd) return run_iters(dataset, method, schedule, iter_flags, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
