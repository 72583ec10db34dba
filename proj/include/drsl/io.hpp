#pragma once
/** \file
    On-disk dataset layout, result CSVs and JSON echoes of configurations
    and fitted models.

    A dataset directory holds `manifest.txt` and, per subject,
    `sub-<id>_bold.tsv` (T rows of V_org tab-separated values, no header)
    and `sub-<id>_events.tsv` (header `onset\tduration\tcondition`).
*/

#include "drsl/baselines.hpp"
#include "drsl/design.hpp"
#include "drsl/evaluation.hpp"
#include "drsl/optimizer.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace drsl {

struct Dataset {
  double tr = 2.0;
  Index n_scans = 0;
  std::vector<std::string> conditions;
  std::vector<EventTable> events;  // one per subject, same order as subjects
  std::vector<Subject> subjects;
};

/// Writes manifest, bold and events files. Values use 17 significant digits.
void write_dataset(const std::filesystem::path& dir, const std::vector<SubjectData>& subjects,
                   const std::vector<EventTable>& events);

/// Parses the layout and builds designs with the canonical HRF.
Dataset read_dataset(const std::filesystem::path& dir);

Matrix read_matrix_tsv(const std::filesystem::path& file);
void write_matrix_tsv(const std::filesystem::path& file, const Matrix& m);
EventTable read_events_tsv(const std::filesystem::path& file, double tr, Index n_scans);
void write_events_tsv(const std::filesystem::path& file, const EventTable& events);

struct PhaseTime {
  std::string phase;
  double ms = 0.0;
};

struct RunResult {
  std::string method;
  FitConfig config;
  std::vector<double> rho;                            // one per repeat
  std::vector<std::pair<long, double>> mse_by_iters;  // (total iterations, group MSE)
  std::optional<CvReport> cv;
  std::vector<PhaseTime> runtime;
  std::string version;
};

/// Writes correlation.csv, accuracy.csv, mse.csv and runtime.csv into `dir`
/// for whichever of those tables the results carry.
void write_results(const std::vector<RunResult>& results, const std::filesystem::path& dir);

std::string format_double(double v);
std::string library_version();

nlohmann::json to_json(const FitConfig& c);
FitConfig fit_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GroupFit& fit);
GroupFit group_fit_from_json(const nlohmann::json& j);

}  // namespace drsl
