#pragma once
/** \file
    Design matrices: condition onsets convolved with a hemodynamic response.
*/

#include "drsl/data_model.hpp"

#include <string>
#include <vector>

namespace drsl {

struct Event {
  double onset = 0.0;     // seconds
  double duration = 0.0;  // seconds, 0 for an instantaneous event
  std::string condition;
};

struct EventTable {
  std::vector<Event> events;
  double tr = 2.0;
  Index n_scans = 0;

  /// Sorted unique condition names.
  std::vector<std::string> conditions() const;
  /// Throws BadParams when tr/n_scans are invalid or an event leaves the run.
  void validate() const;
};

/// Double-gamma shape parameters in seconds. Defaults are the canonical
/// 6 s peak / 16 s undershoot form with a 1/6 undershoot ratio.
struct HrfParams {
  double peak_delay = 6.0;
  double undershoot_delay = 16.0;
  double peak_disp = 1.0;
  double undershoot_disp = 1.0;
  double undershoot_ratio = 1.0 / 6.0;
  double length_s = 32.0;
};

struct HrfKernel {
  Vector samples;  // h(0), h(tr), h(2 tr), ...
  HrfParams params;
  double tr = 0.0;
};

/// Continuous double-gamma response at time t (seconds).
double double_gamma(double t, const HrfParams& params = {});

HrfKernel canonical_hrf(double tr, double length_s = 32.0);
HrfKernel make_hrf(double tr, const HrfParams& params);

/// Stimulus signal for one condition at TR resolution, before convolution.
Vector onset_signal(const EventTable& events, const std::string& condition);

Vector build_design_column(const EventTable& events, const std::string& condition, const HrfKernel& hrf);

DesignMatrix build_design_matrix(const EventTable& events, const HrfKernel& hrf);

}  // namespace drsl
