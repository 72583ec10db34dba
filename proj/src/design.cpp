#include "drsl/design.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace drsl {

namespace {

double gamma_pdf(double t, double shape, double scale) {
  if (t <= 0.0) return 0.0;
  const double log_pdf =
      (shape - 1.0) * std::log(t) - t / scale - std::lgamma(shape) - shape * std::log(scale);
  return std::exp(log_pdf);
}

}  // namespace

std::vector<std::string> EventTable::conditions() const {
  std::set<std::string> names;
  for (const auto& e : events) names.insert(e.condition);
  return {names.begin(), names.end()};
}

void EventTable::validate() const {
  require(tr > 0.0 && std::isfinite(tr), Errc::BadParams, "tr must be positive");
  require(n_scans >= 1, Errc::BadParams, "n_scans must be >= 1");
  const double run_length = static_cast<double>(n_scans) * tr;
  for (const auto& e : events) {
    require(std::isfinite(e.onset) && e.onset >= 0.0, Errc::BadParams, "negative or non-finite onset");
    require(std::isfinite(e.duration) && e.duration >= 0.0, Errc::BadParams, "negative duration");
    require(e.onset + e.duration <= run_length + 1e-9, Errc::BadParams,
            "event at " + std::to_string(e.onset) + " s runs past the end of the scan");
  }
}

double double_gamma(double t, const HrfParams& p) {
  const double peak = gamma_pdf(t, p.peak_delay / p.peak_disp, p.peak_disp);
  const double under = gamma_pdf(t, p.undershoot_delay / p.undershoot_disp, p.undershoot_disp);
  return peak - p.undershoot_ratio * under;
}

HrfKernel make_hrf(double tr, const HrfParams& params) {
  require(tr > 0.0 && std::isfinite(tr), Errc::BadParams, "tr must be positive");
  require(params.length_s >= tr, Errc::BadParams, "HRF length must cover at least one TR");
  require(params.peak_disp > 0.0 && params.undershoot_disp > 0.0, Errc::BadParams, "dispersions must be positive");
  const auto n = static_cast<Index>(std::ceil(params.length_s / tr - 1e-12));
  HrfKernel k{Vector(n), params, tr};
  for (Index i = 0; i < n; ++i) k.samples(i) = double_gamma(static_cast<double>(i) * tr, params);
  return k;
}

HrfKernel canonical_hrf(double tr, double length_s) {
  HrfParams p;
  p.length_s = length_s;
  return make_hrf(tr, p);
}

Vector onset_signal(const EventTable& events, const std::string& condition) {
  events.validate();
  const auto names = events.conditions();
  require(std::find(names.begin(), names.end(), condition) != names.end(), Errc::UnknownCondition,
          "no events for condition '" + condition + "'");
  Vector s = Vector::Zero(events.n_scans);
  for (const auto& e : events.events) {
    if (e.condition != condition) continue;
    // Samples at t = i * tr with onset <= t < onset + duration; an event that
    // covers no sample point contributes a single impulse at the nearest scan.
    const auto first = static_cast<Index>(std::ceil(e.onset / events.tr - 1e-9));
    const auto stop = static_cast<Index>(std::ceil((e.onset + e.duration) / events.tr - 1e-9));
    if (e.duration > 0.0 && stop > first) {
      for (Index i = first; i < std::min(stop, events.n_scans); ++i) s(i) += 1.0;
    } else {
      const auto i = static_cast<Index>(std::llround(e.onset / events.tr));
      if (i < events.n_scans) s(i) += 1.0;
    }
  }
  return s;
}

Vector build_design_column(const EventTable& events, const std::string& condition, const HrfKernel& hrf) {
  const Vector s = onset_signal(events, condition);
  const Index t_len = s.size();
  const Index k_len = hrf.samples.size();
  Vector out = Vector::Zero(t_len);
  for (Index t = 0; t < t_len; ++t) {
    if (s(t) == 0.0) continue;
    const Index span = std::min(k_len, t_len - t);
    out.segment(t, span) += s(t) * hrf.samples.head(span);
  }
  return out;
}

DesignMatrix build_design_matrix(const EventTable& events, const HrfKernel& hrf) {
  const auto names = events.conditions();
  require(names.size() >= 2, Errc::EmptyDesign, "need at least two conditions");
  DesignMatrix d{names, Matrix(events.n_scans, static_cast<Index>(names.size()))};
  for (Index k = 0; k < d.n_conditions(); ++k) d.values.col(k) = build_design_column(events, names[k], hrf);
  return d;
}

}  // namespace drsl
