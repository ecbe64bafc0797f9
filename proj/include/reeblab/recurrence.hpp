#pragma once
// Monte Carlo volume of recurrence sets. A point is recurrent if some time
// grid point t in [T0/2, T] brings the orbit back within eps; the grid step
// is tied to the flow's velocity bound so continuous-time hits of depth
// eps/2 cannot be stepped over.

#include <utility>
#include <vector>

#include "reeblab/budget.hpp"
#include "reeblab/flows.hpp"

namespace reeblab {

struct RecurrenceConfig {
  double T = 1.0;
  double eps = 0.1;
  double dt = 0.0;  // 0 means auto: eps / (2 * velocity_bound)
  long long n_samples = 1000;
  unsigned long long seed = 1;
  int workers = 1;

  // resolved grid step for a given flow
  double resolved_dt(const Flow& flow) const;
  void validate(const Flow& flow, bool sampling = true) const;
};

struct RecurrenceEstimate {
  double fraction = 0.0;  // hits / n_samples
  double ci_low = 0.0, ci_high = 1.0;  // Wilson 95%
  long long hits = 0;
  long long n_samples = 0;
  // projected sets: equals fraction. lifted sets: fraction * (T - T0/2),
  // the product-measure volume in X x R
  double measure = 0.0;
  double T = 0, eps = 0, dt = 0, t_start = 0;
  bool extended = false, lifted = false;
  double wall_seconds = 0.0;
};

std::pair<double, double> wilson_interval(long long hits, long long n);

bool is_recurrent(const Flow& flow, const FlowPoint& x,
                  const RecurrenceConfig& cfg, bool extended = false);

// fraction of sampled points recurrent by time T. extended inflates the
// test radius to eps*(1+slack), slack = 1 + dt*Lip/eps: an upper proxy for
// the eps-neighborhood of the recurrence set (same scaling exponent).
RecurrenceEstimate estimate_volume(const Flow& flow,
                                   const RecurrenceConfig& cfg,
                                   bool extended = false);

// volume of the lifted set in X x [T0/2, T]: samples (x, t) from the
// product measure and tests a single return at that t
RecurrenceEstimate estimate_lifted_volume(const Flow& flow,
                                          const RecurrenceConfig& cfg);

struct ScalingFit {
  double slope = 0.0;       // exponent (log-log) or rate (log-linear)
  double slope_ci_low = 0.0, slope_ci_high = 0.0;
  double intercept = 0.0;
  double residual = 0.0;    // weighted RMS of the fit
  int n_used = 0;
};

// weighted least squares of ln(measure) against ln(T) (power_law) or T
// (exponential rate); weights come from the Wilson interval widths.
// Points with zero hits or ci_high/ci_low >= 3 are dropped; at least 4
// must survive.
ScalingFit scaling_fit(const std::vector<std::pair<double, RecurrenceEstimate>>& series,
                       bool power_law);

}  // namespace reeblab
