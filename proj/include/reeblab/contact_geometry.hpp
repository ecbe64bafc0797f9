#pragma once
// Volume of the contact form on ellipsoids and lens quotients, and the
// geometric leading coefficient it feeds. The manifold is
// sum_j a_j |z_j|^2 = 1 in C^{m+1} carrying the restriction of
// sum_j (x_j dy_j - y_j dx_j); a cyclic quotient of order q0 divides every
// invariant integral by q0.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "reeblab/flows.hpp"

namespace reeblab {

struct ContactVolumeResult {
  enum class Method { monte_carlo, analytic_oracle };

  double value = 0.0;
  Method method = Method::monte_carlo;
  double ci_halfwidth = 0.0;  // 95% normal interval; 0 for the oracle
  long long n_samples = 0;
  std::string warning;  // set when the interval cannot be trusted
};

// Pointwise density of form-volume against Euclidean surface measure at an
// ambient point z on the ellipsoid (layout x0,y0,x1,y1,...). Exposed for
// direct checks: on the round sphere (all a_j equal 1) it is 2^m m!.
double contact_density(const LensSpaceParams& params, const double* z);

// Monte Carlo integral over the quotient. Samples are drawn on the covering
// ellipsoid by projecting uniform sphere directions radially; the estimator
// weighs each by density times the projection's surface Jacobian. Reduction
// is pairwise over the per-sample values, so a fixed seed reproduces the
// value bit for bit regardless of how a future sample-parallel split joins
// its shards.
ContactVolumeResult contact_volume(const LensSpaceParams& params,
                                   long long n_samples, std::uint64_t seed);

// Closed form (2 pi)^{m+1} / (q0 prod a_j), reported as the oracle method.
ContactVolumeResult contact_volume_closed_form(const LensSpaceParams& params);

// Independent one-dimensional route for m = 1: integrate the explicit
// 3-form in action-angle coordinates, (2 pi)^2 * 2 * int_0^{1/sqrt(a1)}
// [ r0(r1)^2 r1 + (a1/a0) r1^3 ] dr1, by adaptive quadrature.
double contact_volume_quadrature_m1(double a0, double a1);

// Leading coefficient when the contact structure is compatible with the
// metric: -(m/2) (2 pi)^{-(m+1)} vol.
double leading_term_metric_contact(int m, double vol);

// Pointwise trace density on ambient coordinates. The caller supplies it;
// nothing here differentiates structure tensors on sampled data. It must be
// invariant under the quotient group for the q0 division to be meaningful.
using TraceField = std::function<double(const std::vector<double>&)>;

// Monte Carlo value of -(1/2) (2 pi)^{-(m+1)} (1/m!) times the integral of
// the field against the form volume of the quotient.
double leading_term_general(const TraceField& field,
                            const LensSpaceParams& params, long long n_samples,
                            std::uint64_t seed);

// Constant field making leading_term_general match the metric-contact value
// exactly in expectation: m * m! * vol / contact_volume.
double calibrated_constant_field(int m, double vol, double contact_volume);

}  // namespace reeblab
