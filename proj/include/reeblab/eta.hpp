#pragma once
// Eta invariant evaluation from eigenvalue streams: the erfc heat tail,
// Hurwitz-zeta continuation for arithmetic progressions, the pluggable
// small-time correction, and remainder scaling experiments on planted
// stream families.

#include <functional>
#include <vector>

#include "reeblab/spectral_model.hpp"

namespace reeblab {

struct EtaResult {
  enum class Method { erfc_tail, zeta_hurwitz, split };
  double value = 0.0;
  Method method = Method::erfc_tail;
  double cutoff = 0.0;
  double tail_bound = 0.0;   // density * exp(-cutoff^2) truncation estimate
  long long zero_modes = 0;  // null eigenvalues, kept out of the signed sum
  bool small_t_included = false;
  // reduced invariant (k + eta)/2
  double reduced() const {
    return (static_cast<double>(zero_modes) + value) / 2.0;
  }
};

// E(x) = sign(x) erfc(|x|) with sign(0) = 0
double sign_erfc(double lambda);
double erfc_tail_estimate(const EigenvalueStream& stream);

// heat tail sum_j mult_j E(lambda_j); terms grouped by |lambda| with integer
// net coefficients so multiset negation flips the value bit-exactly
EtaResult eta_erfc(const EigenvalueStream& stream);

// Euler-Maclaurin continuation, valid away from the pole at s = 1; exact
// closed forms at s = 0 fall out of the same formula
double hurwitz_zeta(double s, double a);

// eta(0) of the progression {n + a}: zeta(s,a) - zeta(s,1-a) at s = 0,
// i.e. 1 - 2a; the cutoff feeds the partial-sum cross-check diagnostics
EtaResult eta_zeta_progression(double a, double cutoff);
// partial sum sign(lambda)|lambda|^{-s} over |n + a| <= cutoff
double progression_partial_eta(double a, double s, double cutoff);

// small-time heat contribution, added to the erfc tail when available
using SmallTProvider = std::function<double(const EigenvalueStream&)>;
// analytic provider for the progression {scale (n + a)}: the theta-function
// transform gives (2/pi) sum_k sin(2 pi k a) exp(-(pi k / scale)^2) / k per
// multiplicity unit
SmallTProvider progression_small_t(double a, double scale = 1.0);

EtaResult eta_full_from_stream(const EigenvalueStream& stream,
                               const SmallTProvider& small_t = nullptr);

EigenvalueStream negated_stream(const EigenvalueStream& stream);
EigenvalueStream scaled_stream(const EigenvalueStream& stream, double c);

struct StreamFamilyPoint {
  EigenvalueStream stream;
  SmallTProvider small_t;
};
using StreamFamily = std::function<StreamFamilyPoint(double)>;

// progression family with multiplicity round(h^{-m}) arranged so that
// h^m eta(h) = leading + remainder(h)
StreamFamily planted_progression_family(int m, double leading,
                                        std::function<double(double)> remainder,
                                        double cutoff = 40.0);

struct RemainderFit {
  std::vector<double> h_values;
  std::vector<double> remainders;  // signed R(h) = h^m eta - leading
  double amplitude = 0.0;          // max |R|
  bool zero_remainder = false;
  // ln|R| = c + e ln h
  double power_exponent = 0.0;
  double power_log_constant = 0.0;
  double power_rss = 0.0;
  // ln|R| = c - e ln|ln h|
  double log_exponent = 0.0;
  double log_log_constant = 0.0;
  double log_rss = 0.0;
  bool prefers_log = false;
};
RemainderFit remainder_experiment(const StreamFamily& family,
                                  const std::vector<double>& h_values, int m,
                                  double leading);

}  // namespace reeblab
