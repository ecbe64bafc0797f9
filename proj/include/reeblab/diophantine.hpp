#pragma once
// Irrationality exponents. mu comes from continued-fraction denominator
// growth at several hundred decimal digits; nu (simultaneous, along a line
// in the torus) comes from record near-returns of t -> dist(t a, Z^n).

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace reeblab {

using BigFloat = boost::multiprecision::number<
    boost::multiprecision::cpp_bin_float<500>>;
using BigInt = boost::multiprecision::cpp_int;

struct PrecisionExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A real number presented as "give me the value, good to `digits` decimal
// digits". max_digits caps what the evaluator can honestly deliver.
struct RealEvaluator {
  std::function<BigFloat(int digits)> eval;
  int max_digits = 480;
  std::string label;
};

RealEvaluator evaluator_sqrt(long long n);          // sqrt of a non-square
RealEvaluator evaluator_golden();
RealEvaluator evaluator_rational(long long p, long long q);
// sum_{k=1..terms} 10^{-k!}; terms <= 5 fits the working precision
RealEvaluator evaluator_liouville(int terms);
RealEvaluator evaluator_decimal(const std::string& text);

struct ContinuedFraction {
  std::vector<BigInt> quotients;
  std::vector<BigInt> p, q;   // convergents p_k / q_k
  bool terminated = false;    // exact rational detected
  bool precision_limited = false;  // stopped early, allow_partial mode
  int digits_used = 0;
};

// Expands `depth` partial quotients. Throws PrecisionExhausted if the
// denominators outgrow the evaluator's digit budget, unless allow_partial
// is set, in which case the expansion stops there and is flagged.
ContinuedFraction cf_expand(const RealEvaluator& ev, int depth,
                            bool allow_partial = false);

struct MuEstimate {
  double mu = 1.0;
  bool exact_rational = false;
  int window_start = 0;            // first ratio index used
  std::vector<double> ratios;      // ln q_{k+1} / ln q_k
};

// mu = 1 + max over the trailing 60% of the denominator growth ratios;
// exactly 1 for terminating (rational) expansions.
MuEstimate estimate_mu(const ContinuedFraction& cf);

struct NuConfig {
  double t_min = 1.0;
  double t_max = 1e4;
  double coarse_dt = 0.1;
  double fine_dt = 1e-3;
  int polish_iters = 40;
  double rational_cutoff = 1e-9;   // record below this => rational direction
  double window_fraction = 0.4;    // records before this index quantile are
                                   // treated as pre-asymptotic
};

struct NuEstimate {
  double nu = 1.0;
  bool rational_direction = false;
  double fit_slope = 0.0;
  double fit_residual = 0.0;
  int window_start = 0;
  std::vector<std::pair<double, double>> records;  // (t, distance)
};

// distance from t*a to the nearest integer vector (euclidean on the torus)
double torus_line_distance(const std::vector<double>& a, double t);

NuEstimate estimate_nu(const std::vector<double>& a,
                       const NuConfig& cfg = NuConfig{});

}  // namespace reeblab
