#pragma once
// Model spectral data for the semiclassical Dirac operator: the threshold
// lattice sqrt(2 Lambda), the elementary distributions s^a and
// d^a/ds^a [ |s| s^b (s^2-2L)^{c-1/2} H(s^2-2L) ], the even density u0 on
// the spectral gap, and synthetic eigenvalue streams for the counting
// experiments downstream.

#include <functional>
#include <string>
#include <vector>

namespace reeblab {

struct ModelParams {
  int m = 1;                // manifold dimension n = 2m+1
  std::vector<double> mu;   // eigenvalue moduli, sorted ascending, size m

  int n() const { return 2 * m + 1; }
  double det_J() const;     // product of the mu_j
  void validate() const;
};

struct ThresholdLattice {
  std::vector<double> values;             // sqrt(2 Lambda), sorted distinct
  std::vector<double> lambdas;            // the merged Lambda values
  std::vector<long long> multiplicities;  // lattice representation counts
  long long total_indices = 0;            // multi-indices enumerated
};

// Lambda = sum k_j mu_j over nonzero multi-indices k with Lambda <= cut,
// merged at relative 1e-12
ThresholdLattice thresholds(const ModelParams& params, double lambda_cut);

// Schwartz-class test function; derivatives come from the exact evaluator
// when present and an order-8 central difference otherwise
struct TestFunction {
  std::function<double(double)> f;
  std::function<double(int, double)> deriv;  // a-th derivative, a >= 1
  double support_radius = 12.0;  // |s| beyond which f is negligible
  std::string label;

  double operator()(double s) const { return f(s); }
  double derivative(int a, double s) const;
  // the test function whose value is this one's first derivative
  TestFunction derivative_function() const;
};

TestFunction gaussian_test_function();          // e^{-s^2/2}, exact derivatives
TestFunction gaussian_density_test_function();  // normalized to integral 1
TestFunction odd_gaussian_test_function();      // s e^{-s^2/2}
TestFunction bump_test_function(double center, double halfwidth);

// < s^a, phi > by adaptive quadrature
double eval_v_poly(int a, const TestFunction& phi);

// < d^a/ds^a [ |s| s^b (s^2-2L)^{c-1/2} H(s^2-2L) ], phi >: the derivative
// is moved onto phi and the substitution s = +-sqrt(2L + u^2) removes the
// endpoint singularity
double eval_v_threshold(int a, int b, int c, double Lambda,
                        const TestFunction& phi);

// density of the leading trace coefficient on the spectral gap
// (-sqrt(2 mu_1), sqrt(2 mu_1)); constant profile pinned at
// u0(0) = det|J| / (4 pi)^{n/2}, even by construction
double u0_density(const ModelParams& params, double lambda);

struct EigenvalueStream {
  std::vector<double> eigenvalues;        // sorted ascending
  std::vector<long long> multiplicities;  // same length, all >= 1
  double cutoff = 0.0;                    // declared |lambda| bound
  std::string label;

  long long total_count() const;
  void validate() const;
};

// { n + a : n integer, |n + a| <= cutoff }
EigenvalueStream synthesize_progression(double a, double cutoff);
// j-th eigenvalue at the (j + 1/2)/N quantile of a density profile
EigenvalueStream synthesize_quantile(const std::function<double(double)>& quantile,
                                     long long N, const std::string& label);
EigenvalueStream uniform_stream(double lo, double hi, long long N);

std::string stream_to_json(const EigenvalueStream& s);
EigenvalueStream stream_from_json(const std::string& text);
EigenvalueStream load_stream(const std::string& path);
void save_stream(const EigenvalueStream& s, const std::string& path);

}  // namespace reeblab
