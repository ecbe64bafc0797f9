#include "reeblab/spectral_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "reeblab/budget.hpp"
#include "reeblab/quadrature.hpp"
#include "reeblab/rng.hpp"  // kPi

namespace reeblab {

namespace {

double ipow(double x, long long p) {
  if (p < 0) return 1.0 / ipow(x, -p);
  double r = 1.0, b = x;
  while (p) {
    if (p & 1) r *= b;
    b *= b;
    p >>= 1;
  }
  return r;
}

constexpr double kMergeRel = 1e-12;
constexpr double kQuadTol = 1e-10;
constexpr long long kLatticeCap = 20'000'000;

}  // namespace

double ModelParams::det_J() const {
  double d = 1.0;
  for (double v : mu) d *= v;
  return d;
}

void ModelParams::validate() const {
  if (m < 1) throw std::invalid_argument("ModelParams: m must be >= 1");
  if (static_cast<int>(mu.size()) != m)
    throw std::invalid_argument("ModelParams: mu must have m entries");
  double prev = 0.0;
  for (double v : mu) {
    if (!(v > 0.0)) throw std::invalid_argument("ModelParams: mu entries must be positive");
    if (v < prev) throw std::invalid_argument("ModelParams: mu must be sorted ascending");
    prev = v;
  }
}

namespace {

void enumerate_lattice(const std::vector<double>& mu, std::size_t j, double acc,
                       double cut, std::vector<double>& out) {
  if (j == mu.size()) {
    if (acc > 0.0) out.push_back(acc);
    return;
  }
  // acc already <= cut, so k = 0 always recurses
  for (long long k = 0;; ++k) {
    double next = acc + static_cast<double>(k) * mu[j];
    if (next > cut * (1.0 + kMergeRel)) break;
    if (out.size() >= static_cast<std::size_t>(kLatticeCap))
      throw BudgetExceeded("thresholds: lattice point count exceeds cap " +
                           std::to_string(kLatticeCap));
    enumerate_lattice(mu, j + 1, next, cut, out);
  }
}

}  // namespace

ThresholdLattice thresholds(const ModelParams& params, double lambda_cut) {
  params.validate();
  if (!(lambda_cut > params.mu.front()))
    throw std::invalid_argument("thresholds: lambda_cut must exceed mu_1");

  // simplex volume estimate of the index count, checked before recursing
  double est = 1.0;
  for (std::size_t j = 0; j < params.mu.size(); ++j)
    est *= (lambda_cut / params.mu[j] + 1.0) / static_cast<double>(j + 1);
  charge_budget(est, "thresholds");
  if (est > 4.0 * static_cast<double>(kLatticeCap))
    throw BudgetExceeded("thresholds: estimated lattice size " + std::to_string(est) +
                         " exceeds cap " + std::to_string(kLatticeCap));

  std::vector<double> lams;
  enumerate_lattice(params.mu, 0, 0.0, lambda_cut, lams);
  std::sort(lams.begin(), lams.end());

  ThresholdLattice lat;
  lat.total_indices = static_cast<long long>(lams.size());
  for (double L : lams) {
    if (!lat.lambdas.empty() &&
        L - lat.lambdas.back() <= kMergeRel * std::max(1.0, L)) {
      ++lat.multiplicities.back();
    } else {
      lat.lambdas.push_back(L);
      lat.multiplicities.push_back(1);
    }
  }
  lat.values.reserve(lat.lambdas.size());
  for (double L : lat.lambdas) lat.values.push_back(std::sqrt(2.0 * L));
  return lat;
}

double TestFunction::derivative(int a, double s) const {
  if (a < 0) throw std::invalid_argument("TestFunction::derivative: a must be >= 0");
  if (a == 0) return f(s);
  if (deriv) return deriv(a, s);
  // order-8 central difference, recursing for higher orders
  static const double c[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  const double h = 0.02;
  auto lower = [&](double x) { return derivative(a - 1, x); };
  double acc = 0.0;
  for (int k = 1; k <= 4; ++k)
    acc += c[k - 1] * (lower(s + k * h) - lower(s - k * h));
  return acc / h;
}

TestFunction TestFunction::derivative_function() const {
  TestFunction d;
  TestFunction base = *this;
  d.f = [base](double s) { return base.derivative(1, s); };
  if (deriv) {
    auto dv = deriv;
    d.deriv = [dv](int a, double s) { return dv(a + 1, s); };
  }
  d.support_radius = support_radius;
  d.label = label.empty() ? "derivative" : label + "'";
  return d;
}

namespace {

// d^a/ds^a e^{-s^2/2} = (-1)^a He_a(s) e^{-s^2/2}, He the probabilists'
// Hermite polynomials
double gaussian_deriv(int a, double s) {
  double hm1 = 0.0, h0 = 1.0;
  for (int k = 0; k < a; ++k) {
    double h1 = s * h0 - static_cast<double>(k) * hm1;
    hm1 = h0;
    h0 = h1;
  }
  double sign = (a % 2) ? -1.0 : 1.0;
  return sign * h0 * std::exp(-0.5 * s * s);
}

}  // namespace

TestFunction gaussian_test_function() {
  TestFunction t;
  t.f = [](double s) { return std::exp(-0.5 * s * s); };
  t.deriv = gaussian_deriv;
  t.support_radius = 12.0;
  t.label = "gaussian";
  return t;
}

TestFunction gaussian_density_test_function() {
  TestFunction t = gaussian_test_function();
  const double c = 1.0 / std::sqrt(2.0 * kPi);
  t.f = [c](double s) { return c * std::exp(-0.5 * s * s); };
  t.deriv = [c](int a, double s) { return c * gaussian_deriv(a, s); };
  t.label = "gaussian_density";
  return t;
}

TestFunction odd_gaussian_test_function() {
  TestFunction t;
  t.f = [](double s) { return s * std::exp(-0.5 * s * s); };
  // (s g)^(a) = s g^(a) + a g^(a-1)
  t.deriv = [](int a, double s) {
    return s * gaussian_deriv(a, s) + a * gaussian_deriv(a - 1, s);
  };
  t.support_radius = 12.0;
  t.label = "odd_gaussian";
  return t;
}

TestFunction bump_test_function(double center, double halfwidth) {
  if (!(halfwidth > 0.0))
    throw std::invalid_argument("bump_test_function: halfwidth must be positive");
  TestFunction t;
  t.f = [center, halfwidth](double s) {
    double u = (s - center) / halfwidth;
    if (std::abs(u) >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - u * u));
  };
  t.support_radius = std::abs(center) + halfwidth;
  t.label = "bump";
  return t;
}

double eval_v_poly(int a, const TestFunction& phi) {
  if (a < 0) throw std::invalid_argument("eval_v_poly: a must be >= 0");
  if (!phi.f) throw std::invalid_argument("eval_v_poly: test function is empty");
  const double R = phi.support_radius;
  double val = integrate_adaptive(
      [&](double s) { return ipow(s, a) * phi.f(s); }, -R, R, kQuadTol);
  if (!std::isfinite(val)) throw std::runtime_error("eval_v_poly: quadrature diverged");
  return val;
}

double eval_v_threshold(int a, int b, int c, double Lambda,
                        const TestFunction& phi) {
  if (a < 0) throw std::invalid_argument("eval_v_threshold: a must be >= 0");
  if (c < 0)
    throw std::invalid_argument(
        "eval_v_threshold: c < 0 puts a non-integrable singularity at the threshold");
  if (!(Lambda > 0.0))
    throw std::invalid_argument("eval_v_threshold: Lambda must be positive");
  if (!phi.f) throw std::invalid_argument("eval_v_threshold: test function is empty");

  // After moving the a derivatives onto phi, each branch s = +-sqrt(2L+u^2)
  // carries ds = (u/s) du, and |s| s^b (u^2)^{c-1/2} * ds = s^b u^{2c} du.
  const double s0sq = 2.0 * Lambda;
  const double R = phi.support_radius;
  double U = 1.0;
  if (R * R > s0sq) U = std::sqrt(R * R - s0sq) + 1.0;

  auto branch = [&](double sgn) {
    return integrate_adaptive(
        [&](double u) {
          double s = std::sqrt(s0sq + u * u);
          return ipow(s, b) * ipow(u, 2ll * c) * phi.derivative(a, sgn * s);
        },
        0.0, U, kQuadTol);
  };
  double plus = branch(1.0);
  double minus = branch(-1.0);
  double sign_a = (a % 2) ? -1.0 : 1.0;
  double sign_b = (b % 2 != 0) ? -1.0 : 1.0;
  double val = sign_a * (plus + sign_b * minus);
  if (!std::isfinite(val))
    throw std::runtime_error("eval_v_threshold: quadrature diverged");
  return val;
}

double u0_density(const ModelParams& params, double lambda) {
  params.validate();
  const double gap = std::sqrt(2.0 * params.mu.front());
  if (!(std::abs(lambda) < gap))
    throw std::domain_error("u0_density: |lambda| must lie inside the spectral gap");
  return params.det_J() / std::pow(4.0 * kPi, params.n() / 2.0);
}

long long EigenvalueStream::total_count() const {
  long long t = 0;
  for (long long m : multiplicities) t += m;
  return t;
}

void EigenvalueStream::validate() const {
  if (eigenvalues.empty()) throw std::invalid_argument("EigenvalueStream: empty");
  if (multiplicities.size() != eigenvalues.size())
    throw std::invalid_argument("EigenvalueStream: multiplicity length mismatch");
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (!std::isfinite(eigenvalues[i]))
      throw std::invalid_argument("EigenvalueStream: non-finite eigenvalue");
    if (i && eigenvalues[i] < eigenvalues[i - 1])
      throw std::invalid_argument("EigenvalueStream: eigenvalues must be sorted");
    if (multiplicities[i] < 1)
      throw std::invalid_argument("EigenvalueStream: multiplicities must be >= 1");
    if (std::abs(eigenvalues[i]) > cutoff * (1.0 + 1e-12))
      throw std::invalid_argument("EigenvalueStream: eigenvalue exceeds cutoff");
  }
}

EigenvalueStream synthesize_progression(double a, double cutoff) {
  if (!(cutoff > 0.0))
    throw std::invalid_argument("synthesize_progression: cutoff must be positive");
  long long lo = static_cast<long long>(std::ceil(-cutoff - a - 1e-12));
  long long hi = static_cast<long long>(std::floor(cutoff - a + 1e-12));
  if (lo > hi) throw std::invalid_argument("synthesize_progression: empty stream");
  EigenvalueStream s;
  for (long long n = lo; n <= hi; ++n) {
    s.eigenvalues.push_back(static_cast<double>(n) + a);
    s.multiplicities.push_back(1);
  }
  s.cutoff = cutoff;
  std::ostringstream lbl;
  lbl << "progression(a=" << a << ")";
  s.label = lbl.str();
  s.validate();
  return s;
}

EigenvalueStream synthesize_quantile(const std::function<double(double)>& quantile,
                                     long long N, const std::string& label) {
  if (N < 1) throw std::invalid_argument("synthesize_quantile: N must be >= 1");
  if (!quantile) throw std::invalid_argument("synthesize_quantile: empty quantile");
  charge_budget(static_cast<double>(N), "synthesize_quantile");
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(N));
  for (long long j = 0; j < N; ++j) {
    double q = (static_cast<double>(j) + 0.5) / static_cast<double>(N);
    double v = quantile(q);
    if (!std::isfinite(v))
      throw std::runtime_error("synthesize_quantile: quantile returned non-finite value");
    vals.push_back(v);
  }
  std::sort(vals.begin(), vals.end());
  EigenvalueStream s;
  for (double v : vals) {
    if (!s.eigenvalues.empty() && v == s.eigenvalues.back()) {
      ++s.multiplicities.back();
    } else {
      s.eigenvalues.push_back(v);
      s.multiplicities.push_back(1);
    }
  }
  s.cutoff = std::max(std::abs(s.eigenvalues.front()), std::abs(s.eigenvalues.back()));
  s.label = label;
  s.validate();
  return s;
}

EigenvalueStream uniform_stream(double lo, double hi, long long N) {
  if (!(lo < hi)) throw std::invalid_argument("uniform_stream: need lo < hi");
  std::ostringstream lbl;
  lbl << "uniform[" << lo << "," << hi << "]";
  return synthesize_quantile([lo, hi](double q) { return lo + (hi - lo) * q; }, N,
                             lbl.str());
}

std::string stream_to_json(const EigenvalueStream& s) {
  nlohmann::json j;
  j["eigenvalues"] = s.eigenvalues;
  j["multiplicities"] = s.multiplicities;
  j["cutoff"] = s.cutoff;
  j["label"] = s.label;
  return j.dump(2);
}

EigenvalueStream stream_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("stream_from_json: ") + e.what());
  }
  EigenvalueStream s;
  if (!j.contains("eigenvalues"))
    throw std::runtime_error("stream_from_json: missing eigenvalues");
  s.eigenvalues = j["eigenvalues"].get<std::vector<double>>();
  if (j.contains("multiplicities"))
    s.multiplicities = j["multiplicities"].get<std::vector<long long>>();
  else
    s.multiplicities.assign(s.eigenvalues.size(), 1);
  if (j.contains("cutoff")) s.cutoff = j["cutoff"].get<double>();
  else {
    for (double v : s.eigenvalues) s.cutoff = std::max(s.cutoff, std::abs(v));
  }
  if (j.contains("label")) s.label = j["label"].get<std::string>();
  s.validate();
  return s;
}

EigenvalueStream load_stream(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_stream: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return stream_from_json(ss.str());
}

void save_stream(const EigenvalueStream& s, const std::string& path) {
  s.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_stream: cannot open " + path);
  out << stream_to_json(s) << "\n";
}

}  // namespace reeblab
