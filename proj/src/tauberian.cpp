#include "reeblab/tauberian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "reeblab/quadrature.hpp"
#include "reeblab/rng.hpp"  // kPi
#include "reeblab/summation.hpp"

namespace reeblab {

namespace {

double sinc(double z) {
  if (std::abs(z) < 1e-8) return 1.0 - z * z / 6.0;
  return std::sin(z) / z;
}

constexpr double kMassTol = 1e-12;

}  // namespace

double SmoothingKernel::sup_theta_check() const {
  const auto& kn = theta_check.knots();
  double best = 0.0;
  for (std::size_t i = 0; i + 1 < kn.size(); ++i) {
    for (int j = 0; j <= 256; ++j) {
      double x = kn[i] + (kn[i + 1] - kn[i]) * j / 256.0;
      best = std::max(best, theta_check(x));
    }
  }
  return best;
}

void SmoothingKernel::validate() const {
  if (!theta) throw std::invalid_argument("SmoothingKernel: theta evaluator missing");
  if (std::abs(theta_check.mass() - 1.0) > kMassTol)
    throw std::invalid_argument("SmoothingKernel: transform mass is not 1");
  if (std::abs(theta(0.0) - 1.0) > kMassTol)
    throw std::invalid_argument("SmoothingKernel: theta(0) is not 1");
  const double lo = theta_check.support_lo(), hi = theta_check.support_hi();
  for (int j = 0; j <= 512; ++j) {
    double x = lo + (hi - lo) * j / 512.0;
    if (theta_check(x) < -kMassTol)
      throw std::invalid_argument("SmoothingKernel: transform is negative");
    if (even && std::abs(theta_check(x) - theta_check(-x)) > kMassTol)
      throw std::invalid_argument("SmoothingKernel: transform is not even");
  }
  if (even && (std::abs(lo + 1.0) > kMassTol || std::abs(hi - 1.0) > kMassTol))
    throw std::invalid_argument("SmoothingKernel: even preset must live on [-1,1]");
}

SmoothingKernel make_kernel(int p) {
  if (p < 2) throw std::invalid_argument("make_kernel: order must be >= 2");
  SmoothingKernel k;
  // order-p B-spline has support [-p/2, p/2]; rescale onto [-1,1] at unit mass
  k.theta_check =
      PiecewisePoly::bspline(p).scaled_arg(p / 2.0).scaled_value(p / 2.0);
  k.theta = [p](double t) {
    double s = sinc(t / p);
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= s;
    return r;
  };
  k.order = p;
  k.eps = 0.0;
  k.even = true;
  k.label = "bspline" + std::to_string(p);
  k.validate();
  return k;
}

SmoothingKernel make_weyl_kernel(int p, double eps) {
  if (p < 2) throw std::invalid_argument("make_weyl_kernel: order must be >= 2");
  if (!(eps > 0.0))
    throw std::invalid_argument("make_weyl_kernel: eps must be positive");
  SmoothingKernel k;
  const double a = -eps / 2.0, b = 1.0 + eps / 2.0;
  const double height = 1.0 / (1.0 + eps);
  PiecewisePoly pp = PiecewisePoly::box(a, b, height);
  // p sliding averages of combined halfwidth eps/4 leave the plateau
  // [-eps/4, 1+eps/4] untouched at 1/(1+eps)
  const double w = eps / (4.0 * p);
  for (int i = 0; i < p; ++i) pp = pp.box_convolve(w);
  k.theta_check = pp;
  k.theta = [a, b, height, w, p](double t) {
    // even part of the transform: box factor times the B-spline factor
    double box = (std::abs(t) < 1e-8)
                     ? height * (b - a) * (1.0 - t * t * (b * b + a * b + a * a) / 6.0)
                     : height * (std::sin(t * b) - std::sin(t * a)) / t;
    double s = sinc(w * t);
    double r = box;
    for (int i = 0; i < p; ++i) r *= s;
    return r;
  };
  k.order = p;
  k.eps = eps;
  k.even = false;
  k.label = "weyl_bspline" + std::to_string(p) + "_eps" + std::to_string(eps);
  k.validate();
  return k;
}

double Mollifier::operator()(double x) const {
  if (x == 0.0) return 0.0;
  double tail = kernel.theta2(std::abs(x));
  return x > 0.0 ? tail : -tail;
}

double Mollifier::derivative(double x) const {
  if (x == 0.0)
    throw std::invalid_argument("Mollifier::derivative: undefined at the jump");
  return -kernel.theta_check_at(-x);
}

Mollifier make_mollifier(const SmoothingKernel& k) {
  if (!k.even)
    throw std::invalid_argument("make_mollifier: kernel must be the even preset");
  k.validate();
  return Mollifier{k};
}

double mollifier_convolved(const SmoothingKernel& k, double T, double x) {
  if (!(T > 0.0)) throw std::invalid_argument("mollifier_convolved: T must be positive");
  Mollifier phi{k};
  // integrand y -> phi(x - y/T) theta_check(y) is polynomial between
  // breakpoints: the kernel's own knots plus y = T(x - kappa) for every
  // knot kappa of phi (kernel knots and the jump at 0)
  const auto& kn = k.theta_check.knots();
  std::vector<double> cuts(kn.begin(), kn.end());
  auto add_cut = [&](double kappa) {
    double y = T * (x - kappa);
    if (y > kn.front() && y < kn.back()) cuts.push_back(y);
  };
  add_cut(0.0);
  for (double kappa : kn) add_cut(kappa);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double u, double v) { return std::abs(u - v) < 1e-15; }),
             cuts.end());

  auto f = [&](double y) { return phi(x - y / T) * k.theta_check_at(y); };
  std::vector<double> parts;
  parts.reserve(cuts.size());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    parts.push_back(gauss_legendre(f, cuts[i], cuts[i + 1], 16));
  return pairwise_sum(parts);
}

ConvCompareReport mollifier_bound_check(const SmoothingKernel& k, double T,
                                        const std::vector<double>& x_grid,
                                        double tol) {
  if (!k.even)
    throw std::invalid_argument("mollifier_bound_check: kernel must be the even preset");
  if (!(T > 0.0)) throw std::invalid_argument("mollifier_bound_check: T must be positive");
  Mollifier phi{k};
  ConvCompareReport rep;
  rep.T = T;
  rep.min_slack = std::numeric_limits<double>::infinity();
  for (double x : x_grid) {
    if (x == 0.0)
      throw std::invalid_argument("mollifier_bound_check: grid must avoid 0");
    ConvCompareRow row;
    row.x = x;
    row.lhs = std::abs(phi(x) - mollifier_convolved(k, T, x));
    double y = std::abs(x) * T;
    row.rhs = k.theta1(y) / T + 2.0 * k.theta2(y);
    if (!std::isfinite(row.lhs) || !std::isfinite(row.rhs))
      throw std::runtime_error("mollifier_bound_check: quadrature failure");
    row.slack = row.rhs - row.lhs;
    row.ok = row.lhs <= row.rhs + tol;
    rep.min_slack = std::min(rep.min_slack, row.slack);
    rep.all_ok = rep.all_ok && row.ok;
    rep.rows.push_back(row);
  }
  return rep;
}

double mollifier_decay_constant(const SmoothingKernel& k, int N) {
  if (N < 0 || N > 4)
    throw std::invalid_argument("mollifier_decay_constant: N must be in [0,4]");
  Mollifier phi{k};
  double hi = std::max(std::abs(k.theta_check.support_lo()),
                       std::abs(k.theta_check.support_hi()));
  double best = 0.0;
  for (int j = 1; j <= 4096; ++j) {
    double x = 2.0 * hi * j / 4096.0;
    double weight = std::pow(1.0 + x * x, N / 2.0);
    best = std::max(best, std::abs(phi(x)) * weight);
  }
  return best;
}

double HScaling::sqrt_h() const { return std::sqrt(h); }
double HScaling::weyl_prefactor() const { return std::pow(h, -m); }
double HScaling::trace_prefactor() const { return std::pow(h, -m - 1.0); }
double HScaling::stream_density_prefactor() const { return std::pow(h, -m - 0.5); }
double HScaling::window_width(double T) const {
  if (!(T > 0.0)) throw std::invalid_argument("HScaling: T must be positive");
  return sqrt_h() / T;
}
double HScaling::stream_to_phys(double lambda) const { return lambda * sqrt_h(); }
double HScaling::phys_to_stream(double lambda_phys) const {
  return lambda_phys / sqrt_h();
}
double HScaling::smoothing_arg(double T, double lambda, double lambda_j) const {
  return T * (lambda - lambda_j) / sqrt_h();
}
void HScaling::validate() const {
  if (!(h > 0.0)) throw std::invalid_argument("HScaling: h must be positive");
  if (m < 1) throw std::invalid_argument("HScaling: m must be >= 1");
}

double smoothed_counting(const EigenvalueStream& stream,
                         const SmoothingKernel& kernel, double T, double h,
                         const std::function<double(double)>& f, double lambda) {
  if (!(T > 0.0)) throw std::invalid_argument("smoothed_counting: T must be positive");
  if (!f) throw std::invalid_argument("smoothed_counting: weight function missing");
  HScaling sc{h, 1};
  sc.validate();
  if (stream.eigenvalues.empty()) return 0.0;
  if (stream.multiplicities.size() != stream.eigenvalues.size())
    throw std::invalid_argument("smoothed_counting: malformed stream");
  std::vector<double> terms;
  terms.reserve(stream.eigenvalues.size());
  for (std::size_t j = 0; j < stream.eigenvalues.size(); ++j) {
    double arg = sc.smoothing_arg(T, lambda, stream.eigenvalues[j]);
    double w = kernel.theta_check_at(arg);
    if (w == 0.0) continue;
    terms.push_back(static_cast<double>(stream.multiplicities[j]) *
                    f(stream.eigenvalues[j]) * T * w);
  }
  return pairwise_sum(terms);
}

LocalWeylReport local_weyl_check(const EigenvalueStream& stream,
                                 const SmoothingKernel& kernel, double T,
                                 double h, int m, double u0_at_0,
                                 double vol_like) {
  if (!(u0_at_0 > 0.0))
    throw std::invalid_argument("local_weyl_check: u0(0) must be positive");
  if (!(vol_like > 0.0))
    throw std::invalid_argument("local_weyl_check: vol_like must be positive");
  HScaling sc{h, m};
  sc.validate();
  LocalWeylReport rep;
  rep.window = sc.window_width(T);
  for (std::size_t j = 0; j < stream.eigenvalues.size(); ++j) {
    double lam = stream.eigenvalues[j];
    if (lam > 0.0 && lam < rep.window) rep.count += stream.multiplicities[j];
  }
  rep.expected = sc.weyl_prefactor() / T * u0_at_0 * vol_like;
  rep.bound = rep.expected * (1.0 + kernel.eps);
  rep.ratio = static_cast<double>(rep.count) / rep.bound;
  rep.within_one = std::abs(static_cast<double>(rep.count) - rep.expected) <= 1.0 + 1e-9;
  rep.below_bound = static_cast<double>(rep.count) <= rep.bound + 1.0;
  return rep;
}

EigenvalueStream weyl_density_stream(double phys_density, double phys_halfwidth,
                                     double h, const std::string& label) {
  if (!(phys_density > 0.0) || !(phys_halfwidth > 0.0) || !(h > 0.0))
    throw std::invalid_argument("weyl_density_stream: parameters must be positive");
  long long N = std::llround(phys_density * 2.0 * phys_halfwidth);
  if (N < 1)
    throw std::invalid_argument("weyl_density_stream: density too low for the window");
  const double w = phys_halfwidth, rh = std::sqrt(h);
  return synthesize_quantile(
      [w, rh](double q) { return (-w + 2.0 * w * q) / rh; }, N, label);
}

}  // namespace reeblab
