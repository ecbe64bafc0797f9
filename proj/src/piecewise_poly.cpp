#include "reeblab/piecewise_poly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reeblab {

namespace {

double poly_eval(const std::vector<double>& c, double u) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * u + c[k];
  return v;
}

double poly_deriv_eval(const std::vector<double>& c, double u) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 1;) v = v * u + c[k] * double(k);
  return v;
}

// definite integral of the local polynomial from u1 to u2
double poly_integral(const std::vector<double>& c, double u1, double u2) {
  double v1 = 0.0, v2 = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) {
    v1 = v1 * u1 + c[k] / double(k + 1);
    v2 = v2 * u2 + c[k] / double(k + 1);
  }
  return v2 * u2 - v1 * u1;
}

// definite integral of (kappa + u) * poly(u): the |x| moment on a piece
// whose left knot is kappa, restricted to a sign-constant range.
double poly_lin_integral(const std::vector<double>& c, double kappa, double u1,
                         double u2) {
  // (kappa + u) * sum c_k u^k = sum kappa c_k u^k + sum c_k u^{k+1}
  std::vector<double> d(c.size() + 1, 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) {
    d[k] += kappa * c[k];
    d[k + 1] += c[k];
  }
  return poly_integral(d, u1, u2);
}

// re-expand poly around a shifted origin: q(u) = p(u + s)
std::vector<double> poly_shift(const std::vector<double>& p, double s) {
  // Horner/Taylor shift
  std::vector<double> q(p);
  const int n = int(q.size());
  for (int i = 0; i < n - 1; ++i)
    for (int k = n - 2; k >= i; --k) q[k] += s * q[k + 1];
  return q;
}

std::vector<double> poly_antiderivative(const std::vector<double>& c) {
  std::vector<double> a(c.size() + 1, 0.0);
  for (std::size_t k = 0; k < c.size(); ++k) a[k + 1] = c[k] / double(k + 1);
  return a;
}

}  // namespace

PiecewisePoly::PiecewisePoly(std::vector<double> knots,
                             std::vector<std::vector<double>> coef)
    : knots_(std::move(knots)), coef_(std::move(coef)) {
  if (knots_.size() < 2 || coef_.size() + 1 != knots_.size())
    throw std::invalid_argument("piecewise poly: knots/coef size mismatch");
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
    if (!(knots_[i] < knots_[i + 1]))
      throw std::invalid_argument("piecewise poly: knots must increase");
  build_cum();
}

void PiecewisePoly::build_cum() {
  cum_.assign(knots_.size(), 0.0);
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
    cum_[i + 1] = cum_[i] + poly_integral(coef_[i], 0.0, knots_[i + 1] - knots_[i]);
  total_ = cum_.back();
}

int PiecewisePoly::piece_of(double x) const {
  if (x < knots_.front()) return -1;
  if (x >= knots_.back()) return int(coef_.size());
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  return int(it - knots_.begin()) - 1;
}

double PiecewisePoly::operator()(double x) const {
  const int i = piece_of(x);
  if (i < 0 || i >= int(coef_.size())) return 0.0;
  return poly_eval(coef_[i], x - knots_[i]);
}

double PiecewisePoly::derivative_at(double x) const {
  const int i = piece_of(x);
  if (i < 0 || i >= int(coef_.size())) return 0.0;
  return poly_deriv_eval(coef_[i], x - knots_[i]);
}

double PiecewisePoly::cumulative(double x) const {
  const int i = piece_of(x);
  if (i < 0) return 0.0;
  if (i >= int(coef_.size())) return total_;
  return cum_[i] + poly_integral(coef_[i], 0.0, x - knots_[i]);
}

double PiecewisePoly::abs_moment_cumulative(double y) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < coef_.size(); ++i) {
    const double lo = knots_[i], hi = knots_[i + 1];
    const double up = std::min(y, hi);
    if (up <= lo) break;
    // split at x = 0 if it lies inside (lo, up)
    const double kappa = lo;
    auto segment = [&](double xa, double xb) {
      const double sgn = (0.5 * (xa + xb) >= 0.0) ? 1.0 : -1.0;
      acc += sgn * poly_lin_integral(coef_[i], kappa, xa - lo, xb - lo);
    };
    if (lo < 0.0 && up > 0.0) {
      segment(lo, 0.0);
      segment(0.0, up);
    } else {
      segment(lo, up);
    }
    if (up < hi) break;
  }
  return acc;
}

double PiecewisePoly::max_degree() const {
  std::size_t d = 0;
  for (const auto& c : coef_) d = std::max(d, c.empty() ? 0 : c.size() - 1);
  return double(d);
}

PiecewisePoly PiecewisePoly::scaled_arg(double s) const {
  if (!(s > 0.0)) throw std::invalid_argument("scaled_arg: s must be > 0");
  std::vector<double> knots(knots_.size());
  for (std::size_t i = 0; i < knots_.size(); ++i) knots[i] = knots_[i] / s;
  std::vector<std::vector<double>> coef(coef_.size());
  for (std::size_t i = 0; i < coef_.size(); ++i) {
    coef[i] = coef_[i];
    double sk = 1.0;
    for (std::size_t k = 0; k < coef[i].size(); ++k) {
      coef[i][k] *= sk;  // f(s x): local u' = x - knot/s, s u' = u
      sk *= s;
    }
  }
  return PiecewisePoly(std::move(knots), std::move(coef));
}

PiecewisePoly PiecewisePoly::scaled_value(double c) const {
  auto coef = coef_;
  for (auto& piece : coef)
    for (auto& v : piece) v *= c;
  return PiecewisePoly(knots_, std::move(coef));
}

PiecewisePoly PiecewisePoly::box_convolve(double w) const {
  if (!(w > 0.0)) throw std::invalid_argument("box_convolve: w must be > 0");
  // knots of the result: every old knot shifted by +-w
  std::vector<double> knots;
  knots.reserve(2 * knots_.size());
  for (double k : knots_) {
    knots.push_back(k - w);
    knots.push_back(k + w);
  }
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](double a, double b) {
                            return std::fabs(a - b) < 1e-14;
                          }),
              knots.end());
  // Precompute antiderivative polys per old piece (local var).
  std::vector<std::vector<double>> anti(coef_.size());
  for (std::size_t i = 0; i < coef_.size(); ++i)
    anti[i] = poly_antiderivative(coef_[i]);

  // F(x0 + u) as a local poly in u, for x0 inside the old support range;
  // [x0, x0+len) is guaranteed not to straddle an old knot.
  auto cumulative_poly = [&](double x0) -> std::vector<double> {
    if (x0 < knots_.front() - 1e-13) return {0.0};
    if (x0 >= knots_.back() - 1e-13) return {total_};
    int i = piece_of(x0 + 1e-13);
    i = std::max(0, std::min(i, int(coef_.size()) - 1));
    std::vector<double> p = poly_shift(anti[i], x0 - knots_[i]);
    p[0] += cum_[i] - poly_eval(anti[i], 0.0);  // anti(0)=0, kept for clarity
    return p;
  };

  std::vector<std::vector<double>> coef(knots.size() - 1);
  for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
    const double L = knots[j];
    std::vector<double> hi = cumulative_poly(L + w);
    std::vector<double> lo = cumulative_poly(L - w);
    std::vector<double> c(std::max(hi.size(), lo.size()), 0.0);
    for (std::size_t k = 0; k < hi.size(); ++k) c[k] += hi[k];
    for (std::size_t k = 0; k < lo.size(); ++k) c[k] -= lo[k];
    for (auto& v : c) v /= 2.0 * w;
    coef[j] = std::move(c);
  }
  return PiecewisePoly(std::move(knots), std::move(coef));
}

PiecewisePoly PiecewisePoly::box(double lo, double hi, double value) {
  if (!(lo < hi)) throw std::invalid_argument("box: lo must be < hi");
  return PiecewisePoly({lo, hi}, {{value}});
}

PiecewisePoly PiecewisePoly::bspline(int order) {
  if (order < 1) throw std::invalid_argument("bspline: order must be >= 1");
  PiecewisePoly b = box(-0.5, 0.5, 1.0);
  for (int p = 1; p < order; ++p) b = b.box_convolve(0.5);
  return b;
}

}  // namespace reeblab
