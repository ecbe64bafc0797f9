#include "reeblab/quadrature.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace reeblab {

namespace {

// Legendre P_n and P_n' by recurrence.
std::pair<double, double> legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  const double dp = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

struct GlTable {
  std::vector<double> nodes, weights;
};

GlTable build_gl(int n) {
  if (n < 2) throw std::invalid_argument("gauss-legendre order must be >= 2");
  GlTable t;
  t.nodes.resize(n);
  t.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Chebyshev initial guess, Newton refinement.
    double x = std::cos(3.14159265358979323846 * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      auto [p, dp] = legendre(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    auto [p, dp] = legendre(n, x);
    (void)p;
    t.nodes[i] = x;
    t.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return t;
}

const GlTable& gl_table(int n) {
  static std::map<int, GlTable> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gl(n)).first;
  return it->second;
}

}  // namespace

const std::vector<double>& gl_nodes(int n) { return gl_table(n).nodes; }
const std::vector<double>& gl_weights(int n) { return gl_table(n).weights; }

double gauss_legendre(const std::function<double(double)>& f, double a,
                      double b, int n) {
  const GlTable& t = gl_table(n);
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += t.weights[i] * f(mid + half * t.nodes[i]);
  return s * half;
}

namespace {

double simpson(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double b,
             double fa, double fm, double fb, double whole, double tol,
             int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(fa, flm, fm, m - a);
  const double right = simpson(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double abs_tol, int max_depth) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = simpson(fa, fm, fb, b - a);
  return adapt(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

}  // namespace reeblab
