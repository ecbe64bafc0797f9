#include <doctest.h>

#include <cmath>

#include "reeblab/piecewise_poly.hpp"
#include "reeblab/quadrature.hpp"
#include "reeblab/rng.hpp"
#include "reeblab/summation.hpp"

using namespace reeblab;

TEST_SUITE("util") {

TEST_CASE("rng determinism and worker streams") {
  Rng a(42), b(42), c(43);
  bool same = true, diff = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    same = same && (va == b.next_u64());
    diff = diff || (va != c.next_u64());
  }
  CHECK(same);
  CHECK(diff);

  Rng w0 = Rng::for_worker(7, 0), w1 = Rng::for_worker(7, 1);
  CHECK(w0.next_u64() != w1.next_u64());

  Rng u(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("gaussian moments") {
  Rng rng(11);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    s += g;
    s2 += g * g;
  }
  CHECK(std::fabs(s / n) < 0.01);
  CHECK(std::fabs(s2 / n - 1.0) < 0.02);
}

TEST_CASE("pairwise sum") {
  std::vector<double> v(10001, 0.1);
  CHECK(pairwise_sum(v) == doctest::Approx(1000.1).epsilon(1e-12));
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  auto f = [](double x) { return x * x * x * x * x - 2.0 * x * x + 1.0; };
  // exact over [0, 2]: 64/6 - 16/3 + 2
  const double exact = 64.0 / 6.0 - 16.0 / 3.0 + 2.0;
  CHECK(gauss_legendre(f, 0.0, 2.0, 8) == doctest::Approx(exact).epsilon(1e-14));
}

TEST_CASE("adaptive simpson on a smooth integrand") {
  auto f = [](double x) { return std::exp(-x * x); };
  const double v = integrate_adaptive(f, -6.0, 6.0, 1e-12);
  CHECK(v == doctest::Approx(std::sqrt(kPi)).epsilon(1e-10));
}

TEST_CASE("b-spline basics") {
  // center values of the cardinal B-splines
  CHECK(PiecewisePoly::bspline(2)(0.0) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(PiecewisePoly::bspline(3)(0.0) == doctest::Approx(0.75).epsilon(1e-13));
  CHECK(PiecewisePoly::bspline(4)(0.0) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-13));

  for (int p = 2; p <= 8; ++p) {
    const PiecewisePoly b = PiecewisePoly::bspline(p);
    CHECK(b.mass() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(b.support_lo() == doctest::Approx(-0.5 * p));
    CHECK(b.support_hi() == doctest::Approx(0.5 * p));
    // even, nonnegative
    for (int i = 0; i <= 100; ++i) {
      const double x = -0.5 * p + 0.01 * p * i;
      CHECK(b(x) == doctest::Approx(b(-x)).epsilon(1e-12));
      CHECK(b(x) >= -1e-14);
    }
    // half mass at 0
    CHECK(b.cumulative(0.0) == doctest::Approx(0.5).epsilon(1e-13));
  }
}

TEST_CASE("abs moment of the hat function") {
  const PiecewisePoly hat = PiecewisePoly::bspline(2);
  // integral of |u| (1-|u|) over [-1,1] = 1/3
  CHECK(hat.abs_moment_cumulative(2.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(hat.abs_moment_cumulative(0.0) ==
        doctest::Approx(1.0 / 6.0).epsilon(1e-13));
}

TEST_CASE("piecewise integral against quadrature") {
  const PiecewisePoly b = PiecewisePoly::bspline(5);
  auto f = [&](double x) { return b(x); };
  const double q = integrate_adaptive(f, -1.3, 0.9, 1e-12);
  CHECK(b.integral(-1.3, 0.9) == doctest::Approx(q).epsilon(1e-9));
}

TEST_CASE("scaled_arg rescales support and mass") {
  const PiecewisePoly b = PiecewisePoly::bspline(3);
  const PiecewisePoly g = b.scaled_arg(2.0);  // g(x) = b(2x)
  CHECK(g.support_hi() == doctest::Approx(0.75));
  CHECK(g.mass() == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(g(0.3) == doctest::Approx(b(0.6)).epsilon(1e-13));
}

TEST_CASE("box_convolve keeps mass and smooths") {
  const PiecewisePoly b = PiecewisePoly::box(-0.25, 1.25, 2.0 / 3.0);
  const PiecewisePoly g = b.box_convolve(0.125);
  CHECK(g.mass() == doctest::Approx(1.0).epsilon(1e-13));
  // plateau value away from the edges
  CHECK(g(0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-13));
  CHECK(g(-0.4) == doctest::Approx(0.0));
}

}  // TEST_SUITE
