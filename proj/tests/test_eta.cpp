#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "reeblab/eta.hpp"
#include "reeblab/rng.hpp"
#include "reeblab/spectral_model.hpp"

using namespace reeblab;

namespace {

EigenvalueStream random_stream(int n, unsigned long long seed) {
  Rng rng(seed);
  std::vector<double> vals;
  for (int i = 0; i < n; ++i) vals.push_back(rng.uniform(-4.0, 4.0));
  std::sort(vals.begin(), vals.end());
  EigenvalueStream s;
  s.eigenvalues = vals;
  for (int i = 0; i < n; ++i)
    s.multiplicities.push_back(1 + static_cast<long long>(rng.uniform() * 3));
  s.cutoff = 4.0;
  s.label = "random";
  return s;
}

}  // namespace

TEST_SUITE("eta") {

TEST_CASE("signed erfc convention") {
  CHECK(sign_erfc(0.0) == 0.0);
  CHECK(sign_erfc(1.0) == doctest::Approx(0.15729920705028513).epsilon(1e-12));
  CHECK(sign_erfc(-1.0) == -sign_erfc(1.0));
  CHECK(sign_erfc(-0.37) == -sign_erfc(0.37));

  EigenvalueStream one;
  one.eigenvalues = {1.0};
  one.multiplicities = {1};
  one.cutoff = 1.0;
  auto r = eta_erfc(one);
  CHECK(r.value == doctest::Approx(0.15729920705028513).epsilon(1e-12));
  CHECK(r.zero_modes == 0);
  CHECK(r.method == EtaResult::Method::erfc_tail);

  one.multiplicities = {4};
  CHECK(eta_erfc(one).value == doctest::Approx(4 * 0.15729920705028513).epsilon(1e-12));
}

TEST_CASE("zero modes feed the reduced invariant only") {
  EigenvalueStream s;
  s.eigenvalues = {-0.8, 0.0, 1.3};
  s.multiplicities = {1, 3, 1};
  s.cutoff = 2.0;
  auto r = eta_erfc(s);
  CHECK(r.zero_modes == 3);
  double expect = std::erfc(1.3) - std::erfc(0.8);
  CHECK(r.value == doctest::Approx(expect).epsilon(1e-13));
  CHECK(r.reduced() == doctest::Approx((3.0 + expect) / 2.0).epsilon(1e-13));

  // single null eigenvalue: eta 0, reduced 1/2
  EigenvalueStream null_only;
  null_only.eigenvalues = {0.0};
  null_only.multiplicities = {1};
  null_only.cutoff = 1.0;
  auto rn = eta_erfc(null_only);
  CHECK(rn.value == 0.0);
  CHECK(rn.reduced() == 0.5);
}

TEST_CASE("antisymmetry is exact") {
  for (unsigned long long seed : {11ull, 12ull, 13ull}) {
    auto s = random_stream(200, seed);
    auto r = eta_erfc(s);
    auto rn = eta_erfc(negated_stream(s));
    CHECK(rn.value == -r.value);  // bit exact by grouped summation
    CHECK(rn.zero_modes == r.zero_modes);
  }
  // symmetric multiset cancels to exactly zero
  auto sym = synthesize_progression(0.5, 6.0);
  CHECK(eta_erfc(sym).value == 0.0);
  EigenvalueStream pairs;
  pairs.eigenvalues = {-2.2, -0.7, 0.7, 2.2};
  pairs.multiplicities = {5, 2, 2, 5};
  pairs.cutoff = 3.0;
  CHECK(eta_erfc(pairs).value == 0.0);
  CHECK(eta_full_from_stream(pairs).value == 0.0);

  // unbalanced multiplicity at mirrored eigenvalues leaves the surplus
  pairs.multiplicities = {5, 2, 2, 6};
  CHECK(eta_erfc(pairs).value == doctest::Approx(std::erfc(2.2)).epsilon(1e-13));

  EigenvalueStream empty;
  CHECK(eta_erfc(empty).value == 0.0);
}

TEST_CASE("hurwitz zeta oracle values") {
  for (double a : {0.1, 0.25, 0.9})
    CHECK(hurwitz_zeta(0.0, a) == doctest::Approx(0.5 - a).epsilon(1e-13));
  CHECK(hurwitz_zeta(2.0, 1.0) ==
        doctest::Approx(kPi * kPi / 6.0).epsilon(1e-14));
  CHECK(hurwitz_zeta(2.0, 0.5) ==
        doctest::Approx(kPi * kPi / 2.0).epsilon(1e-14));
  CHECK(hurwitz_zeta(3.0, 1.0) ==
        doctest::Approx(1.2020569031595943).epsilon(1e-14));
  CHECK(hurwitz_zeta(2.0, 0.3) > 0.0);
  CHECK_THROWS_AS(hurwitz_zeta(2.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(hurwitz_zeta(2.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(hurwitz_zeta(1.0, 0.5), std::invalid_argument);
}

TEST_CASE("zeta progression eta closed form") {
  CHECK(eta_zeta_progression(0.5, 100.0).value == 0.0);
  CHECK(eta_zeta_progression(0.25, 100.0).value == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(eta_zeta_progression(0.75, 100.0).value == doctest::Approx(-0.5).epsilon(1e-14));
  for (double a : {0.1, 0.33, 0.42}) {
    auto r = eta_zeta_progression(a, 50.0);
    auto rm = eta_zeta_progression(1.0 - a, 50.0);
    CHECK(r.value == doctest::Approx(1.0 - 2.0 * a).epsilon(1e-14));
    CHECK(r.value == doctest::Approx(-rm.value).epsilon(1e-14));
    CHECK(r.method == EtaResult::Method::zeta_hurwitz);
  }
  CHECK_THROWS_AS(eta_zeta_progression(0.0, 100.0), std::domain_error);
  CHECK_THROWS_AS(eta_zeta_progression(1.0, 100.0), std::domain_error);
  CHECK_THROWS_AS(eta_zeta_progression(-0.3, 100.0), std::domain_error);
  CHECK_THROWS_AS(eta_zeta_progression(1.2, 100.0), std::domain_error);
}

TEST_CASE("partial sums approach the continuation") {
  const double a = 0.3;
  double exact = hurwitz_zeta(2.0, a) - hurwitz_zeta(2.0, 1.0 - a);
  double prev = 1e9;
  for (double cutoff : {50.0, 200.0, 1000.0}) {
    double err = std::abs(progression_partial_eta(a, 2.0, cutoff) - exact);
    CHECK(err <= 4.0 / (cutoff * cutoff));
    CHECK(err < prev);
    prev = err;
  }
  // eta_zeta_progression records the same diagnostic
  auto r = eta_zeta_progression(a, 200.0);
  CHECK(r.tail_bound <= 4.0 / (200.0 * 200.0));
}

TEST_CASE("progression small-t provider value") {
  auto stream = synthesize_progression(0.25, 40.0);
  auto provider = progression_small_t(0.25);
  // leading term of the transformed series: (2/pi) sin(pi/2) exp(-pi^2)
  double lead = (2.0 / kPi) * std::exp(-kPi * kPi);
  CHECK(provider(stream) == doctest::Approx(lead).epsilon(1e-8));

  // scales linearly with uniform multiplicity
  EigenvalueStream heavy = stream;
  for (auto& m : heavy.multiplicities) m = 7;
  CHECK(provider(heavy) == doctest::Approx(7.0 * provider(stream)).epsilon(1e-13));

  EigenvalueStream ragged = stream;
  ragged.multiplicities.back() = 2;
  CHECK_THROWS_AS(provider(ragged), std::invalid_argument);
  CHECK_THROWS_AS(progression_small_t(0.0), std::invalid_argument);
  CHECK_THROWS_AS(progression_small_t(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("heat split recovers the progression eta") {
  // erfc tail plus the analytic small-t term reproduces 1 - 2a
  for (double a : {0.25, 0.1, 0.7}) {
    auto stream = synthesize_progression(a, 40.0);
    auto r = eta_full_from_stream(stream, progression_small_t(a));
    CHECK(r.value == doctest::Approx(1.0 - 2.0 * a).epsilon(1e-12));
    CHECK(r.method == EtaResult::Method::split);
    CHECK(r.small_t_included);
  }
  // without the provider the result is flagged as tail-only
  auto bare = eta_full_from_stream(synthesize_progression(0.25, 40.0));
  CHECK(!bare.small_t_included);
  CHECK(bare.method == EtaResult::Method::erfc_tail);
}

TEST_CASE("heat split is scale covariant") {
  const double a = 0.3;
  auto base = synthesize_progression(a, 60.0);
  for (double c : {0.5, 2.0, 5.0}) {
    auto scaled = scaled_stream(base, c);
    auto r = eta_full_from_stream(scaled, progression_small_t(a, c));
    CHECK(r.value == doctest::Approx(1.0 - 2.0 * a).epsilon(1e-10));
  }
  // the bare erfc tail is not scale invariant: the small-t piece moves mass
  auto bare = eta_full_from_stream(scaled_stream(base, 5.0));
  CHECK(std::abs(bare.value - (1.0 - 2.0 * a)) > 1e-2);
  CHECK_THROWS_AS(scaled_stream(base, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(scaled_stream(base, -2.0), std::invalid_argument);
}

TEST_CASE("tail bound diagnostics") {
  auto near = synthesize_progression(0.5, 3.0);
  auto far = synthesize_progression(0.5, 6.0);
  CHECK(erfc_tail_estimate(near) > erfc_tail_estimate(far));
  CHECK(erfc_tail_estimate(far) > 0.0);
  auto wide = synthesize_progression(0.5, 40.0);
  CHECK(erfc_tail_estimate(wide) == 0.0);  // exp underflow
  EigenvalueStream empty;
  CHECK(erfc_tail_estimate(empty) == 0.0);
}

TEST_CASE("planted power family recovers the exponent") {
  const int m = 1;
  const double L = 0.25;
  auto family = planted_progression_family(
      m, L, [](double h) { return 0.3 * std::pow(h, 1.0 / 3.0); });
  std::vector<double> hs = {1e-2, 3.16e-3, 1e-3, 3.16e-4, 1e-4, 3.16e-5, 1e-5};
  auto fit = remainder_experiment(family, hs, m, L);
  CHECK(fit.power_exponent == doctest::Approx(1.0 / 3.0).epsilon(0.01));
  CHECK(!fit.prefers_log);
  CHECK(!fit.zero_remainder);
  CHECK(fit.amplitude ==
        doctest::Approx(0.3 * std::pow(1e-2, 1.0 / 3.0)).epsilon(1e-6));
  for (double R : fit.remainders) CHECK(R > 0.0);
}

TEST_CASE("planted log family prefers the reciprocal log model") {
  const int m = 1;
  const double L = 0.1;
  auto family = planted_progression_family(
      m, L, [](double h) { return 0.2 / std::abs(std::log(h)); });
  std::vector<double> hs = {1e-2, 3.16e-3, 1e-3, 3.16e-4, 1e-4, 3.16e-5, 1e-5};
  auto fit = remainder_experiment(family, hs, m, L);
  CHECK(fit.prefers_log);
  CHECK(fit.log_exponent == doctest::Approx(1.0).epsilon(0.05));
  CHECK(fit.log_rss < fit.power_rss);
}

TEST_CASE("zero remainder family reports a clean constant") {
  const int m = 2;
  auto family =
      planted_progression_family(m, 0.3, [](double) { return 0.0; });
  auto fit = remainder_experiment(family, {1e-1, 3e-2, 1e-2, 3e-3}, m, 0.3);
  CHECK(fit.zero_remainder);
  CHECK(fit.amplitude <= 1e-12);
  CHECK(fit.power_rss == 0.0);
}

TEST_CASE("degenerate families are rejected") {
  auto family =
      planted_progression_family(1, 0.2, [](double) { return 0.0; });
  CHECK_THROWS_AS(remainder_experiment(family, {1e-2, 1e-3}, 1, 0.2),
                  std::invalid_argument);
  CHECK_THROWS_AS(remainder_experiment(family, {1e-2, 1e-3, 1e-3}, 1, 0.2),
                  std::invalid_argument);
  CHECK_THROWS_AS(remainder_experiment(family, {1e-2, 1.5, 1e-3}, 1, 0.2),
                  std::invalid_argument);
  // planted offset must stay inside (0,1)
  auto wild = planted_progression_family(1, 3.0, [](double) { return 0.0; });
  CHECK_THROWS_AS(remainder_experiment(wild, {1e-2, 1e-3, 1e-4}, 1, 3.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(planted_progression_family(0, 0.2, [](double) { return 0.0; }),
                  std::invalid_argument);
}

TEST_CASE("stream negation helper") {
  auto s = random_stream(50, 99);
  auto n = negated_stream(s);
  n.validate();
  REQUIRE(n.eigenvalues.size() == s.eigenvalues.size());
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    CHECK(n.eigenvalues[i] == -s.eigenvalues[s.eigenvalues.size() - 1 - i]);
    CHECK(n.multiplicities[i] == s.multiplicities[s.eigenvalues.size() - 1 - i]);
  }
  auto rt = negated_stream(n);
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
    CHECK(rt.eigenvalues[i] == s.eigenvalues[i]);
}

}  // TEST_SUITE
