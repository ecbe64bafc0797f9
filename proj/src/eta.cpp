#include "reeblab/eta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "reeblab/rng.hpp"  // kPi
#include "reeblab/summation.hpp"

namespace reeblab {

double sign_erfc(double lambda) {
  if (lambda == 0.0) return 0.0;
  double tail = std::erfc(std::abs(lambda));
  return lambda > 0.0 ? tail : -tail;
}

double erfc_tail_estimate(const EigenvalueStream& stream) {
  if (stream.eigenvalues.empty() || !(stream.cutoff > 0.0)) return 0.0;
  double density =
      static_cast<double>(stream.total_count()) / (2.0 * stream.cutoff);
  return density * std::exp(-stream.cutoff * stream.cutoff);
}

EtaResult eta_erfc(const EigenvalueStream& stream) {
  EtaResult r;
  r.method = EtaResult::Method::erfc_tail;
  r.cutoff = stream.cutoff;
  if (stream.eigenvalues.empty()) return r;
  if (stream.multiplicities.size() != stream.eigenvalues.size())
    throw std::invalid_argument("eta_erfc: malformed stream");

  // net integer coefficient per |lambda|: a symmetric multiset cancels to
  // zero exactly and negation flips every term bit for bit
  std::map<double, long long> net;
  for (std::size_t j = 0; j < stream.eigenvalues.size(); ++j) {
    double lam = stream.eigenvalues[j];
    long long mult = stream.multiplicities[j];
    if (lam == 0.0) {
      r.zero_modes += mult;
      continue;
    }
    net[std::abs(lam)] += (lam > 0.0) ? mult : -mult;
  }
  std::vector<double> terms;
  terms.reserve(net.size());
  for (const auto& [abs_lam, coef] : net)
    terms.push_back(static_cast<double>(coef) * std::erfc(abs_lam));
  r.value = pairwise_sum(terms);
  r.tail_bound = erfc_tail_estimate(stream);
  return r;
}

double hurwitz_zeta(double s, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("hurwitz_zeta: a must be positive");
  if (std::abs(s - 1.0) < 1e-9)
    throw std::invalid_argument("hurwitz_zeta: pole at s = 1");
  const int N = 24;
  std::vector<double> head;
  head.reserve(N);
  for (int n = 0; n < N; ++n) head.push_back(std::pow(n + a, -s));
  double sum = pairwise_sum(head);
  const double x = N + a;
  sum += std::pow(x, 1.0 - s) / (s - 1.0);
  sum += 0.5 * std::pow(x, -s);
  // Euler-Maclaurin tail: B_{2j}/(2j)! (s)_{2j-1} x^{-s-2j+1}
  static const double kBernoulli[] = {1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0,
                                      -1.0 / 30.0, 5.0 / 66.0};
  double poch = s;        // (s)_{2j-1}
  double factorial = 2.0; // (2j)!
  for (int j = 1; j <= 5; ++j) {
    sum += kBernoulli[j - 1] / factorial * poch * std::pow(x, -s - 2 * j + 1);
    poch *= (s + 2 * j - 1) * (s + 2 * j);
    factorial *= (2 * j + 1) * (2 * j + 2);
  }
  return sum;
}

EtaResult eta_zeta_progression(double a, double cutoff) {
  if (!(a > 0.0) || !(a < 1.0))
    throw std::domain_error("eta_zeta_progression: a must lie in (0,1)");
  if (!(cutoff > 1.0))
    throw std::domain_error("eta_zeta_progression: cutoff must exceed 1");
  EtaResult r;
  r.method = EtaResult::Method::zeta_hurwitz;
  r.cutoff = cutoff;
  // zeta(0,a) - zeta(0,1-a) = (1/2 - a) - (1/2 - (1-a))
  r.value = 1.0 - 2.0 * a;
  // cross-check diagnostic: partial sums at s = 2 against the continuation
  double exact2 = hurwitz_zeta(2.0, a) - hurwitz_zeta(2.0, 1.0 - a);
  r.tail_bound = std::abs(progression_partial_eta(a, 2.0, cutoff) - exact2);
  return r;
}

double progression_partial_eta(double a, double s, double cutoff) {
  if (!(a > 0.0) || !(a < 1.0))
    throw std::domain_error("progression_partial_eta: a must lie in (0,1)");
  auto stream = synthesize_progression(a, cutoff);
  std::vector<double> terms;
  terms.reserve(stream.eigenvalues.size());
  for (double lam : stream.eigenvalues) {
    if (lam == 0.0) continue;
    double t = std::pow(std::abs(lam), -s);
    terms.push_back(lam > 0.0 ? t : -t);
  }
  return pairwise_sum(terms);
}

SmallTProvider progression_small_t(double a, double scale) {
  if (!(a > 0.0) || !(a < 1.0))
    throw std::invalid_argument("progression_small_t: a must lie in (0,1)");
  if (!(scale > 0.0))
    throw std::invalid_argument("progression_small_t: scale must be positive");
  return [a, scale](const EigenvalueStream& stream) {
    if (stream.eigenvalues.empty())
      throw std::invalid_argument("progression small-t: empty stream");
    long long mult = stream.multiplicities.front();
    for (long long m : stream.multiplicities)
      if (m != mult)
        throw std::invalid_argument(
            "progression small-t: stream multiplicity is not uniform");
    double sum = 0.0;
    for (int k = 1; k <= 20000; ++k) {
      double expo = kPi * kPi * k * k / (scale * scale);
      if (expo > 700.0) break;  // exp underflow, series finished
      double envelope = std::exp(-expo) / k;
      sum += std::sin(2.0 * kPi * k * a) * envelope;
      // cut on the monotone envelope, not the term: sin(2*pi*k*a) can
      // vanish at isolated k while later terms still matter
      if (envelope < 1e-18 && expo > 1.0) break;
    }
    return static_cast<double>(mult) * (2.0 / kPi) * sum;
  };
}

EtaResult eta_full_from_stream(const EigenvalueStream& stream,
                               const SmallTProvider& small_t) {
  EtaResult r = eta_erfc(stream);
  if (small_t) {
    r.value += small_t(stream);
    r.method = EtaResult::Method::split;
    r.small_t_included = true;
  }
  return r;
}

EigenvalueStream negated_stream(const EigenvalueStream& stream) {
  EigenvalueStream out;
  out.cutoff = stream.cutoff;
  out.label = stream.label.empty() ? "negated" : "-" + stream.label;
  out.eigenvalues.reserve(stream.eigenvalues.size());
  out.multiplicities.reserve(stream.multiplicities.size());
  for (std::size_t j = stream.eigenvalues.size(); j-- > 0;) {
    out.eigenvalues.push_back(-stream.eigenvalues[j]);
    out.multiplicities.push_back(stream.multiplicities[j]);
  }
  return out;
}

EigenvalueStream scaled_stream(const EigenvalueStream& stream, double c) {
  if (!(c > 0.0))
    throw std::invalid_argument("scaled_stream: scale must be positive");
  EigenvalueStream out = stream;
  for (auto& lam : out.eigenvalues) lam *= c;
  out.cutoff *= c;
  return out;
}

StreamFamily planted_progression_family(int m, double leading,
                                        std::function<double(double)> remainder,
                                        double cutoff) {
  if (m < 1) throw std::invalid_argument("planted family: m must be >= 1");
  if (!remainder) throw std::invalid_argument("planted family: remainder missing");
  return [m, leading, remainder, cutoff](double h) {
    if (!(h > 0.0) || !(h < 1.0))
      throw std::invalid_argument("planted family: h must lie in (0,1)");
    double hm = std::pow(h, m);
    long long mult = std::llround(1.0 / hm);
    if (mult < 1) mult = 1;
    double target = leading + remainder(h);  // desired h^m eta
    double a = 0.5 * (1.0 - target / (hm * static_cast<double>(mult)));
    if (!(a > 0.0) || !(a < 1.0))
      throw std::invalid_argument(
          "planted family: target remainder pushes the progression offset out of (0,1)");
    StreamFamilyPoint pt;
    pt.stream = synthesize_progression(a, cutoff);
    for (auto& mu : pt.stream.multiplicities) mu = mult;
    pt.small_t = progression_small_t(a);
    return pt;
  };
}

namespace {

struct LineFit {
  double slope = 0.0, intercept = 0.0, rss = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < n; ++i) {
    double resid = y[i] - (f.intercept + f.slope * x[i]);
    f.rss += resid * resid;
  }
  return f;
}

}  // namespace

RemainderFit remainder_experiment(const StreamFamily& family,
                                  const std::vector<double>& h_values, int m,
                                  double leading) {
  if (!family) throw std::invalid_argument("remainder_experiment: family missing");
  if (h_values.size() < 3)
    throw std::invalid_argument("remainder_experiment: degenerate family, need >= 3 h values");
  for (double h : h_values)
    if (!(h > 0.0) || !(h < 1.0))
      throw std::invalid_argument("remainder_experiment: h values must lie in (0,1)");
  for (std::size_t i = 0; i + 1 < h_values.size(); ++i)
    for (std::size_t j = i + 1; j < h_values.size(); ++j)
      if (h_values[i] == h_values[j])
        throw std::invalid_argument("remainder_experiment: degenerate family, repeated h");

  RemainderFit fit;
  fit.h_values = h_values;
  for (double h : h_values) {
    StreamFamilyPoint pt = family(h);
    EtaResult e = eta_full_from_stream(pt.stream, pt.small_t);
    double R = std::pow(h, m) * e.value - leading;
    fit.remainders.push_back(R);
    fit.amplitude = std::max(fit.amplitude, std::abs(R));
  }
  if (fit.amplitude < 1e-12) {
    fit.zero_remainder = true;
    return fit;
  }

  std::vector<double> lr, lh, lll;
  for (std::size_t i = 0; i < fit.remainders.size(); ++i) {
    double R = std::abs(fit.remainders[i]);
    if (R < 1e-300) continue;
    lr.push_back(std::log(R));
    lh.push_back(std::log(h_values[i]));
    lll.push_back(-std::log(std::abs(std::log(h_values[i]))));
  }
  if (lr.size() < 3)
    throw std::invalid_argument(
        "remainder_experiment: degenerate family, fewer than 3 usable remainders");
  LineFit pw = least_squares(lh, lr);
  fit.power_exponent = pw.slope;
  fit.power_log_constant = pw.intercept;
  fit.power_rss = pw.rss;
  LineFit lg = least_squares(lll, lr);
  fit.log_exponent = lg.slope;
  fit.log_log_constant = lg.intercept;
  fit.log_rss = lg.rss;
  fit.prefers_log = fit.log_rss < fit.power_rss;
  return fit;
}

}  // namespace reeblab
