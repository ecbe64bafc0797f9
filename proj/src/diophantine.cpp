#include "reeblab/diophantine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace reeblab {

namespace mp = boost::multiprecision;

// ---------------------------------------------------------------- evaluators

RealEvaluator evaluator_sqrt(long long n) {
  if (n < 2) throw std::invalid_argument("evaluator_sqrt: n must be >= 2");
  long long r = static_cast<long long>(std::llround(std::sqrt(double(n))));
  if (r * r == n)
    throw std::invalid_argument(
        "evaluator_sqrt: perfect square, use evaluator_rational");
  return RealEvaluator{
      [n](int) { return sqrt(BigFloat(n)); }, 480, "sqrt(" + std::to_string(n) + ")"};
}

RealEvaluator evaluator_golden() {
  return RealEvaluator{
      [](int) { return (1 + sqrt(BigFloat(5))) / 2; }, 480, "golden"};
}

RealEvaluator evaluator_rational(long long p, long long q) {
  if (q <= 0) throw std::invalid_argument("evaluator_rational: q must be > 0");
  return RealEvaluator{
      [p, q](int) { return BigFloat(p) / BigFloat(q); }, 480,
      std::to_string(p) + "/" + std::to_string(q)};
}

RealEvaluator evaluator_liouville(int terms) {
  if (terms < 1 || terms > 5)
    throw std::invalid_argument("evaluator_liouville: terms must be in [1,5]");
  // max_digits is capped below the 2*terms! digits that exact termination
  // would need, so the truncation keeps the approximation behavior of the
  // full series instead of collapsing to a detected rational
  long long last_fact = 1;
  for (int k = 1; k <= terms; ++k) last_fact *= k;
  int cap = std::min<long long>(470, 2 * last_fact - 10);
  return RealEvaluator{
      [terms](int) {
        BigFloat v = 0;
        long long fact = 1;
        for (int k = 1; k <= terms; ++k) {
          fact *= k;
          v += pow(BigFloat(10), -fact);
        }
        return v;
      },
      std::max(cap, 40), "liouville(" + std::to_string(terms) + ")"};
}

RealEvaluator evaluator_decimal(const std::string& text) {
  BigFloat probe(text);  // throws on malformed input
  (void)probe;
  int sig = 0;
  for (char c : text)
    if (c >= '0' && c <= '9') ++sig;
  int digits = std::max(1, std::min(470, sig - 2));
  return RealEvaluator{[text](int) { return BigFloat(text); }, digits,
                       text.size() <= 24 ? text : text.substr(0, 21) + "..."};
}

// ------------------------------------------------------------------ cf_expand

static double log10_of(const BigInt& v) {
  if (v <= 1) return 0.0;
  return log10(BigFloat(v)).convert_to<double>();
}

ContinuedFraction cf_expand(const RealEvaluator& ev, int depth,
                            bool allow_partial) {
  if (depth < 1) throw std::invalid_argument("cf_expand: depth must be >= 1");
  const int budget = std::min(ev.max_digits, 470);
  ContinuedFraction cf;
  BigFloat x = ev.eval(budget);

  BigInt pm2 = 0, pm1 = 1;  // p_{-2}, p_{-1}
  BigInt qm2 = 1, qm1 = 0;
  for (int k = 0; k < depth; ++k) {
    BigInt a = BigInt(floor(x).convert_to<mp::cpp_int>());
    BigFloat frac = x - BigFloat(a);
    // how many meaningful digits survive after dividing out q_k^2
    BigInt q_next = a * qm1 + qm2;
    double remaining = budget - 2.0 * log10_of(q_next) - 8.0;
    if (remaining < 12.0) {
      if (allow_partial) {
        cf.precision_limited = true;
        break;
      }
      throw PrecisionExhausted("cf_expand(" + ev.label + "): precision exhausted at term " +
                               std::to_string(k));
    }
    const BigFloat tol = pow(BigFloat(10), -remaining);
    if (frac > 1 - tol) {  // x was an integer blurred downward by rounding
      a += 1;
      frac = 0;
      q_next = a * qm1 + qm2;
    }
    if (k > 0 && a < 1)
      throw PrecisionExhausted("cf_expand(" + ev.label +
                               "): lost certainty at term " + std::to_string(k));
    cf.quotients.push_back(a);
    cf.p.push_back(a * pm1 + pm2);
    cf.q.push_back(q_next);
    pm2 = pm1; pm1 = cf.p.back();
    qm2 = qm1; qm1 = cf.q.back();
    cf.digits_used = std::max(cf.digits_used,
                              int(2.0 * log10_of(q_next)) + 8);
    if (frac < tol) {
      cf.terminated = true;
      break;
    }
    x = 1 / frac;
  }
  return cf;
}

// ---------------------------------------------------------------- estimate_mu

MuEstimate estimate_mu(const ContinuedFraction& cf) {
  MuEstimate est;
  if (cf.terminated) {
    est.mu = 1.0;
    est.exact_rational = true;
    return est;
  }
  for (size_t k = 0; k + 1 < cf.q.size(); ++k) {
    if (cf.q[k] < 2) continue;
    est.ratios.push_back(log10_of(cf.q[k + 1]) / log10_of(cf.q[k]));
  }
  if (est.ratios.empty())
    throw std::invalid_argument("estimate_mu: expansion too short");
  est.window_start = int(0.4 * double(est.ratios.size()));
  double best = 0.0;
  for (size_t k = est.window_start; k < est.ratios.size(); ++k)
    best = std::max(best, est.ratios[k]);
  est.mu = 1.0 + best;
  return est;
}

// ----------------------------------------------------------------- nu (lines)

double torus_line_distance(const std::vector<double>& a, double t) {
  double s2 = 0.0;
  for (double aj : a) {
    double f = aj * t;
    f -= std::floor(f);
    double d = std::min(f, 1.0 - f);
    s2 += d * d;
  }
  return std::sqrt(s2);
}

namespace {

double golden_minimize(const std::vector<double>& a, double lo, double hi,
                       int iters) {
  constexpr double invphi = 0.6180339887498949;
  double c = hi - invphi * (hi - lo);
  double d = lo + invphi * (hi - lo);
  double fc = torus_line_distance(a, c);
  double fd = torus_line_distance(a, d);
  for (int i = 0; i < iters && hi - lo > 1e-13; ++i) {
    if (fc < fd) {
      hi = d; d = c; fd = fc;
      c = hi - invphi * (hi - lo);
      fc = torus_line_distance(a, c);
    } else {
      lo = c; c = d; fc = fd;
      d = lo + invphi * (hi - lo);
      fd = torus_line_distance(a, d);
    }
  }
  return fc < fd ? c : d;
}

}  // namespace

NuEstimate estimate_nu(const std::vector<double>& a, const NuConfig& cfg) {
  if (a.empty()) throw std::invalid_argument("estimate_nu: empty direction");
  for (double v : a)
    if (!std::isfinite(v))
      throw std::invalid_argument("estimate_nu: non-finite direction entry");
  if (!(cfg.t_min > 0 && cfg.t_max > cfg.t_min))
    throw std::invalid_argument("estimate_nu: bad time range");

  double lip = 0.0;
  for (double v : a) lip += v * v;
  lip = std::sqrt(lip);

  NuEstimate est;
  double record = std::numeric_limits<double>::infinity();
  const size_t cells = size_t((cfg.t_max - cfg.t_min) / cfg.coarse_dt);
  double d_left = torus_line_distance(a, cfg.t_min);

  for (size_t i = 0; i < cells; ++i) {
    const double t0 = cfg.t_min + double(i) * cfg.coarse_dt;
    const double t1 = t0 + cfg.coarse_dt;
    const double d_right = torus_line_distance(a, t1);
    // Lipschitz envelope: nothing inside the cell dips below this
    const double floor_est = 0.5 * (d_left + d_right - lip * cfg.coarse_dt);
    d_left = d_right;
    if (floor_est >= record) continue;

    const int fine_n = std::max(2, int(cfg.coarse_dt / cfg.fine_dt));
    const double fdt = cfg.coarse_dt / fine_n;
    std::vector<double> fv(fine_n + 3);
    for (int j = -1; j <= fine_n + 1; ++j)
      fv[j + 1] = torus_line_distance(a, t0 + j * fdt);
    // only polished local minima count as record events; logging every
    // improving sample would flood the fit with points from one descent.
    // The Lipschitz margin admits grid minima whose polished floor can
    // still undercut the record.
    for (int j = 0; j <= fine_n; ++j) {
      const double d = fv[j + 1];
      if (d >= record + lip * fdt || d > fv[j] || d > fv[j + 2]) continue;
      const double t = t0 + j * fdt;
      const double tp = golden_minimize(a, std::max(1e-9, t - fdt), t + fdt,
                                        cfg.polish_iters);
      const double dp = std::min(d, torus_line_distance(a, tp));
      if (dp < record) {
        record = dp;
        est.records.emplace_back(dp < d ? tp : t, dp);
        if (dp < cfg.rational_cutoff) {
          est.rational_direction = true;
          est.nu = 1.0;
          return est;
        }
      }
    }
  }

  if (est.records.size() < 2)
    throw std::runtime_error("estimate_nu: too few record events to fit");

  size_t start = size_t(cfg.window_fraction * double(est.records.size()));
  if (est.records.size() - start < 3)
    start = est.records.size() >= 3 ? est.records.size() - 3 : 0;
  est.window_start = int(start);

  // least squares of ln d against ln t over the asymptotic window
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const size_t n = est.records.size() - start;
  for (size_t k = start; k < est.records.size(); ++k) {
    const double x = std::log(est.records[k].first);
    const double y = std::log(est.records[k].second);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  const double denom = double(n) * sxx - sx * sx;
  if (std::abs(denom) < 1e-12)
    throw std::runtime_error("estimate_nu: degenerate record series");
  est.fit_slope = (double(n) * sxy - sx * sy) / denom;
  const double intercept = (sy - est.fit_slope * sx) / double(n);
  double ss = 0;
  for (size_t k = start; k < est.records.size(); ++k) {
    const double x = std::log(est.records[k].first);
    const double y = std::log(est.records[k].second);
    const double r = y - (est.fit_slope * x + intercept);
    ss += r * r;
  }
  est.fit_residual = std::sqrt(ss / double(n));
  est.nu = std::max(1.0, 1.0 - est.fit_slope);
  return est;
}

}  // namespace reeblab
