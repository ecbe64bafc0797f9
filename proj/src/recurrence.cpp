#include "reeblab/recurrence.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "reeblab/rng.hpp"

namespace reeblab {

double RecurrenceConfig::resolved_dt(const Flow& flow) const {
  if (dt > 0) return dt;
  return eps / (2.0 * flow.velocity_bound());
}

void RecurrenceConfig::validate(const Flow& flow, bool sampling) const {
  if (!(T > 0)) throw std::invalid_argument("recurrence: T must be positive");
  if (!(eps > 0)) throw std::invalid_argument("recurrence: eps must be positive");
  const double step = resolved_dt(flow);
  // grid fine enough that an eps/2-deep hit cannot be stepped over
  if (step > eps / (2.0 * flow.velocity_bound()) * (1 + 1e-12))
    throw std::invalid_argument(
        "recurrence: dt must satisfy dt <= eps / (2 * velocity_bound)");
  if (sampling && n_samples < 100)
    throw std::invalid_argument("recurrence: n_samples must be >= 100");
  if (workers < 1) throw std::invalid_argument("recurrence: workers must be >= 1");
}

std::pair<double, double> wilson_interval(long long hits, long long n) {
  constexpr double z = 1.959963984540054;
  const double p = double(hits) / double(n);
  const double z2n = z * z / double(n);
  const double center = (p + z2n / 2) / (1 + z2n);
  const double half =
      z * std::sqrt(p * (1 - p) / double(n) + z2n / (4.0 * double(n))) /
      (1 + z2n);
  // the exact interval always contains p; keep that under rounding
  return {std::min(p, std::max(0.0, center - half)),
          std::max(p, std::min(1.0, center + half))};
}

namespace {

double test_radius(const Flow& flow, const RecurrenceConfig& cfg,
                   bool extended) {
  if (!extended) return cfg.eps;
  const double slack =
      1.0 + cfg.resolved_dt(flow) * flow.velocity_bound() / cfg.eps;
  return cfg.eps * (1.0 + slack);
}

}  // namespace

bool is_recurrent(const Flow& flow, const FlowPoint& x,
                  const RecurrenceConfig& cfg, bool extended) {
  cfg.validate(flow, /*sampling=*/false);
  const double t_start = flow.t0() / 2.0;
  if (cfg.T < t_start) return false;  // empty time window
  return flow.first_return(x, t_start, cfg.T, cfg.resolved_dt(flow),
                           test_radius(flow, cfg, extended)) >= 0.0;
}

namespace {

RecurrenceEstimate run_estimate(const Flow& flow, const RecurrenceConfig& cfg,
                                bool extended, bool lifted) {
  cfg.validate(flow);
  const auto wall0 = std::chrono::steady_clock::now();
  const double t_start = flow.t0() / 2.0;
  const double step = cfg.resolved_dt(flow);
  const double radius = test_radius(flow, cfg, extended);
  const bool window_empty = cfg.T < t_start;

  const double ops_per_sample =
      lifted ? 8.0 : std::max(0.0, (cfg.T - t_start) / step);
  charge_budget(double(cfg.n_samples) * std::max(1.0, ops_per_sample),
                lifted ? "estimate_lifted_volume" : "estimate_volume");

  const int workers = std::max(1, cfg.workers);
  std::vector<long long> hits_by_worker(workers, 0);
  auto body = [&](int w) {
    Rng rng = Rng::for_worker(cfg.seed, w);
    const long long lo = cfg.n_samples * w / workers;
    const long long hi = cfg.n_samples * (w + 1) / workers;
    long long hits = 0;
    for (long long i = lo; i < hi; ++i) {
      FlowPoint x = flow.sample(rng);
      if (window_empty) continue;
      if (lifted) {
        const double t = rng.uniform(t_start, cfg.T);
        FlowPoint y = x;
        flow.evolve_inplace(y.x.data(), t);
        if (flow.distance(x, y) <= radius) ++hits;
      } else {
        if (flow.first_return(x, t_start, cfg.T, step, radius) >= 0) ++hits;
      }
    }
    hits_by_worker[w] = hits;
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& th : pool) th.join();
  }

  RecurrenceEstimate est;
  est.n_samples = cfg.n_samples;
  for (long long h : hits_by_worker) est.hits += h;
  est.fraction = double(est.hits) / double(est.n_samples);
  std::tie(est.ci_low, est.ci_high) = wilson_interval(est.hits, est.n_samples);
  est.measure = lifted ? est.fraction * std::max(0.0, cfg.T - t_start)
                       : est.fraction;
  est.T = cfg.T;
  est.eps = cfg.eps;
  est.dt = step;
  est.t_start = t_start;
  est.extended = extended;
  est.lifted = lifted;
  est.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0)
          .count();
  return est;
}

}  // namespace

RecurrenceEstimate estimate_volume(const Flow& flow,
                                   const RecurrenceConfig& cfg,
                                   bool extended) {
  return run_estimate(flow, cfg, extended, /*lifted=*/false);
}

RecurrenceEstimate estimate_lifted_volume(const Flow& flow,
                                          const RecurrenceConfig& cfg) {
  return run_estimate(flow, cfg, /*extended=*/false, /*lifted=*/true);
}

ScalingFit scaling_fit(
    const std::vector<std::pair<double, RecurrenceEstimate>>& series,
    bool power_law) {
  bool any_interior = false;
  for (const auto& [t, est] : series)
    if (est.fraction > 0.0 && est.fraction < 1.0) any_interior = true;
  if (!any_interior)
    throw std::runtime_error(
        "scaling_fit: degenerate series, every volume is 0 or 1");

  struct Pt { double x, y, w; };
  std::vector<Pt> pts;
  for (const auto& [t, est] : series) {
    if (!(t > 0)) throw std::invalid_argument("scaling_fit: T must be positive");
    if (est.hits <= 0 || est.ci_low <= 0.0) continue;
    if (est.ci_high / est.ci_low >= 3.0) continue;  // too noisy to weight
    const double x = power_law ? std::log(t) : t;
    // interval width transfers to ln(measure) unchanged: measure is the
    // fraction times a t-dependent constant
    const double sigma =
        (std::log(est.ci_high) - std::log(est.ci_low)) / (2 * 1.959963984540054);
    pts.push_back({x, std::log(est.measure), 1.0 / (sigma * sigma)});
  }
  if (pts.size() < 4)
    throw std::runtime_error(
        "scaling_fit: needs at least 4 usable points (nonzero hits, "
        "ci_high/ci_low < 3); got " + std::to_string(pts.size()));

  double sw = 0, swx = 0, swy = 0;
  for (const auto& p : pts) { sw += p.w; swx += p.w * p.x; swy += p.w * p.y; }
  const double xbar = swx / sw, ybar = swy / sw;
  double sxx = 0, sxy = 0;
  for (const auto& p : pts) {
    sxx += p.w * (p.x - xbar) * (p.x - xbar);
    sxy += p.w * (p.x - xbar) * (p.y - ybar);
  }
  if (sxx <= 0)
    throw std::runtime_error("scaling_fit: degenerate abscissas");

  ScalingFit fit;
  fit.n_used = int(pts.size());
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double ss = 0;
  for (const auto& p : pts) {
    const double r = p.y - (fit.intercept + fit.slope * p.x);
    ss += p.w * r * r;
  }
  fit.residual = std::sqrt(ss / sw);
  const double slope_sd = 1.0 / std::sqrt(sxx);
  fit.slope_ci_low = fit.slope - 1.959963984540054 * slope_sd;
  fit.slope_ci_high = fit.slope + 1.959963984540054 * slope_sd;
  return fit;
}

}  // namespace reeblab
