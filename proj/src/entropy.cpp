#include "reeblab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace reeblab {

namespace {

// conflict = every grid time in [0, T] keeps the pair strictly inside eps
bool bowen_conflict(const Flow& flow, const double* x, const double* y,
                    double T, double dt, double eps, std::vector<double>& bx,
                    std::vector<double>& by) {
  if (flow.distance_raw(x, y) >= eps) return false;
  const int steps = int(std::floor(T / dt + 1e-9));
  if (steps == 0) return true;
  bx.assign(x, x + flow.coord_size());
  by.assign(y, y + flow.coord_size());
  for (int i = 1; i <= steps; ++i) {
    flow.evolve_inplace(bx.data(), dt);
    flow.evolve_inplace(by.data(), dt);
    if (flow.distance_raw(bx.data(), by.data()) >= eps) return false;
  }
  return true;
}

// spatial hash over the flow's store/query keys; cell width >= `cell` in
// every coordinate so a +/-1 neighbourhood scan covers any pair within
// `cell` of each other
class GridIndex {
 public:
  GridIndex(const Flow& flow, double cell) : flow_(flow), cell_(cell) {
    const auto period = flow.hash_period();
    dim_ = flow.hash_dim();
    width_.resize(dim_);
    ncells_.resize(dim_);
    for (int d = 0; d < dim_; ++d) {
      if (period[d] > 0.0) {
        ncells_[d] = std::max<long long>(1, (long long)std::floor(period[d] / cell));
        width_[d] = period[d] / double(ncells_[d]);
      } else {
        ncells_[d] = 0;  // unbounded
        width_[d] = cell;
      }
    }
  }

  void clear() {
    buckets_.clear();
    stamp_.clear();
    epoch_ = 0;
  }

  void insert(std::int32_t id, const double* p) {
    keys_.clear();
    flow_.store_keys(p, keys_);
    for (const auto& k : keys_) buckets_[cell_key(k.data())].push_back(id);
    if (std::size_t(id) >= stamp_.size()) stamp_.resize(id + 1, 0);
  }

  // ids of every stored point that could be within `cell_` of p
  void query(const double* p, std::vector<std::int32_t>& out) const {
    out.clear();
    ++epoch_;
    keys_.clear();
    flow_.query_keys(p, keys_);
    base_.resize(dim_);
    probe_.resize(dim_);
    for (const auto& k : keys_) {
      for (int d = 0; d < dim_; ++d) base_[d] = raw_index(k[d], d);
      scan_neighbors(base_, probe_, 0, out);
    }
  }

 private:
  const Flow& flow_;
  double cell_;
  int dim_ = 0;
  std::vector<double> width_;
  std::vector<long long> ncells_;
  std::unordered_map<std::uint64_t, std::vector<std::int32_t>> buckets_;
  mutable std::vector<std::vector<double>> keys_;
  mutable std::vector<long long> base_, probe_;
  mutable std::vector<std::int32_t> stamp_;
  mutable std::int32_t epoch_ = 0;

  long long raw_index(double v, int d) const {
    long long i = (long long)std::floor(v / width_[d]);
    if (ncells_[d] > 0) {
      i %= ncells_[d];
      if (i < 0) i += ncells_[d];
    }
    return i;
  }

  std::uint64_t cell_key(const double* k) const {
    std::uint64_t h = 1469598103934665603ull;
    for (int d = 0; d < dim_; ++d) {
      std::uint64_t v = (std::uint64_t)(raw_index(k[d], d) + (1ll << 32));
      h = (h ^ v) * 1099511628211ull;
      h ^= h >> 29;
    }
    return h;
  }

  void scan_neighbors(std::vector<long long>& base, std::vector<long long>& probe,
                      int d, std::vector<std::int32_t>& out) const {
    if (d == dim_) {
      std::uint64_t h = 1469598103934665603ull;
      for (int e = 0; e < dim_; ++e) {
        std::uint64_t v = (std::uint64_t)(probe[e] + (1ll << 32));
        h = (h ^ v) * 1099511628211ull;
        h ^= h >> 29;
      }
      auto it = buckets_.find(h);
      if (it == buckets_.end()) return;
      for (std::int32_t id : it->second) {
        if (std::size_t(id) < stamp_.size() && stamp_[id] == epoch_) continue;
        if (std::size_t(id) >= stamp_.size()) stamp_.resize(id + 1, 0);
        stamp_[id] = epoch_;
        out.push_back(id);
      }
      return;
    }
    long long seen[3];
    int n_seen = 0;
    for (int off = -1; off <= 1; ++off) {
      long long i = base[d] + off;
      if (ncells_[d] > 0) {
        i %= ncells_[d];
        if (i < 0) i += ncells_[d];
      }
      bool dup = false;
      for (int s = 0; s < n_seen; ++s) dup |= (seen[s] == i);
      if (dup) continue;
      seen[n_seen++] = i;
      probe[d] = i;
      scan_neighbors(base, probe, d + 1, out);
    }
  }
};

void fit_packing_slope(PackingResult& r) {
  const int S = int(r.T_values.size());
  r.local_slopes.clear();
  for (int i = 0; i + 1 < S; ++i) {
    const double dT = r.T_values[i + 1] - r.T_values[i];
    r.local_slopes.push_back(
        (std::log(double(r.N[i + 1])) - std::log(double(r.N[i]))) / dT);
  }
  r.saturated_from = -1;
  int last = S - 1;  // last trusted point index
  if (!r.local_slopes.empty()) {
    int arg = 0;
    for (int i = 1; i < int(r.local_slopes.size()); ++i)
      if (r.local_slopes[i] > r.local_slopes[arg]) arg = i;
    const double s_max = r.local_slopes[arg];
    if (s_max > 1e-9) {
      for (int i = arg; i < int(r.local_slopes.size()); ++i) {
        if (r.local_slopes[i] < 0.6 * s_max) {
          last = i;  // slope i connects points i, i+1; keep the left end
          r.saturated_from = i + 1;
          break;
        }
      }
    }
  }
  // least squares of ln N over the trusted points
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int n = last + 1;
  for (int i = 0; i < n; ++i) {
    const double xv = r.T_values[i], yv = std::log(double(r.N[i]));
    sx += xv;
    sy += yv;
    sxx += xv * xv;
    sxy += xv * yv;
  }
  const double den = n * sxx - sx * sx;
  r.fitted_slope = (n < 2 || std::abs(den) < 1e-30)
                       ? 0.0
                       : (n * sxy - sx * sy) / den;
}

}  // namespace

double bowen_distance(const Flow& flow, const FlowPoint& x, const FlowPoint& y,
                      double T, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("bowen_distance: dt must be > 0");
  if (T < 0.0) throw std::invalid_argument("bowen_distance: T must be >= 0");
  double best = flow.distance(x, y);
  const int steps = int(std::floor(T / dt + 1e-9));
  FlowPoint px = x, py = y;
  for (int i = 1; i <= steps; ++i) {
    flow.evolve_inplace(px.x.data(), dt);
    flow.evolve_inplace(py.x.data(), dt);
    best = std::max(best, flow.distance(px, py));
  }
  return best;
}

void BowenConfig::validate() const {
  if (eps <= 0.0) throw std::invalid_argument("BowenConfig: eps must be > 0");
  if (dt <= 0.0) throw std::invalid_argument("BowenConfig: dt must be > 0");
  if (T < 0.0) throw std::invalid_argument("BowenConfig: T must be >= 0");
  if (cloud.empty()) throw std::invalid_argument("BowenConfig: cloud is empty");
  if (greedy_restarts < 1)
    throw std::invalid_argument("BowenConfig: greedy_restarts must be >= 1");
}

PackingResult max_separated_schedule(const Flow& flow,
                                     const std::vector<double>& T_schedule,
                                     const BowenConfig& cfg) {
  cfg.validate();
  if (T_schedule.empty())
    throw std::invalid_argument("max_separated_schedule: empty T schedule");
  for (size_t i = 0; i + 1 < T_schedule.size(); ++i)
    if (T_schedule[i + 1] <= T_schedule[i])
      throw std::invalid_argument(
          "max_separated_schedule: T schedule must increase");
  if (T_schedule.front() < 0.0)
    throw std::invalid_argument("max_separated_schedule: negative T");

  const long long n = (long long)cfg.cloud.size();
  charge_budget(double(cfg.greedy_restarts) * double(n) *
                    (T_schedule.back() / cfg.dt + 2.0) * 2.0,
                "separated-set packing");

  PackingResult result;
  result.eps = cfg.eps;
  result.T_values = T_schedule;
  result.N.assign(T_schedule.size(), 0);
  result.cloud_size = n;

  const int cs = flow.coord_size();
  const double dt = cfg.dt, eps = cfg.eps;
  std::vector<int> stage_steps(T_schedule.size());
  for (size_t s = 0; s < T_schedule.size(); ++s)
    stage_steps[s] = int(std::floor(T_schedule[s] / dt + 1e-9));

  // flat cloud copy: the step-0 scans walk it hard
  std::vector<double> c0(std::size_t(n) * cs);
  for (long long i = 0; i < n; ++i)
    std::copy(cfg.cloud[i].x.begin(), cfg.cloud[i].x.end(),
              c0.begin() + std::size_t(i) * cs);

  // evolution caches, indexed by cloud id; every cached state sits on the
  // dt grid and is produced by the one evolve sequence from step 0, so a
  // resumed scan sees bit-for-bit the states a from-scratch scan would
  std::vector<double> pend, fx, fy, cend;
  std::vector<std::int32_t> pend_step, fstep, witness, cend_step;

  std::vector<double> bx, by;
  std::vector<std::int32_t> order(n), neighbors;
  for (long long i = 0; i < n; ++i) order[i] = std::int32_t(i);

  auto advance = [&](double* st, std::int32_t& cur, int target) {
    for (; cur < target; ++cur) flow.evolve_inplace(st, dt);
  };

  for (int r = 0; r < cfg.greedy_restarts; ++r) {
    Rng rng = Rng::for_worker(cfg.seed, std::uint64_t(r));
    for (long long i = n - 1; i > 0; --i) {
      const long long j = (long long)(rng.uniform() * double(i + 1));
      std::swap(order[i], order[std::min(j, i)]);
    }

    GridIndex index(flow, eps);
    std::vector<std::int32_t> accepted;
    // pool of still-rejected candidates; each remembers the accepted point
    // that blocked it and the pair's evolved states, so a pair that keeps
    // conflicting as T grows is rechecked incrementally, not from scratch
    std::vector<std::int32_t> pool = order, next_pool;
    witness.assign(n, -1);
    fstep.assign(n, 0);
    fx.assign(std::size_t(n) * cs, 0.0);
    fy.assign(std::size_t(n) * cs, 0.0);
    pend = c0;
    pend_step.assign(n, 0);
    cend.clear();
    cend_step.clear();

    for (size_t stage = 0; stage < T_schedule.size(); ++stage) {
      const int steps = stage_steps[stage];
      next_pool.clear();
      for (size_t pi = 0; pi < pool.size(); ++pi) {
        const std::int32_t cand = pool[pi];
        const double* cp = c0.data() + std::size_t(cand) * cs;
        double* cand_fx = fx.data() + std::size_t(cand) * cs;
        double* cand_fy = fy.data() + std::size_t(cand) * cs;
        const std::int32_t w = witness[cand];
        if (w >= 0) {
          bool conflict = true;
          for (int i = fstep[cand]; i < steps; ++i) {
            flow.evolve_inplace(cand_fx, dt);
            flow.evolve_inplace(cand_fy, dt);
            if (flow.distance_raw(cand_fx, cand_fy) >= eps) {
              conflict = false;
              break;
            }
          }
          if (conflict) {
            fstep[cand] = steps;
            next_pool.push_back(cand);
            continue;
          }
        }
        double* pe = pend.data() + std::size_t(cand) * cs;
        advance(pe, pend_step[cand], steps);
        index.query(cp, neighbors);
        std::int32_t blocker = -1;
        for (std::int32_t nb : neighbors) {
          const std::int32_t other = accepted[nb];
          if (other == w) continue;  // separation just witnessed above
          const double* op = c0.data() + std::size_t(other) * cs;
          if (flow.distance_raw(cp, op) >= eps) continue;
          // a conflict must also stay inside eps at the last grid time;
          // with the cached endpoint states that test is one distance call
          double* oe = cend.data() + std::size_t(nb) * cs;
          advance(oe, cend_step[nb], steps);
          if (flow.distance_raw(pe, oe) >= eps) continue;
          bx.assign(cp, cp + cs);
          by.assign(op, op + cs);
          bool conflict = true;
          for (int i = 0; i < steps; ++i) {
            flow.evolve_inplace(bx.data(), dt);
            flow.evolve_inplace(by.data(), dt);
            if (flow.distance_raw(bx.data(), by.data()) >= eps) {
              conflict = false;
              break;
            }
          }
          if (conflict) {
            blocker = other;
            break;
          }
        }
        if (blocker >= 0) {
          witness[cand] = blocker;
          fstep[cand] = steps;
          std::copy(bx.begin(), bx.end(), cand_fx);
          std::copy(by.begin(), by.end(), cand_fy);
          next_pool.push_back(cand);
        } else {
          index.insert(std::int32_t(accepted.size()), cp);
          accepted.push_back(cand);
          cend.insert(cend.end(), pe, pe + cs);
          cend_step.push_back(pend_step[cand]);
        }
      }
      pool.swap(next_pool);
      result.N[stage] =
          std::max(result.N[stage], (long long)accepted.size());
    }
    if ((long long)accepted.size() >= (long long)result.final_ids.size())
      result.final_ids = accepted;
  }

  fit_packing_slope(result);
  return result;
}

long long max_separated(const Flow& flow, const BowenConfig& cfg) {
  return max_separated_schedule(flow, {cfg.T}, cfg).N[0];
}

bool verify_packing(const Flow& flow, const std::vector<FlowPoint>& pts,
                    double T, double eps, double dt) {
  std::vector<double> bx, by;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j)
      if (bowen_conflict(flow, pts[i].x.data(), pts[j].x.data(), T, dt, eps,
                         bx, by))
        return false;
  return true;
}

std::vector<FlowPoint> grid_cloud_suspension(int nx, int ns) {
  if (nx < 1 || ns < 1)
    throw std::invalid_argument("grid_cloud_suspension: nx, ns must be >= 1");
  std::vector<FlowPoint> cloud;
  cloud.reserve(std::size_t(nx) * nx * ns);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nx; ++j)
      for (int k = 0; k < ns; ++k)
        cloud.push_back(FlowPoint{{(i + 0.5) / nx, (j + 0.5) / nx,
                                   (k + 0.5) / ns}});
  return cloud;
}

std::vector<FlowPoint> random_cloud(const Flow& flow, long long count,
                                    unsigned long long seed) {
  if (count < 1) throw std::invalid_argument("random_cloud: count must be >= 1");
  Rng rng(seed);
  std::vector<FlowPoint> cloud;
  cloud.reserve(count);
  for (long long i = 0; i < count; ++i) cloud.push_back(flow.sample(rng));
  return cloud;
}

HtopEstimate estimate_htop(const Flow& flow, std::vector<double> eps_schedule,
                           std::vector<double> T_schedule, BowenConfig cfg) {
  if (eps_schedule.empty())
    throw std::invalid_argument("estimate_htop: empty eps schedule");
  std::sort(eps_schedule.begin(), eps_schedule.end(), std::greater<double>());
  HtopEstimate est;
  est.eps_schedule = eps_schedule;
  for (double eps : eps_schedule) {
    cfg.eps = eps;
    PackingResult pr = max_separated_schedule(flow, T_schedule, cfg);
    est.per_eps_slopes.push_back(pr.fitted_slope);
    if (pr.saturated_from >= 0) est.saturation_warning = true;
    est.packings.push_back(std::move(pr));
  }
  est.htop = est.per_eps_slopes.back();
  return est;
}

// ---------------------------------------------------------------- metrics

DistortedMetric base_metric(const Flow& flow) {
  DistortedMetric m;
  m.d = [&flow](const FlowPoint& x, const FlowPoint& y) {
    return flow.distance(x, y);
  };
  m.s = 1.0;
  m.s_minus = false;
  m.c_lo = 1.0;
  m.c_hi = 1.0;
  m.label = "base";
  return m;
}

PairSet default_pair_sampler(const Flow& flow, int n_global, int n_local,
                             const std::vector<double>& deltas,
                             unsigned long long seed) {
  PairSet ps;
  Rng rng(seed);
  for (int i = 0; i < n_global; ++i) {
    FlowPoint x = flow.sample(rng), y = flow.sample(rng);
    ps.pairs.emplace_back(std::move(x), std::move(y));
  }
  for (double delta : deltas)
    for (int i = 0; i < n_local; ++i) {
      FlowPoint x = flow.sample(rng);
      FlowPoint y = flow.perturb(x, delta, rng);
      ps.pairs.emplace_back(std::move(x), std::move(y));
    }
  return ps;
}

LipschitzReport lipschitz_constant(const DistortedMetric& metric,
                                   const Flow& flow, double time,
                                   const PairSet& pairs) {
  LipschitzReport rep;
  rep.time = time;
  std::vector<std::pair<double, double>> scored;  // (d0, ratio)
  for (const auto& [x, y] : pairs.pairs) {
    const double d0 = metric.d(x, y);
    if (!(d0 > 1e-14) || !std::isfinite(d0)) continue;
    const double d1 = metric.d(flow.evolve(x, time), flow.evolve(y, time));
    if (!std::isfinite(d1)) continue;
    const double ratio = d1 / d0;
    rep.L = std::max(rep.L, ratio);
    scored.emplace_back(d0, ratio);
  }
  rep.pairs_used = (long long)scored.size();
  if (scored.empty())
    throw std::runtime_error("lipschitz_constant: no usable pairs");
  // SL: infimum of the ratio over the closest pairs (the sup over shrinking
  // scales is approximated by the smallest-d bucket the sample resolves)
  std::sort(scored.begin(), scored.end());
  const size_t bucket =
      std::max<size_t>(10, std::min<size_t>(25, scored.size() / 10));
  rep.SL = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < std::min(bucket, scored.size()); ++i)
    rep.SL = std::min(rep.SL, scored[i].second);
  return rep;
}

MetricClassReport check_metric_class(const DistortedMetric& metric,
                                     const Flow& flow, int n_pairs,
                                     unsigned long long seed) {
  MetricClassReport rep;
  PairSet ps = default_pair_sampler(flow, n_pairs / 2, n_pairs / 6,
                                    {1e-1, 1e-2, 1e-3}, seed);
  for (const auto& [x, y] : ps.pairs) {
    const double dg = flow.distance(x, y);
    if (!(dg > 0.0)) continue;
    const double d = metric.d(x, y);
    ++rep.pairs_used;
    const double lo = metric.c_lo * dg;
    const double hi = metric.c_hi * std::pow(dg, metric.s);
    if (d < lo * (1.0 - 1e-9)) {
      ++rep.violations_lower;
      rep.worst_lower = std::max(rep.worst_lower, lo / d);
    }
    if (d > hi * (1.0 + 1e-9)) {
      ++rep.violations_upper;
      rep.worst_upper = std::max(rep.worst_upper, d / hi);
    }
  }
  return rep;
}

AlphaEstimate estimate_alpha(const Flow& flow, int n_pairs, double delta,
                             unsigned long long seed, double cap) {
  if (n_pairs < 8) throw std::invalid_argument("estimate_alpha: too few pairs");
  Rng rng(seed);
  std::vector<double> expansions;
  expansions.reserve(n_pairs);
  AlphaEstimate est;
  for (int i = 0; i < n_pairs; ++i) {
    FlowPoint x = flow.sample(rng);
    FlowPoint y = flow.perturb(x, delta, rng);
    const double d0 = flow.distance(x, y);
    if (!(d0 > 0.0)) continue;
    const double fwd = flow.distance(flow.evolve(x, 1.0), flow.evolve(y, 1.0));
    const double bwd =
        flow.distance(flow.evolve(x, -1.0), flow.evolve(y, -1.0));
    expansions.push_back(std::max(fwd, bwd) / d0);
  }
  if (expansions.size() < 8)
    throw std::runtime_error("estimate_alpha: degenerate sample");
  est.pairs_used = (long long)expansions.size();
  std::sort(expansions.begin(), expansions.end());
  est.median_expansion = expansions[expansions.size() / 2];
  est.max_expansion = expansions.back();
  est.alpha = std::min(cap, est.median_expansion);
  est.alpha_eps = 1.05 * est.alpha;
  return est;
}

MetricConstruction::MetricConstruction(const Flow& flow, MetricGraphConfig cfg)
    : flow_(flow), cfg_(cfg) {
  if (cfg_.nodes < 8)
    throw std::invalid_argument("MetricConstruction: need >= 8 graph nodes");
  if (cfg_.c <= 0.0) throw std::invalid_argument("MetricConstruction: c <= 0");
  if (cfg_.J < 4) throw std::invalid_argument("MetricConstruction: J < 4");
  if (cfg_.max_time_shift < 1)
    throw std::invalid_argument("MetricConstruction: max_time_shift < 1");

  if (cfg_.alpha > 0.0) {
    alpha_ = cfg_.alpha;
  } else {
    alpha_ = estimate_alpha(flow_, cfg_.alpha_pairs, cfg_.alpha_delta,
                            cfg_.seed ^ 0x5bd1e995u, 2.0)
                 .alpha;
  }
  if (alpha_ <= 1.0001)
    throw std::invalid_argument(
        "MetricConstruction: alpha <= 1, no sampled instability (flow looks "
        "isometric at this scale)");
  alpha_eps_ = cfg_.alpha_eps > 0.0 ? cfg_.alpha_eps : 1.05 * alpha_;
  if (alpha_eps_ < alpha_)
    throw std::invalid_argument("MetricConstruction: alpha_eps < alpha");

  const int V = cfg_.nodes;
  charge_budget(double(V) * V * (cfg_.J + 4.0) +
                    double(V) * (2.0 * (cfg_.J + cfg_.max_time_shift) + 1.0) *
                        8.0,
                "metric construction");

  Rng rng(cfg_.seed);
  nodes_.reserve(V);
  for (int i = 0; i < V; ++i) nodes_.push_back(flow_.sample(rng));

  span_ = cfg_.J + cfg_.max_time_shift;
  orbit_.assign(V, {});
  for (int i = 0; i < V; ++i) {
    auto& orb = orbit_[i];
    orb.assign(2 * span_ + 1, nodes_[i]);
    for (int j = 1; j <= span_; ++j) {
      orb[span_ + j] = orb[span_ + j - 1];
      flow_.evolve_inplace(orb[span_ + j].x.data(), 1.0);
      orb[span_ - j] = orb[span_ - j + 1];
      flow_.evolve_inplace(orb[span_ - j].x.data(), -1.0);
    }
  }

  rho_.assign(std::size_t(V) * V, 0.0);
  for (int i = 0; i < V; ++i) {
    rho_[idx(i, i)] = 0.0;
    for (int j = i + 1; j < V; ++j) {
      const long long N = N_on_orbits(orbit_[i], 0, orbit_[j], 0);
      const double r = (N >= kNInfinity) ? 0.0 : std::pow(alpha_, -double(N));
      rho_[idx(i, j)] = rho_[idx(j, i)] = r;
    }
  }

  D_ = rho_;
  for (int i = 0; i < V; ++i) D_[idx(i, i)] = 0.0;
  for (int k = 0; k < V; ++k)
    for (int i = 0; i < V; ++i) {
      const double dik = D_[idx(i, k)];
      for (int j = 0; j < V; ++j)
        D_[idx(i, j)] = std::min(D_[idx(i, j)], dik + D_[idx(k, j)]);
    }

  D_shift_.assign(cfg_.max_time_shift + 1, std::nullopt);
  D_shift_[0] = D_;
  ell_cache_.assign(cfg_.max_time_shift + 1, 0.0);
}

double MetricConstruction::class_exponent() const {
  return std::log(alpha_) / std::log(alpha_ * alpha_eps_);
}

long long MetricConstruction::N_on_orbits(const std::vector<FlowPoint>& ox,
                                          int shift_x,
                                          const std::vector<FlowPoint>& oy,
                                          int shift_y) const {
  const int cx = int(ox.size()) / 2 + shift_x;
  const int cy = int(oy.size()) / 2 + shift_y;
  const double d0 = flow_.distance(ox[cx], oy[cy]);
  if (d0 == 0.0) return kNInfinity;
  if (d0 > cfg_.c) return 0;
  double thr = cfg_.c;
  for (int W = 1; W <= cfg_.J; ++W) {
    thr /= alpha_;
    if (flow_.distance(ox[cx + W], oy[cy + W]) > thr ||
        flow_.distance(ox[cx - W], oy[cy - W]) > thr)
      return W;
  }
  throw OrbitEquivalent(
      "N(x, y): no violation within the scan window; points are "
      "orbit-equivalent at this resolution");
}

namespace {
std::vector<FlowPoint> orbit_of(const Flow& flow, const FlowPoint& x,
                                int span) {
  std::vector<FlowPoint> orb(2 * span + 1, x);
  for (int j = 1; j <= span; ++j) {
    orb[span + j] = orb[span + j - 1];
    flow.evolve_inplace(orb[span + j].x.data(), 1.0);
    orb[span - j] = orb[span - j + 1];
    flow.evolve_inplace(orb[span - j].x.data(), -1.0);
  }
  return orb;
}
}  // namespace

long long MetricConstruction::N_of(const FlowPoint& x,
                                   const FlowPoint& y) const {
  if (flow_.distance(x, y) == 0.0) return kNInfinity;
  const auto ox = orbit_of(flow_, x, cfg_.J);
  const auto oy = orbit_of(flow_, y, cfg_.J);
  return N_on_orbits(ox, 0, oy, 0);
}

double MetricConstruction::rho(const FlowPoint& x, const FlowPoint& y) const {
  const long long N = N_of(x, y);
  return (N >= kNInfinity) ? 0.0 : std::pow(alpha_, -double(N));
}

void MetricConstruction::query_rho_to_nodes(const FlowPoint& x,
                                            std::vector<double>& out) const {
  const auto ox = orbit_of(flow_, x, cfg_.J);
  const int V = int(nodes_.size());
  out.resize(V);
  for (int l = 0; l < V; ++l) {
    const long long N = N_on_orbits(ox, 0, orbit_[l], 0);
    out[l] = (N >= kNInfinity) ? 0.0 : std::pow(alpha_, -double(N));
  }
}

double MetricConstruction::D(const FlowPoint& x, const FlowPoint& y) const {
  if (flow_.distance(x, y) == 0.0) return 0.0;
  const int V = int(nodes_.size());
  std::vector<double> a, b;
  query_rho_to_nodes(x, a);
  query_rho_to_nodes(y, b);
  double best = rho(x, y);
  // best chain x -> n_l -> ... -> n_m -> y through the graph
  for (int m = 0; m < V; ++m) {
    double through = std::numeric_limits<double>::infinity();
    for (int l = 0; l < V; ++l)
      through = std::min(through, a[l] + D_[idx(l, m)]);
    best = std::min(best, through + b[m]);
  }
  return best;
}

const std::vector<double>& MetricConstruction::shifted_D(int j) {
  if (j < 0 || j > cfg_.max_time_shift)
    throw std::invalid_argument("shifted_D: j out of range");
  if (D_shift_[j]) return *D_shift_[j];
  const int V = int(nodes_.size());
  charge_budget(double(V) * V * (cfg_.J + double(V)) / 4.0, "shifted metric table");
  // R[i][l] = rho(e^j n_i, n_l); C[i][m] = min_l R[i][l] + D[l][m]
  std::vector<double> R(std::size_t(V) * V), C(std::size_t(V) * V);
  for (int i = 0; i < V; ++i)
    for (int l = 0; l < V; ++l) {
      const long long N = N_on_orbits(orbit_[i], j, orbit_[l], 0);
      R[idx(i, l)] = (N >= kNInfinity) ? 0.0 : std::pow(alpha_, -double(N));
    }
  for (int i = 0; i < V; ++i)
    for (int m = 0; m < V; ++m) {
      double best = std::numeric_limits<double>::infinity();
      for (int l = 0; l < V; ++l)
        best = std::min(best, R[idx(i, l)] + D_[idx(l, m)]);
      C[idx(i, m)] = best;
    }
  std::vector<double> out(std::size_t(V) * V, 0.0);
  for (int i = 0; i < V; ++i)
    for (int h = i + 1; h < V; ++h) {
      const long long N = N_on_orbits(orbit_[i], j, orbit_[h], j);
      double best = (N >= kNInfinity) ? 0.0 : std::pow(alpha_, -double(N));
      for (int m = 0; m < V; ++m)
        best = std::min(best, C[idx(i, m)] + R[idx(h, m)]);
      out[idx(i, h)] = out[idx(h, i)] = best;
    }
  D_shift_[j] = std::move(out);
  return *D_shift_[j];
}

double MetricConstruction::measured_L_D(int k) {
  if (k < 1 || k > cfg_.max_time_shift)
    throw std::invalid_argument("measured_L_D: k out of range");
  const auto& Dk = shifted_D(k);
  const int V = int(nodes_.size());
  double L = 0.0;
  for (int i = 0; i < V; ++i)
    for (int h = i + 1; h < V; ++h) {
      const double d0 = D_[idx(i, h)];
      if (d0 > 1e-12) L = std::max(L, Dk[idx(i, h)] / d0);
    }
  return L;
}

double MetricConstruction::measured_SL_D(int k) {
  const auto& Dk = shifted_D(k);
  const int V = int(nodes_.size());
  std::vector<std::pair<double, double>> scored;
  for (int i = 0; i < V; ++i)
    for (int h = i + 1; h < V; ++h) {
      const double d0 = D_[idx(i, h)];
      if (d0 > 1e-12) scored.emplace_back(d0, Dk[idx(i, h)] / d0);
    }
  if (scored.empty()) throw std::runtime_error("measured_SL_D: no pairs");
  std::sort(scored.begin(), scored.end());
  const size_t bucket = std::max<size_t>(30, scored.size() / 10);
  double SL = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < std::min(bucket, scored.size()); ++i)
    SL = std::min(SL, scored[i].second);
  return SL;
}

double MetricConstruction::measured_L_dk(int k) {
  if (k < 1 || k > cfg_.max_time_shift)
    throw std::invalid_argument("measured_L_dk: k out of range");
  const double ell = std::pow(measured_L_D(k), 1.0 / k);
  const int V = int(nodes_.size());
  std::vector<const std::vector<double>*> tables(k + 1);
  for (int j = 0; j <= k; ++j) tables[j] = &shifted_D(j);
  double L = 0.0;
  for (int i = 0; i < V; ++i)
    for (int h = i + 1; h < V; ++h) {
      double dk0 = 0.0, dk1 = 0.0, scale = 1.0;
      for (int j = 0; j < k; ++j) {
        dk0 = std::max(dk0, (*tables[j])[idx(i, h)] / scale);
        dk1 = std::max(dk1, (*tables[j + 1])[idx(i, h)] / scale);
        scale *= ell;
      }
      if (dk0 > 1e-12) L = std::max(L, dk1 / dk0);
    }
  return L;
}

double MetricConstruction::dk(const FlowPoint& x, const FlowPoint& y, int k) {
  if (k < 1 || k > cfg_.max_time_shift)
    throw std::invalid_argument("dk: k out of range");
  if (flow_.distance(x, y) == 0.0) return 0.0;
  const double ell = std::pow(measured_L_D(k), 1.0 / k);
  FlowPoint ex = x, ey = y;
  double best = 0.0, scale = 1.0;
  for (int j = 0; j < k; ++j) {
    best = std::max(best, D(ex, ey) / scale);
    scale *= ell;
    if (j + 1 < k) {
      flow_.evolve_inplace(ex.x.data(), 1.0);
      flow_.evolve_inplace(ey.x.data(), 1.0);
    }
  }
  return best;
}

DistortedMetric MetricConstruction::as_metric() {
  DistortedMetric m;
  m.d = [this](const FlowPoint& x, const FlowPoint& y) { return D(x, y); };
  m.s = class_exponent();
  m.s_minus = true;
  m.label = "frink-chain";
  // declared comparability constants are calibrated on a sample and then
  // checked on fresh pairs; the theory constants assume the instability
  // two-sided bound which the capped alpha deliberately weakens
  PairSet ps = default_pair_sampler(flow_, 300, 100, {1e-1, 1e-2, 1e-3},
                                    cfg_.seed ^ 0xabcdef12u);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& [x, y] : ps.pairs) {
    const double dg = flow_.distance(x, y);
    if (!(dg > 0.0)) continue;
    const double d = D(x, y);
    lo = std::min(lo, d / dg);
    hi = std::max(hi, d / std::pow(dg, m.s));
  }
  m.c_lo = 0.9 * lo;
  m.c_hi = 1.1 * hi;
  return m;
}

MetricConstruction::NBoundsReport MetricConstruction::check_N_bounds(
    const PairSet& pairs, double slack_steps) const {
  NBoundsReport rep;
  const double la = std::log(alpha_), lae = std::log(alpha_ * alpha_eps_);
  for (const auto& [x, y] : pairs.pairs) {
    const double d0 = flow_.distance(x, y);
    if (!(d0 > 0.0)) continue;
    long long N;
    try {
      N = N_of(x, y);
    } catch (const OrbitEquivalent&) {
      continue;
    }
    if (N >= kNInfinity) continue;
    ++rep.pairs_used;
    const double lower = std::max(0.0, std::log(cfg_.c / d0) / lae);
    const double upper = std::max(0.0, std::log(cfg_.c / d0) / la);
    const double lower_excess = lower - double(N);  // > 0 when N too small
    const double upper_excess = double(N) - upper;  // > 0 when N too large
    rep.worst_lower = std::max(rep.worst_lower, lower_excess);
    rep.worst_upper = std::max(rep.worst_upper, upper_excess);
    if (lower_excess > slack_steps) ++rep.lower_violations;
    if (upper_excess > slack_steps) ++rep.upper_violations;
  }
  return rep;
}

MetricConstruction::WeakTriangleReport MetricConstruction::check_weak_triangle(
    int n_triples, unsigned long long seed) const {
  WeakTriangleReport rep;
  Rng rng(seed);
  for (int t = 0; t < n_triples; ++t) {
    FlowPoint x = flow_.sample(rng), y, z;
    switch (t % 3) {
      case 0:
        y = flow_.sample(rng);
        z = flow_.sample(rng);
        break;
      case 1:
        y = flow_.perturb(x, 0.01, rng);
        z = flow_.perturb(y, 0.01, rng);
        break;
      default:
        y = flow_.perturb(x, 1e-3, rng);
        z = flow_.perturb(y, 0.05, rng);
        break;
    }
    double rxy, ryz, rxz;
    try {
      rxy = rho(x, y);
      ryz = rho(y, z);
      rxz = rho(x, z);
    } catch (const OrbitEquivalent&) {
      continue;
    }
    ++rep.triples_used;
    const double bound = 2.0 * std::max(rxy, ryz);
    if (bound == 0.0) continue;
    const double ratio = rxz / bound;
    rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    if (ratio > 1.0 + 1e-12) ++rep.violations;
  }
  return rep;
}

MetricConstruction::FrinkReport MetricConstruction::check_frink(
    int n_pairs, unsigned long long seed) const {
  FrinkReport rep;
  PairSet ps = default_pair_sampler(flow_, n_pairs / 2, n_pairs / 6,
                                    {5e-2, 5e-3, 5e-4}, seed);
  for (const auto& [x, y] : ps.pairs) {
    if (flow_.distance(x, y) == 0.0) continue;
    double r, d;
    try {
      r = rho(x, y);
      d = D(x, y);
    } catch (const OrbitEquivalent&) {
      continue;
    }
    ++rep.pairs_used;
    if (d > r * (1.0 + 1e-9)) rep.d_below_rho = false;
    if (d > 0.0) {
      const double ratio = r / (4.0 * d);
      rep.worst_ratio = std::max(rep.worst_ratio, ratio);
      if (ratio > 1.0 + 1e-9) ++rep.violations;
    } else if (r > 0.0) {
      ++rep.violations;
    }
  }
  return rep;
}

EntropyInequalityReport verify_entropy_inequality(const Flow& flow, int k,
                                                  double htop,
                                                  MetricConstruction& metric,
                                                  double slack) {
  EntropyInequalityReport rep;
  rep.n = flow.dim();
  rep.k = k;
  rep.htop = htop;
  rep.slack = slack;
  rep.alpha = metric.alpha();
  rep.c = metric.c();
  rep.L_D_k = metric.measured_L_D(k);
  rep.ln_L_dk = std::log(metric.measured_L_dk(k));
  rep.lower_lhs = 0.5 * rep.n * rep.ln_L_dk;
  rep.upper_rhs = double(rep.n) * rep.ln_L_dk;
  rep.lower_ok = rep.lower_lhs <= slack * htop;
  rep.upper_ok = htop <= slack * rep.upper_rhs;
  return rep;
}

}  // namespace reeblab
