#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "reeblab/entropy.hpp"
#include "reeblab/flows.hpp"

using namespace reeblab;

namespace {

std::unique_ptr<Flow> cat() { return make_suspension_flow(SuspensionParams{}); }

std::unique_ptr<Flow> golden_lens() {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  return make_lens_flow(LensSpaceParams{{2, 1}, {1.0, phi}});
}

double lambda_plus() { return SuspensionParams{}.lambda_plus(); }

double wrap01(double v) {
  v -= std::floor(v);
  return v;
}

// suspension times a circle rotation: same entropy as the suspension, the
// extra factor is isometric
class ProductFlow : public Flow {
 public:
  ProductFlow() : base_(SuspensionParams{}) {}

  int dim() const override { return 4; }
  int coord_size() const override { return 4; }
  double t0() const override { return 1.0; }
  double velocity_bound() const override { return 1.1; }
  double diameter_bound() const override { return 1.4; }

  void evolve_inplace(double* p, double t) const override {
    base_.evolve_inplace(p, t);
    p[3] = wrap01(p[3] + omega_ * t);
  }
  double distance_raw(const double* p, const double* q) const override {
    double dt3 = std::abs(p[3] - q[3]);
    dt3 = std::min(dt3, 1.0 - dt3);
    return std::hypot(base_.distance_raw(p, q), dt3);
  }
  FlowPoint sample(Rng& rng) const override {
    FlowPoint b = base_.sample(rng);
    b.x.push_back(rng.uniform());
    return b;
  }
  FlowPoint perturb(const FlowPoint& p, double delta, Rng& rng) const override {
    FlowPoint b3{{p.x[0], p.x[1], p.x[2]}};
    FlowPoint out = base_.perturb(b3, delta, rng);
    out.x.push_back(wrap01(p.x[3] + delta * rng.gaussian()));
    return out;
  }
  int hash_dim() const override { return 4; }
  std::vector<double> hash_period() const override { return {1, 1, 0, 1}; }
  void store_keys(const double* p,
                  std::vector<std::vector<double>>& out) const override {
    base_.store_keys(p, out);
    for (auto& k : out) k.push_back(p[3]);
  }
  void query_keys(const double* p,
                  std::vector<std::vector<double>>& out) const override {
    base_.query_keys(p, out);
    for (auto& k : out) k.push_back(p[3]);
  }

 private:
  SuspensionFlow base_;
  double omega_ = 0.3819660112501051;
};

std::vector<FlowPoint> grid_cloud_product(int nx, int ns, int nth) {
  std::vector<FlowPoint> cloud;
  cloud.reserve(std::size_t(nx) * nx * ns * nth);
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < nx; ++j)
      for (int k = 0; k < ns; ++k)
        for (int l = 0; l < nth; ++l)
          cloud.push_back(FlowPoint{{(i + 0.5) / nx, (j + 0.5) / nx,
                                     (k + 0.5) / ns, (l + 0.5) / nth}});
  return cloud;
}

}  // namespace

TEST_SUITE("entropy") {

TEST_CASE("bowen distance: T = 0 reduces to the base distance") {
  auto flow = cat();
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    FlowPoint x = flow->sample(rng), y = flow->sample(rng);
    CHECK(bowen_distance(*flow, x, y, 0.0, 0.25) ==
          doctest::Approx(flow->distance(x, y)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(bowen_distance(*flow, flow->sample(rng), flow->sample(rng),
                                 1.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(bowen_distance(*flow, flow->sample(rng), flow->sample(rng),
                                 -1.0, 0.1),
                  std::invalid_argument);
}

TEST_CASE("bowen distance: isometric flow keeps it equal to the distance") {
  auto flow = golden_lens();
  Rng rng(12);
  for (int i = 0; i < 40; ++i) {
    FlowPoint x = flow->sample(rng), y = flow->sample(rng);
    const double d0 = flow->distance(x, y);
    CHECK(bowen_distance(*flow, x, y, 5.0, 0.125) ==
          doctest::Approx(d0).epsilon(1e-10));
  }
}

TEST_CASE("bowen distance: monotone in T, metric on samples") {
  auto flow = cat();
  Rng rng(13);
  for (int i = 0; i < 30; ++i) {
    FlowPoint x = flow->sample(rng), y = flow->sample(rng), z = flow->sample(rng);
    const double d1 = bowen_distance(*flow, x, y, 1.0, 0.25);
    const double d2 = bowen_distance(*flow, x, y, 2.0, 0.25);
    const double d3 = bowen_distance(*flow, x, y, 3.0, 0.25);
    CHECK(d1 <= d2 + 1e-15);
    CHECK(d2 <= d3 + 1e-15);
    // symmetry and (slack) triangle inherited from the leaf metric
    CHECK(bowen_distance(*flow, y, x, 2.0, 0.25) ==
          doctest::Approx(d2).epsilon(1e-14));
    const double dxz = bowen_distance(*flow, x, z, 2.0, 0.25);
    const double dyz = bowen_distance(*flow, y, z, 2.0, 0.25);
    CHECK(dxz <= d2 + dyz + 0.15);
  }
}

TEST_CASE("bowen distance: unstable pair grows like the expanding eigenvalue") {
  auto flow = cat();
  const auto u = SuspensionParams{}.unstable_dir();
  const double lp = lambda_plus();
  const double delta = 1e-4;
  Rng rng(14);
  for (int i = 0; i < 20; ++i) {
    FlowPoint x = flow->sample(rng);
    FlowPoint y = x;
    y.x[0] = wrap01(y.x[0] + delta * u[0]);
    y.x[1] = wrap01(y.x[1] + delta * u[1]);
    const double d3 = bowen_distance(*flow, x, y, 3.0, 0.5);
    const double expected = delta * lp * lp * lp;
    CHECK(d3 > 0.7 * expected);
    CHECK(d3 < 1.3 * expected);
  }
}

TEST_CASE("max separated: degenerate configurations") {
  auto flow = cat();
  BowenConfig cfg;
  cfg.cloud = random_cloud(*flow, 400, 21);
  cfg.dt = 0.25;
  cfg.greedy_restarts = 2;
  cfg.seed = 5;

  cfg.T = 0.0;
  cfg.eps = 3.0;  // above the diameter: a single point dominates
  CHECK(max_separated(*flow, cfg) == 1);

  cfg.eps = 1e-6;  // below the cloud resolution: everything separates
  CHECK(max_separated(*flow, cfg) == 400);

  BowenConfig bad = cfg;
  bad.cloud.clear();
  CHECK_THROWS_AS(max_separated(*flow, bad), std::invalid_argument);
  bad = cfg;
  bad.eps = 0.0;
  CHECK_THROWS_AS(max_separated(*flow, bad), std::invalid_argument);
  CHECK_THROWS_AS(max_separated_schedule(*flow, {}, cfg),
                  std::invalid_argument);
  CHECK_THROWS_AS(max_separated_schedule(*flow, {1.0, 1.0}, cfg),
                  std::invalid_argument);
}

TEST_CASE("max separated: certified packings, monotone in T and eps") {
  auto flow = cat();
  BowenConfig cfg;
  cfg.cloud = random_cloud(*flow, 500, 22);
  cfg.dt = 0.25;
  cfg.eps = 0.25;
  cfg.greedy_restarts = 2;
  cfg.seed = 7;

  const std::vector<double> sched{0.5, 1.0, 1.5, 2.0};
  PackingResult pr = max_separated_schedule(*flow, sched, cfg);
  REQUIRE(pr.N.size() == sched.size());
  for (size_t i = 0; i + 1 < pr.N.size(); ++i) CHECK(pr.N[i] <= pr.N[i + 1]);
  CHECK(pr.N.front() >= 1);

  // the returned packing really is pairwise (T, eps)-separated
  std::vector<FlowPoint> pts;
  for (auto id : pr.final_ids) pts.push_back(cfg.cloud[id]);
  CHECK(pts.size() == std::size_t(pr.N.back()));
  CHECK(verify_packing(*flow, pts, sched.back(), cfg.eps, cfg.dt));

  // smaller eps can only help
  BowenConfig fine = cfg;
  fine.eps = 0.125;
  PackingResult pr2 = max_separated_schedule(*flow, sched, fine);
  for (size_t i = 0; i < pr.N.size(); ++i) CHECK(pr2.N[i] >= pr.N[i]);
}

TEST_CASE("max separated: isometric flow gives T-independent counts") {
  auto flow = golden_lens();
  BowenConfig cfg;
  cfg.cloud = random_cloud(*flow, 2000, 23);
  cfg.dt = 0.25;
  cfg.eps = 0.3;
  cfg.greedy_restarts = 1;
  cfg.seed = 9;
  PackingResult pr = max_separated_schedule(*flow, {0.5, 1.0, 2.0, 4.0}, cfg);
  for (size_t i = 1; i < pr.N.size(); ++i) CHECK(pr.N[i] == pr.N[0]);
  CHECK(pr.fitted_slope == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("estimate_htop: isometric flow reads zero") {
  auto flow = golden_lens();
  BowenConfig cfg;
  cfg.cloud = random_cloud(*flow, 3000, 24);
  cfg.dt = 0.25;
  cfg.greedy_restarts = 1;
  cfg.seed = 31;
  HtopEstimate est =
      estimate_htop(*flow, {0.5, 0.25}, {0.5, 1.0, 2.0, 3.0}, cfg);
  CHECK(std::abs(est.htop) <= 0.05);
  CHECK(est.per_eps_slopes.size() == 2);
  CHECK(est.packings.size() == 2);
  CHECK(!est.saturation_warning);
}

TEST_CASE("estimate_htop: cat suspension lands near ln lambda_plus") {
  auto flow = cat();
  BowenConfig cfg;
  cfg.cloud = grid_cloud_suspension(120, 8);
  cfg.dt = 0.25;
  cfg.greedy_restarts = 2;
  cfg.seed = 37;
  HtopEstimate est = estimate_htop(*flow, {0.16, 0.08},
                                   {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}, cfg);
  const double oracle = std::log(lambda_plus());
  CHECK(est.htop > oracle - 0.25);
  CHECK(est.htop < oracle + 0.25);
  // the per-eps slope at the coarser scale is also in a sane band
  CHECK(est.per_eps_slopes.front() > 0.4);
  CHECK(est.per_eps_slopes.front() < 1.5);
}

TEST_CASE("estimate_htop: resolution saturation is flagged, not fitted") {
  auto flow = cat();
  BowenConfig cfg;
  cfg.cloud = grid_cloud_suspension(40, 5);  // coarse: caps inside the window
  cfg.dt = 0.25;
  cfg.greedy_restarts = 1;
  cfg.seed = 41;
  HtopEstimate est =
      estimate_htop(*flow, {0.1}, {0.5, 1.5, 2.5, 3.5, 4.5, 5.5}, cfg);
  CHECK(est.saturation_warning);
  CHECK(est.packings[0].saturated_from > 0);
  // the trusted-window fit still reads a positive rate well above zero
  CHECK(est.htop > 0.5);
  // while the raw last-interval slope has collapsed
  CHECK(est.packings[0].local_slopes.back() < 0.5 * est.htop);
}

TEST_CASE("estimate_htop: circle-rotation factor leaves the estimate alone") {
  ProductFlow prod;
  BowenConfig pcfg;
  pcfg.cloud = grid_cloud_product(64, 4, 6);
  pcfg.dt = 0.25;
  pcfg.greedy_restarts = 1;
  pcfg.seed = 43;
  HtopEstimate pest =
      estimate_htop(prod, {0.125}, {0.5, 1.0, 1.5, 2.0}, pcfg);

  auto flow = cat();
  BowenConfig scfg;
  scfg.cloud = grid_cloud_suspension(64, 4);
  scfg.dt = 0.25;
  scfg.greedy_restarts = 1;
  scfg.seed = 43;
  HtopEstimate sest =
      estimate_htop(*flow, {0.125}, {0.5, 1.0, 1.5, 2.0}, scfg);

  CHECK(std::abs(pest.htop - sest.htop) <= 0.2);
  CHECK(pest.htop > 0.4);
}

TEST_CASE("lipschitz_constant: isometries and the time-zero map") {
  auto lens = golden_lens();
  PairSet pairs = default_pair_sampler(*lens, 300, 100, {1e-2, 1e-3}, 51);
  LipschitzReport rep = lipschitz_constant(base_metric(*lens), *lens, 7.3, pairs);
  CHECK(rep.L == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(rep.SL == doctest::Approx(1.0).epsilon(1e-7));

  auto flow = cat();
  PairSet spairs = default_pair_sampler(*flow, 300, 100, {1e-3, 1e-4}, 52);
  LipschitzReport zero = lipschitz_constant(base_metric(*flow), *flow, 0.0, spairs);
  CHECK(zero.L == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("lipschitz_constant: cat suspension time-one sees the eigenvalue") {
  auto flow = cat();
  PairSet pairs = default_pair_sampler(*flow, 500, 400, {1e-3, 1e-4}, 53);
  LipschitzReport rep = lipschitz_constant(base_metric(*flow), *flow, 1.0, pairs);
  CHECK(rep.L >= lambda_plus() - 0.1);
  CHECK(rep.L <= lambda_plus() + 0.5);
  CHECK(rep.SL <= rep.L);
  PairSet empty;
  CHECK_THROWS_AS(lipschitz_constant(base_metric(*flow), *flow, 1.0, empty),
                  std::runtime_error);
}

TEST_CASE("estimate_alpha: hyperbolic vs isometric flows") {
  auto flow = cat();
  AlphaEstimate est = estimate_alpha(*flow, 2000, 1e-3, 61);
  CHECK(est.alpha > 1.3);
  CHECK(est.alpha <= 2.0 + 1e-12);
  CHECK(est.alpha_eps == doctest::Approx(1.05 * est.alpha));
  CHECK(est.max_expansion >= lambda_plus() - 0.3);

  auto lens = golden_lens();
  AlphaEstimate iso = estimate_alpha(*lens, 500, 1e-3, 62);
  CHECK(iso.alpha == doctest::Approx(1.0).epsilon(1e-6));

  MetricGraphConfig mcfg;
  mcfg.nodes = 32;
  CHECK_THROWS_AS(MetricConstruction(*lens, mcfg), std::invalid_argument);
}

TEST_CASE("metric construction: sentinels and trivial values") {
  auto flow = cat();
  MetricGraphConfig cfg;
  cfg.nodes = 64;
  cfg.max_time_shift = 4;
  cfg.seed = 71;
  MetricConstruction mc(*flow, cfg);

  CHECK(mc.alpha() > 1.0);
  CHECK(mc.alpha_eps() == doctest::Approx(1.05 * mc.alpha()));
  CHECK(mc.class_exponent() < 0.5);
  CHECK(mc.class_exponent() > 0.0);

  FlowPoint x{{0.31, 0.62, 0.4}};
  CHECK(mc.N_of(x, x) == MetricConstruction::kNInfinity);
  CHECK(mc.rho(x, x) == 0.0);
  CHECK(mc.D(x, x) == 0.0);
  CHECK(mc.dk(x, x, 2) == 0.0);

  // pairs beyond the instability scale c: N = 0, rho = 1
  FlowPoint far{{0.81, 0.12, 0.9}};
  REQUIRE(flow->distance(x, far) > cfg.c);
  CHECK(mc.N_of(x, far) == 0);
  CHECK(mc.rho(x, far) == 1.0);

  // symmetry
  Rng rng(72);
  for (int i = 0; i < 20; ++i) {
    FlowPoint a = flow->sample(rng), b = flow->sample(rng);
    CHECK(mc.N_of(a, b) == mc.N_of(b, a));
    CHECK(mc.D(a, b) == doctest::Approx(mc.D(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("metric construction: graph metric is a metric below rho") {
  auto flow = cat();
  MetricGraphConfig cfg;
  cfg.nodes = 96;
  cfg.max_time_shift = 4;
  cfg.seed = 73;
  MetricConstruction mc(*flow, cfg);
  const int V = mc.node_count();
  for (int i = 0; i < V; ++i)
    for (int j = i + 1; j < V; ++j) {
      CHECK(mc.D_node(i, j) <= mc.rho_node(i, j) + 1e-15);
      CHECK(mc.D_node(i, j) > 0.0);
    }
  // exact triangle inequality on the graph (Floyd-Warshall closure)
  Rng rng(74);
  for (int t = 0; t < 400; ++t) {
    const int i = int(rng.uniform() * V), j = int(rng.uniform() * V),
              k = int(rng.uniform() * V);
    CHECK(mc.D_node(i, j) <= mc.D_node(i, k) + mc.D_node(k, j) + 1e-12);
  }
}

TEST_CASE("metric construction: weak triangle and Frink sandwich hold") {
  auto flow = cat();
  MetricGraphConfig cfg;
  cfg.nodes = 96;
  cfg.max_time_shift = 4;
  cfg.seed = 75;
  MetricConstruction mc(*flow, cfg);

  auto wt = mc.check_weak_triangle(3000, 81);
  CHECK(wt.triples_used > 2500);
  CHECK(wt.violations == 0);
  CHECK(wt.worst_ratio <= 1.0 + 1e-12);

  auto fr = mc.check_frink(2000, 82);
  CHECK(fr.pairs_used > 1500);
  CHECK(fr.violations == 0);
  CHECK(fr.d_below_rho);
  CHECK(fr.worst_ratio <= 1.0 + 1e-9);
}

TEST_CASE("metric construction: window-count bounds at faithful constants") {
  auto flow = cat();
  // alpha_eps above the one-step expansion of the torus factor, so the
  // two-sided instability bound that the paper bounds assume really holds
  MetricGraphConfig cfg;
  cfg.nodes = 32;
  cfg.alpha = 2.5;
  cfg.alpha_eps = 2.63;
  cfg.seed = 77;
  MetricConstruction mc(*flow, cfg);

  PairSet pairs = default_pair_sampler(*flow, 400, 200, {1e-2, 1e-3, 1e-4}, 83);
  auto rep = mc.check_N_bounds(pairs, 1.01);
  CHECK(rep.pairs_used > 900);
  CHECK(rep.upper_violations == 0);
  CHECK(rep.lower_violations == 0);

  // the default capped alpha keeps the upper bound but trades the lower
  // bound away on strongly hyperbolic pairs; that is reported, not hidden
  MetricGraphConfig dcfg;
  dcfg.nodes = 32;
  dcfg.seed = 78;
  MetricConstruction md(*flow, dcfg);
  auto drep = md.check_N_bounds(pairs, 1.01);
  CHECK(drep.upper_violations == 0);
}

TEST_CASE("metric construction: evolved distances obey the 4 alpha^j ceiling") {
  auto flow = cat();
  MetricGraphConfig cfg;
  cfg.nodes = 96;
  cfg.max_time_shift = 5;
  cfg.seed = 79;
  MetricConstruction mc(*flow, cfg);

  // node-pair Frink sandwich certifies rho <= 4 D on the graph, which
  // together with rho(e^j x, e^j y) <= alpha^j rho(x, y) gives the ceiling
  const int V = mc.node_count();
  for (int i = 0; i < V; ++i)
    for (int j = i + 1; j < V; ++j)
      CHECK(mc.rho_node(i, j) <= 4.0 * mc.D_node(i, j) * (1.0 + 1e-9));

  for (int k = 1; k <= 4; ++k) {
    const double L = mc.measured_L_D(k);
    CHECK(L > 0.5);
    CHECK(L <= 4.0 * std::pow(mc.alpha(), k) * (1.0 + 1e-9));
  }
}

TEST_CASE("metric construction: d_k family tightens the time-one constant") {
  auto flow = cat();
  MetricGraphConfig cfg;
  cfg.nodes = 96;
  cfg.max_time_shift = 5;
  cfg.seed = 85;
  MetricConstruction mc(*flow, cfg);

  const double L1 = mc.measured_L_dk(1);
  const double L2 = mc.measured_L_dk(2);
  const double L4 = mc.measured_L_dk(4);
  CHECK(L1 > 1.0);
  CHECK(std::log(L2) <= std::log(L1) + 0.15);
  CHECK(std::log(L4) <= std::log(L2) + 0.15);

  // d_1 is the chain metric itself
  Rng rng(86);
  for (int i = 0; i < 10; ++i) {
    FlowPoint a = flow->sample(rng), b = flow->sample(rng);
    CHECK(mc.dk(a, b, 1) == doctest::Approx(mc.D(a, b)).epsilon(1e-12));
    CHECK(mc.dk(a, b, 3) >= 0.0);
  }
  CHECK_THROWS_AS(mc.dk(flow->sample(rng), flow->sample(rng), 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(mc.measured_L_dk(99), std::invalid_argument);
}

TEST_CASE("metric construction: declared class is honoured on fresh pairs") {
  auto flow = cat();
  MetricGraphConfig cfg;
  cfg.nodes = 96;
  cfg.seed = 87;
  MetricConstruction mc(*flow, cfg);
  DistortedMetric dm = mc.as_metric();
  CHECK(dm.s < 0.5);
  CHECK(dm.s_minus);
  auto rep = check_metric_class(dm, *flow, 600, 88);
  CHECK(rep.pairs_used > 500);
  CHECK(rep.violations_lower == 0);
  CHECK(rep.violations_upper == 0);
}

TEST_CASE("entropy inequality report: cat suspension brackets the oracle") {
  auto flow = cat();
  MetricGraphConfig cfg;
  cfg.nodes = 96;
  cfg.max_time_shift = 5;
  cfg.seed = 91;
  MetricConstruction mc(*flow, cfg);
  const double oracle = std::log(lambda_plus());
  EntropyInequalityReport rep = verify_entropy_inequality(*flow, 4, oracle, mc);
  CHECK(rep.n == 3);
  CHECK(rep.k == 4);
  CHECK(rep.lower_lhs == doctest::Approx(1.5 * rep.ln_L_dk));
  CHECK(rep.upper_rhs == doctest::Approx(3.0 * rep.ln_L_dk));
  CHECK(rep.lower_ok);
  CHECK(rep.upper_ok);
}

}  // TEST_SUITE
