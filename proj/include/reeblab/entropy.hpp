#pragma once
// Bowen separated-set entropy estimation and the distorted-metric tower:
// instability constant alpha, the window count N(x,y), the half-metric
// rho = alpha^{-N}, the Frink chain metric D on a finite sample graph, and
// the approximating family d_k whose time-one Lipschitz constants bracket
// the topological entropy.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reeblab/budget.hpp"
#include "reeblab/flows.hpp"

namespace reeblab {

// max over grid times t in [0, T] (step dt) of d(e^t x, e^t y)
double bowen_distance(const Flow& flow, const FlowPoint& x, const FlowPoint& y,
                      double T, double dt);

struct BowenConfig {
  double T = 1.0;
  double eps = 0.05;
  double dt = 0.25;
  std::vector<FlowPoint> cloud;
  int greedy_restarts = 2;
  unsigned long long seed = 1;

  void validate() const;
};

// greedy packing sizes along an increasing T schedule; every reported
// packing is a certified (T, eps)-separated set, so N is a lower bound
struct PackingResult {
  double eps = 0.0;
  std::vector<double> T_values;
  std::vector<long long> N;        // best over restarts, per T
  long long cloud_size = 0;
  std::vector<double> local_slopes;  // d ln N / dT between stages
  int saturated_from = -1;           // first stage index past the trusted window
  double fitted_slope = 0.0;         // LS slope of ln N over the trusted window
  // cloud indices of the best final-stage packing, for external certification
  std::vector<std::int32_t> final_ids;
};

PackingResult max_separated_schedule(const Flow& flow,
                                     const std::vector<double>& T_schedule,
                                     const BowenConfig& cfg);
long long max_separated(const Flow& flow, const BowenConfig& cfg);

// exact pairwise certification of a packing (O(k^2), for tests and audits)
bool verify_packing(const Flow& flow, const std::vector<FlowPoint>& pts,
                    double T, double eps, double dt);

// uniform grid cloud on the suspension coordinates (x0, x1, s)
std::vector<FlowPoint> grid_cloud_suspension(int nx, int ns);
std::vector<FlowPoint> random_cloud(const Flow& flow, long long count,
                                    unsigned long long seed);

struct HtopEstimate {
  double htop = 0.0;  // trusted-window slope at the smallest eps
  std::vector<double> eps_schedule;
  std::vector<double> per_eps_slopes;
  std::vector<PackingResult> packings;
  bool saturation_warning = false;
};

// eps_schedule decreasing, T_schedule increasing; cfg supplies cloud/dt/
// restarts/seed. The slope is fit on the stages before cloud-resolution
// saturation sets in (local slope collapsing below 30% of the peak).
HtopEstimate estimate_htop(const Flow& flow, std::vector<double> eps_schedule,
                           std::vector<double> T_schedule, BowenConfig cfg);

// ---------------------------------------------------------------- metrics

struct DistortedMetric {
  std::function<double(const FlowPoint&, const FlowPoint&)> d;
  double s = 1.0;        // declared class D_s
  bool s_minus = false;  // declared class D_{s-} when true
  double c_lo = 1.0, c_hi = 1.0;  // declared comparability constants
  std::string label;
};

DistortedMetric base_metric(const Flow& flow);

struct PairSet {
  std::vector<std::pair<FlowPoint, FlowPoint>> pairs;
};

// n_global random pairs plus n_local perturbed pairs at each scale delta
PairSet default_pair_sampler(const Flow& flow, int n_global, int n_local,
                             const std::vector<double>& deltas,
                             unsigned long long seed);

struct LipschitzReport {
  double L = 0.0;   // sup of d(e^t x, e^t y) / d(x, y) over the pairs
  double SL = 0.0;  // min ratio among the closest pairs (local skewness)
  long long pairs_used = 0;
  double time = 0.0;
};

LipschitzReport lipschitz_constant(const DistortedMetric& metric,
                                   const Flow& flow, double time,
                                   const PairSet& pairs);

// declared-class check: counts violations of
// c_lo * d^g <= d <= c_hi * (d^g)^s on freshly sampled pairs
struct MetricClassReport {
  long long violations_lower = 0, violations_upper = 0;
  double worst_lower = 1.0, worst_upper = 1.0;  // worst margin ratios
  long long pairs_used = 0;
};
MetricClassReport check_metric_class(const DistortedMetric& metric,
                                     const Flow& flow, int n_pairs,
                                     unsigned long long seed);

struct AlphaEstimate {
  double alpha = 1.0;      // median one-step two-sided expansion, capped
  double alpha_eps = 1.0;  // alpha * 1.05
  double median_expansion = 1.0;
  double max_expansion = 1.0;
  long long pairs_used = 0;
};
AlphaEstimate estimate_alpha(const Flow& flow, int n_pairs, double delta,
                             unsigned long long seed, double cap = 2.0);

struct OrbitEquivalent : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetricGraphConfig {
  int nodes = 256;
  double c = 0.2;
  int J = 60;                   // scan window for N(x,y)
  double alpha = 0.0;           // 0 = estimate from the flow
  double alpha_eps = 0.0;       // 0 = 1.05 * alpha
  int alpha_pairs = 2000;
  double alpha_delta = 1e-3;
  unsigned long long seed = 1;
  int max_time_shift = 8;       // largest j for which D(e^jR ., e^jR .) tables exist
};

class MetricConstruction {
 public:
  static constexpr long long kNInfinity = (1ll << 62);

  MetricConstruction(const Flow& flow, MetricGraphConfig cfg);

  double alpha() const { return alpha_; }
  double alpha_eps() const { return alpha_eps_; }
  double c() const { return cfg_.c; }
  int node_count() const { return int(nodes_.size()); }
  const FlowPoint& node(int i) const { return nodes_[i]; }
  // class exponent of D: ln(alpha) / ln(alpha * alpha_eps), < 1/2
  double class_exponent() const;

  // first window W such that some |j| <= W has d(e^j x, e^j y) > c a^-|j|;
  // kNInfinity for identical points, OrbitEquivalent error past J
  long long N_of(const FlowPoint& x, const FlowPoint& y) const;
  double rho(const FlowPoint& x, const FlowPoint& y) const;  // alpha^-N
  // chain metric through the sample graph (Frink)
  double D(const FlowPoint& x, const FlowPoint& y) const;
  // d_k(x,y) = max_{0<=j<k} D(e^j x, e^j y) / ell_k^j with
  // ell_k = measured_L_D(k)^{1/k}, so that L_{d_k}(e^R) = ell_k
  double dk(const FlowPoint& x, const FlowPoint& y, int k);

  double rho_node(int i, int j) const { return rho_[idx(i, j)]; }
  double D_node(int i, int j) const { return D_[idx(i, j)]; }

  double measured_L_D(int k);     // max over node pairs of D(e^k., e^k.)/D
  double measured_SL_D(int k);    // min of the same ratio on the closest decile
  double measured_L_dk(int k);    // Lipschitz of e^R under d_k on node pairs

  DistortedMetric as_metric();    // evaluator = D, declared class D_{s-}

  // paper bound check with +/- slack_steps integer quantization allowance
  struct NBoundsReport {
    long long lower_violations = 0, upper_violations = 0;
    long long pairs_used = 0;
    double worst_lower = 0.0, worst_upper = 0.0;  // worst signed excess in steps
  };
  NBoundsReport check_N_bounds(const PairSet& pairs,
                               double slack_steps = 1.0) const;

  struct WeakTriangleReport {
    long long violations = 0;
    long long triples_used = 0;
    double worst_ratio = 0.0;  // max rho(x,z) / (2 max(rho(x,y), rho(y,z)))
  };
  WeakTriangleReport check_weak_triangle(int n_triples,
                                         unsigned long long seed) const;

  struct FrinkReport {
    long long violations = 0;
    long long pairs_used = 0;
    double worst_ratio = 0.0;  // max rho / (4 D)
    bool d_below_rho = true;   // D <= rho held everywhere sampled
  };
  FrinkReport check_frink(int n_pairs, unsigned long long seed) const;

 private:
  const Flow& flow_;
  MetricGraphConfig cfg_;
  double alpha_ = 0.0, alpha_eps_ = 0.0;
  std::vector<FlowPoint> nodes_;
  // orbit[i] holds e^{jR} n_i for j in [-span, span]
  int span_ = 0;
  std::vector<std::vector<FlowPoint>> orbit_;
  std::vector<double> rho_, D_;  // node-pair matrices
  // D between time-shifted nodes, and the chain helper C_j[i][m]
  std::vector<std::optional<std::vector<double>>> D_shift_;
  std::vector<double> ell_cache_;

  size_t idx(int i, int j) const { return size_t(i) * nodes_.size() + j; }
  long long N_on_orbits(const std::vector<FlowPoint>& ox, int shift_x,
                        const std::vector<FlowPoint>& oy, int shift_y) const;
  const std::vector<double>& shifted_D(int j);
  void query_rho_to_nodes(const FlowPoint& x, std::vector<double>& out) const;
};

// Lemma-style inequality report: (n/2) ln L <= htop <= n ln L with slack
struct EntropyInequalityReport {
  int n = 0, k = 0;
  double htop = 0.0;
  double ln_L_dk = 0.0;
  double lower_lhs = 0.0;  // (n/2) ln L
  double upper_rhs = 0.0;  // n ln L
  bool lower_ok = false, upper_ok = false;
  double slack = 1.25;
  double alpha = 0.0, c = 0.0;
  double L_D_k = 0.0;
};

EntropyInequalityReport verify_entropy_inequality(const Flow& flow, int k,
                                                  double htop,
                                                  MetricConstruction& metric,
                                                  double slack = 1.25);

}  // namespace reeblab
