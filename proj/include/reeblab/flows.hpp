#pragma once
// Model flows behind one contract: the Reeb flow of irrational ellipsoids
// and their cyclic (lens) quotients, and the unit-roof suspension of a
// hyperbolic toral automorphism. Headless numerics: points are plain
// coordinate vectors whose layout is owned by the flow.

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "reeblab/rng.hpp"

namespace reeblab {

struct FlowPoint {
  std::vector<double> x;
};

// Quotient of the ellipsoid sum a_j |z_j|^2 = 1 in C^{m+1} by the cyclic
// group of order q[0] acting with exponents (1, q[1], ..., q[m]).
// q[0] == 1 means no quotient (the plain ellipsoid).
struct LensSpaceParams {
  std::vector<long long> q;  // q[0] >= 1, q[j] >= 0
  std::vector<double> a;     // a[j] > 0, size m+1 == q.size()

  int m() const { return int(a.size()) - 1; }
  // frequencies controlling closed-orbit times: (a0 q0, a_j - a0 q_j)
  std::vector<double> a_tilde() const;
  void validate() const;
};

// 2x2 integer matrix with det = 1 and |trace| > 2; unit roof.
struct SuspensionParams {
  std::array<std::array<long long, 2>, 2> A{{{{2, 1}}, {{1, 1}}}};

  void validate() const;
  long long trace() const { return A[0][0] + A[1][1]; }
  double lambda_plus() const;             // expanding eigenvalue modulus
  std::array<double, 2> unstable_dir() const;
  std::array<double, 2> stable_dir() const;
};

class Flow {
 public:
  virtual ~Flow() = default;

  virtual int dim() const = 0;            // manifold dimension
  virtual int coord_size() const = 0;     // doubles per point
  virtual double t0() const = 0;          // shortest closed-orbit period
  virtual double velocity_bound() const = 0;
  virtual double diameter_bound() const = 0;

  virtual void evolve_inplace(double* p, double t) const = 0;
  virtual double distance_raw(const double* p, const double* q) const = 0;
  virtual FlowPoint sample(Rng& rng) const = 0;
  virtual FlowPoint perturb(const FlowPoint& p, double delta,
                            Rng& rng) const = 0;

  FlowPoint evolve(const FlowPoint& p, double t) const {
    FlowPoint out = p;
    evolve_inplace(out.x.data(), t);
    return out;
  }
  double distance(const FlowPoint& p, const FlowPoint& q) const {
    return distance_raw(p.x.data(), q.x.data());
  }

  // First grid time t in {t_start + k dt} inter [t_start, T] with
  // d(e^{tR} x, x) <= radius; negative if none. Overridden where a faster
  // equivalent loop exists; results must match the generic path.
  virtual double first_return(const FlowPoint& x, double t_start, double T,
                              double dt, double radius) const;

  // Spatial-hash support for separated-set packing. Euclidean distance in
  // hash space between any stored key of p and any query key of q, with
  // the wraps below, is a lower bound for distance(p, q), and whenever
  // distance(p, q) < r some stored/query key pair is within r.
  virtual int hash_dim() const = 0;
  virtual std::vector<double> hash_period() const = 0;  // 0 = no wrap
  virtual void store_keys(const double* p,
                          std::vector<std::vector<double>>& out) const = 0;
  virtual void query_keys(const double* p,
                          std::vector<std::vector<double>>& out) const = 0;

  // Optional scan prune: prune_gap(prune_key(p), prune_key(q)) must never
  // exceed distance_raw(p, q). The zero default turns the prune off.
  virtual double prune_key(const double* /*p*/) const { return 0.0; }
  virtual double prune_gap(double /*a*/, double /*b*/) const { return 0.0; }
};

class LensFlow : public Flow {
 public:
  explicit LensFlow(LensSpaceParams params);

  const LensSpaceParams& params() const { return params_; }

  int dim() const override { return 2 * params_.m() + 1; }
  int coord_size() const override { return 2 * (params_.m() + 1); }
  double t0() const override { return t0_; }
  double velocity_bound() const override { return velocity_bound_; }
  double diameter_bound() const override { return 2.0; }

  void evolve_inplace(double* p, double t) const override;
  double distance_raw(const double* p, const double* q) const override;
  FlowPoint sample(Rng& rng) const override;
  FlowPoint perturb(const FlowPoint& p, double delta, Rng& rng) const override;
  double first_return(const FlowPoint& x, double t_start, double T, double dt,
                      double radius) const override;

  int hash_dim() const override { return coord_size(); }
  std::vector<double> hash_period() const override;
  void store_keys(const double* p,
                  std::vector<std::vector<double>>& out) const override;
  void query_keys(const double* p,
                  std::vector<std::vector<double>>& out) const override;

  // t is a period iff every a_tilde[j] * t / (2 pi) is an integer.
  bool is_period(double t, double tol = 1e-9) const;

 private:
  LensSpaceParams params_;
  std::vector<double> sqrt_a_;
  // group element k acts on w_j by the phase table below
  std::vector<double> phase_cos_, phase_sin_;  // q0 x (m+1)
  double t0_ = 0.0;
  double velocity_bound_ = 0.0;
  void renormalize(double* p) const;
};

class SuspensionFlow : public Flow {
 public:
  explicit SuspensionFlow(SuspensionParams params);

  const SuspensionParams& params() const { return params_; }

  int dim() const override { return 3; }
  int coord_size() const override { return 3; }  // (x0, x1, s)
  double t0() const override { return 1.0; }
  double velocity_bound() const override { return 1.0; }
  double diameter_bound() const override { return 1.30; }

  void evolve_inplace(double* p, double t) const override;
  double distance_raw(const double* p, const double* q) const override;
  FlowPoint sample(Rng& rng) const override;
  FlowPoint perturb(const FlowPoint& p, double delta, Rng& rng) const override;

  int hash_dim() const override { return 3; }
  std::vector<double> hash_period() const override { return {1.0, 1.0, 0.0}; }
  void store_keys(const double* p,
                  std::vector<std::vector<double>>& out) const override;
  void query_keys(const double* p,
                  std::vector<std::vector<double>>& out) const override;

  // every route in distance_raw pays at least the circle gap of the roof
  // coordinate, and the flow advances it rigidly, so it prunes exactly
  double prune_key(const double* p) const override { return p[2]; }
  double prune_gap(double a, double b) const override {
    const double d = std::fabs(a - b);
    return std::min(d, 1.0 - d);
  }

 private:
  SuspensionParams params_;
  std::array<std::array<long long, 2>, 2> Ainv_;
  void apply_power(double* xy, long long k) const;  // x <- A^k x mod 1
};

std::unique_ptr<Flow> make_lens_flow(LensSpaceParams params);
std::unique_ptr<Flow> make_suspension_flow(SuspensionParams params);

// JSON flow descriptions: {"kind": "lens", "q": [...], "a": [...]} or
// {"kind": "suspension", "matrix": [[..],[..]]}.
std::unique_ptr<Flow> make_flow_from_json_text(const std::string& text);
std::unique_ptr<Flow> load_flow(const std::string& path);

}  // namespace reeblab
