#include "reeblab/flows.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace reeblab {

// ---------------------------------------------------------------- lens ----

std::vector<double> LensSpaceParams::a_tilde() const {
  std::vector<double> at(a.size());
  at[0] = a[0] * double(q[0]);
  for (std::size_t j = 1; j < a.size(); ++j)
    at[j] = a[j] - a[0] * double(q[j]);
  return at;
}

void LensSpaceParams::validate() const {
  if (a.size() < 2) throw std::invalid_argument("lens: need m >= 1");
  if (q.size() != a.size())
    throw std::invalid_argument("lens: q and a must have equal length");
  if (q[0] < 1) throw std::invalid_argument("lens: q0 must be >= 1");
  for (std::size_t j = 1; j < q.size(); ++j)
    if (q[j] < 0) throw std::invalid_argument("lens: exponents must be >= 0");
  for (double aj : a)
    if (!(aj > 0.0)) throw std::invalid_argument("lens: frequencies must be > 0");
}

LensFlow::LensFlow(LensSpaceParams params) : params_(std::move(params)) {
  params_.validate();
  const int mp1 = params_.m() + 1;
  const long long q0 = params_.q[0];
  sqrt_a_.resize(mp1);
  for (int j = 0; j < mp1; ++j) sqrt_a_[j] = std::sqrt(params_.a[j]);

  phase_cos_.resize(std::size_t(q0) * mp1);
  phase_sin_.resize(std::size_t(q0) * mp1);
  for (long long k = 0; k < q0; ++k)
    for (int j = 0; j < mp1; ++j) {
      const long long g = (j == 0) ? 1 : params_.q[j];
      const double phi = kTwoPi * double((k * g) % q0) / double(q0);
      phase_cos_[std::size_t(k) * mp1 + j] = std::cos(phi);
      phase_sin_[std::size_t(k) * mp1 + j] = std::sin(phi);
    }

  // shortest closed orbit: axis orbits [z_j]; the group cuts orbit j down
  // by q0 / gcd(g_j, q0)
  t0_ = std::numeric_limits<double>::infinity();
  for (int j = 0; j < mp1; ++j) {
    const long long g = (j == 0) ? 1 : params_.q[j];
    const long long d = std::gcd(g % q0, q0);  // gcd(0, q0) == q0
    t0_ = std::min(t0_, kTwoPi * double(d) / (double(q0) * params_.a[j]));
  }

  double va = 0.0, vat = 0.0;
  for (double aj : params_.a) va = std::max(va, std::fabs(aj));
  for (double atj : params_.a_tilde()) vat = std::max(vat, std::fabs(atj));
  velocity_bound_ = std::max(va, vat);
}

void LensFlow::renormalize(double* p) const {
  const int mp1 = params_.m() + 1;
  double r = 0.0;
  for (int j = 0; j < mp1; ++j)
    r += params_.a[j] * (p[2 * j] * p[2 * j] + p[2 * j + 1] * p[2 * j + 1]);
  const double s = 1.0 / std::sqrt(r);
  for (int j = 0; j < 2 * mp1; ++j) p[j] *= s;
}

void LensFlow::evolve_inplace(double* p, double t) const {
  const int mp1 = params_.m() + 1;
  for (int j = 0; j < mp1; ++j) {
    const double c = std::cos(params_.a[j] * t), s = std::sin(params_.a[j] * t);
    const double re = p[2 * j], im = p[2 * j + 1];
    p[2 * j] = c * re - s * im;
    p[2 * j + 1] = s * re + c * im;
  }
  renormalize(p);
}

double LensFlow::distance_raw(const double* p, const double* q) const {
  const int mp1 = params_.m() + 1;
  const long long q0 = params_.q[0];
  // chordal distance between unit vectors w = sqrt(a) z, minimized over the
  // group: d_k^2 = 2 - 2 Re<w_p, U_k w_q>
  double best = std::numeric_limits<double>::infinity();
  for (long long k = 0; k < q0; ++k) {
    double dot = 0.0;
    for (int j = 0; j < mp1; ++j) {
      const double wa = params_.a[j];
      const double pre = p[2 * j], pim = p[2 * j + 1];
      const double qre = q[2 * j], qim = q[2 * j + 1];
      const double cr = wa * (pre * qre + pim * qim);
      const double ci = wa * (pim * qre - pre * qim);
      dot += cr * phase_cos_[std::size_t(k) * mp1 + j] -
             ci * phase_sin_[std::size_t(k) * mp1 + j];
    }
    best = std::min(best, 2.0 - 2.0 * dot);
  }
  return std::sqrt(std::max(0.0, best));
}

FlowPoint LensFlow::sample(Rng& rng) const {
  const int mp1 = params_.m() + 1;
  FlowPoint p;
  p.x.resize(2 * mp1);
  double norm2 = 0.0;
  std::vector<double> w(2 * mp1);
  do {
    norm2 = 0.0;
    for (auto& v : w) {
      v = rng.gaussian();
      norm2 += v * v;
    }
  } while (norm2 < 1e-12);
  const double inv = 1.0 / std::sqrt(norm2);
  for (int j = 0; j < mp1; ++j) {
    p.x[2 * j] = w[2 * j] * inv / sqrt_a_[j];
    p.x[2 * j + 1] = w[2 * j + 1] * inv / sqrt_a_[j];
  }
  return p;
}

FlowPoint LensFlow::perturb(const FlowPoint& p, double delta, Rng& rng) const {
  const int mp1 = params_.m() + 1;
  FlowPoint out = p;
  for (int j = 0; j < mp1; ++j) {
    out.x[2 * j] += delta * rng.gaussian() / sqrt_a_[j];
    out.x[2 * j + 1] += delta * rng.gaussian() / sqrt_a_[j];
  }
  renormalize(out.x.data());
  return out;
}

double LensFlow::first_return(const FlowPoint& x, double t_start, double T,
                              double dt, double radius) const {
  if (!(dt > 0.0)) throw std::invalid_argument("first_return: dt must be > 0");
  if (T < t_start) return -1.0;
  const int mp1 = params_.m() + 1;
  const long long q0 = params_.q[0];
  const double rad2 = radius * radius;

  // unit vectors in w space; the flow is the diagonal rotation there
  std::vector<double> w0(2 * mp1), w(2 * mp1);
  double n2 = 0.0;
  for (int j = 0; j < mp1; ++j) {
    w0[2 * j] = sqrt_a_[j] * x.x[2 * j];
    w0[2 * j + 1] = sqrt_a_[j] * x.x[2 * j + 1];
    n2 += w0[2 * j] * w0[2 * j] + w0[2 * j + 1] * w0[2 * j + 1];
  }
  const double inv = 1.0 / std::sqrt(n2);
  for (auto& v : w0) v *= inv;

  std::vector<double> cdt(mp1), sdt(mp1);
  for (int j = 0; j < mp1; ++j) {
    cdt[j] = std::cos(params_.a[j] * dt);
    sdt[j] = std::sin(params_.a[j] * dt);
  }
  for (int j = 0; j < mp1; ++j) {
    const double c = std::cos(params_.a[j] * t_start);
    const double s = std::sin(params_.a[j] * t_start);
    w[2 * j] = c * w0[2 * j] - s * w0[2 * j + 1];
    w[2 * j + 1] = s * w0[2 * j] + c * w0[2 * j + 1];
  }

  const long long steps = (long long)std::floor((T - t_start) / dt + 1e-9);
  for (long long i = 0; i <= steps; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (long long k = 0; k < q0; ++k) {
      double dot = 0.0;
      for (int j = 0; j < mp1; ++j) {
        const double cr = w[2 * j] * w0[2 * j] + w[2 * j + 1] * w0[2 * j + 1];
        const double ci = w[2 * j + 1] * w0[2 * j] - w[2 * j] * w0[2 * j + 1];
        dot += cr * phase_cos_[std::size_t(k) * mp1 + j] -
               ci * phase_sin_[std::size_t(k) * mp1 + j];
      }
      best = std::min(best, 2.0 - 2.0 * dot);
    }
    if (best <= rad2) return t_start + double(i) * dt;

    for (int j = 0; j < mp1; ++j) {
      const double re = w[2 * j], im = w[2 * j + 1];
      w[2 * j] = cdt[j] * re - sdt[j] * im;
      w[2 * j + 1] = sdt[j] * re + cdt[j] * im;
    }
    if ((i & 4095) == 4095) {
      double r = 0.0;
      for (double v : w) r += v * v;
      const double fix = 1.0 / std::sqrt(r);
      for (auto& v : w) v *= fix;
    }
  }
  return -1.0;
}

std::vector<double> LensFlow::hash_period() const {
  return std::vector<double>(coord_size(), 0.0);
}

void LensFlow::store_keys(const double* p,
                          std::vector<std::vector<double>>& out) const {
  const int mp1 = params_.m() + 1;
  std::vector<double> w(2 * mp1);
  for (int j = 0; j < mp1; ++j) {
    w[2 * j] = sqrt_a_[j] * p[2 * j];
    w[2 * j + 1] = sqrt_a_[j] * p[2 * j + 1];
  }
  out.push_back(std::move(w));
}

void LensFlow::query_keys(const double* p,
                          std::vector<std::vector<double>>& out) const {
  const int mp1 = params_.m() + 1;
  const long long q0 = params_.q[0];
  // group images of w(p): min over them of the plain euclidean distance to
  // a stored key equals distance_raw exactly
  for (long long k = 0; k < q0; ++k) {
    std::vector<double> w(2 * mp1);
    for (int j = 0; j < mp1; ++j) {
      const double c = phase_cos_[std::size_t(k) * mp1 + j];
      const double s = phase_sin_[std::size_t(k) * mp1 + j];
      const double re = sqrt_a_[j] * p[2 * j], im = sqrt_a_[j] * p[2 * j + 1];
      w[2 * j] = c * re - s * im;
      w[2 * j + 1] = s * re + c * im;
    }
    out.push_back(std::move(w));
  }
}

bool LensFlow::is_period(double t, double tol) const {
  for (double atj : params_.a_tilde()) {
    const double v = atj * t / kTwoPi;
    if (std::fabs(v - std::round(v)) > tol) return false;
  }
  return true;
}

std::unique_ptr<Flow> make_lens_flow(LensSpaceParams params) {
  return std::make_unique<LensFlow>(std::move(params));
}

// ---------------------------------------------------------- suspension ----

void SuspensionParams::validate() const {
  const long long det = A[0][0] * A[1][1] - A[0][1] * A[1][0];
  if (det != 1) throw std::invalid_argument("suspension: det must be 1");
  if (std::llabs(trace()) <= 2)
    throw std::invalid_argument("suspension: |trace| must be > 2");
}

double SuspensionParams::lambda_plus() const {
  const double t = double(std::llabs(trace()));
  return 0.5 * (t + std::sqrt(t * t - 4.0));
}

namespace {
std::array<double, 2> eigen_dir(const std::array<std::array<long long, 2>, 2>& A,
                                double lambda) {
  double vx, vy;
  if (A[0][1] != 0) {
    vx = double(A[0][1]);
    vy = lambda - double(A[0][0]);
  } else if (A[1][0] != 0) {
    vx = lambda - double(A[1][1]);
    vy = double(A[1][0]);
  } else {  // diagonal, |trace| > 2 impossible with det 1; keep safe
    vx = 1.0;
    vy = 0.0;
  }
  const double n = std::hypot(vx, vy);
  return {vx / n, vy / n};
}
}  // namespace

std::array<double, 2> SuspensionParams::unstable_dir() const {
  const double t = double(trace());
  const double lam = (t > 0) ? 0.5 * (t + std::sqrt(t * t - 4.0))
                             : 0.5 * (t - std::sqrt(t * t - 4.0));
  return eigen_dir(A, lam);
}

std::array<double, 2> SuspensionParams::stable_dir() const {
  const double t = double(trace());
  const double lam = (t > 0) ? 0.5 * (t - std::sqrt(t * t - 4.0))
                             : 0.5 * (t + std::sqrt(t * t - 4.0));
  return eigen_dir(A, lam);
}

SuspensionFlow::SuspensionFlow(SuspensionParams params)
    : params_(std::move(params)) {
  params_.validate();
  const auto& A = params_.A;
  Ainv_ = {{{{A[1][1], -A[0][1]}}, {{-A[1][0], A[0][0]}}}};
}

namespace {
inline double wrap01(double v) {
  v -= std::floor(v);
  if (v >= 1.0) v -= 1.0;  // floor rounding edge
  return v;
}
}  // namespace

void SuspensionFlow::apply_power(double* xy, long long k) const {
  // stepwise application with mod 1 after each step keeps the products
  // small; rounding then only grows with the dynamics itself
  const auto& M = (k >= 0) ? params_.A : Ainv_;
  long long n = std::llabs(k);
  if (n > 64)
    throw std::domain_error("suspension: |deck power| > 64 not supported");
  for (long long i = 0; i < n; ++i) {
    const double x0 = xy[0], x1 = xy[1];
    xy[0] = wrap01(double(M[0][0]) * x0 + double(M[0][1]) * x1);
    xy[1] = wrap01(double(M[1][0]) * x0 + double(M[1][1]) * x1);
  }
}

void SuspensionFlow::evolve_inplace(double* p, double t) const {
  const double u = p[2] + t;
  const double k = std::floor(u);
  apply_power(p, (long long)k);
  p[2] = wrap01(u - k);
}

namespace {
inline double torus_d2(double ax, double ay, double bx, double by) {
  double dx = std::fabs(ax - bx);
  dx = std::min(dx, 1.0 - dx);
  double dy = std::fabs(ay - by);
  dy = std::min(dy, 1.0 - dy);
  return dx * dx + dy * dy;
}
}  // namespace

double SuspensionFlow::distance_raw(const double* p, const double* q) const {
  const auto& A = params_.A;
  const auto& B = Ainv_;
  const double s = p[2], u = q[2];

  auto img = [](const std::array<std::array<long long, 2>, 2>& M, double x0,
                double x1, double* out) {
    out[0] = wrap01(double(M[0][0]) * x0 + double(M[0][1]) * x1);
    out[1] = wrap01(double(M[1][0]) * x0 + double(M[1][1]) * x1);
  };
  double Ap[2], Bp[2], Aq[2], Bq[2];
  img(A, p[0], p[1], Ap);
  img(B, p[0], p[1], Bp);
  img(A, q[0], q[1], Aq);
  img(B, q[0], q[1], Bq);

  // local product routes: stay on the sheet; cross the roof once going up
  // (applying A to the earlier point) or down, in either order so the
  // result is symmetric; or make a net-zero excursion through the sheet
  // above (torus legwork is then A-conjugated) or below
  const double up = (1.0 - s) + u, down = s + (1.0 - u);
  double best = std::sqrt(torus_d2(p[0], p[1], q[0], q[1])) + std::fabs(s - u);
  best = std::min(best, std::sqrt(torus_d2(Ap[0], Ap[1], q[0], q[1])) + up);
  best = std::min(best, std::sqrt(torus_d2(p[0], p[1], Bq[0], Bq[1])) + up);
  best = std::min(best, std::sqrt(torus_d2(Bp[0], Bp[1], q[0], q[1])) + down);
  best = std::min(best, std::sqrt(torus_d2(p[0], p[1], Aq[0], Aq[1])) + down);
  best = std::min(best, std::sqrt(torus_d2(Ap[0], Ap[1], Aq[0], Aq[1])) +
                            (1.0 - s) + (1.0 - u));
  best = std::min(best,
                  std::sqrt(torus_d2(Bp[0], Bp[1], Bq[0], Bq[1])) + s + u);
  return best;
}

FlowPoint SuspensionFlow::sample(Rng& rng) const {
  FlowPoint p;
  p.x = {rng.uniform(), rng.uniform(), rng.uniform()};
  return p;
}

FlowPoint SuspensionFlow::perturb(const FlowPoint& p, double delta,
                                  Rng& rng) const {
  FlowPoint out = p;
  out.x[0] = wrap01(out.x[0] + delta * rng.gaussian());
  out.x[1] = wrap01(out.x[1] + delta * rng.gaussian());
  // the flow direction handles the roof identification correctly
  evolve_inplace(out.x.data(), delta * rng.gaussian());
  return out;
}

void SuspensionFlow::store_keys(const double* p,
                                std::vector<std::vector<double>>& out) const {
  double Ap[2] = {p[0], p[1]}, Bp[2] = {p[0], p[1]};
  apply_power(Ap, 1);
  apply_power(Bp, -1);
  out.push_back({p[0], p[1], p[2]});
  out.push_back({Ap[0], Ap[1], p[2] - 1.0});
  out.push_back({Bp[0], Bp[1], p[2] + 1.0});
}

void SuspensionFlow::query_keys(const double* p,
                                std::vector<std::vector<double>>& out) const {
  store_keys(p, out);
}

std::unique_ptr<Flow> make_suspension_flow(SuspensionParams params) {
  return std::make_unique<SuspensionFlow>(std::move(params));
}

// ----------------------------------------------------------------- json ----

std::unique_ptr<Flow> make_flow_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("flow json: ") + e.what());
  }
  if (!j.contains("kind") || !j["kind"].is_string())
    throw std::invalid_argument("flow json: missing string field 'kind'");
  const std::string kind = j["kind"].get<std::string>();
  if (kind == "lens") {
    if (!j.contains("q") || !j.contains("a"))
      throw std::invalid_argument("flow json: lens needs 'q' and 'a'");
    LensSpaceParams p;
    p.q = j["q"].get<std::vector<long long>>();
    p.a = j["a"].get<std::vector<double>>();
    p.validate();
    return make_lens_flow(std::move(p));
  }
  if (kind == "suspension") {
    if (!j.contains("matrix"))
      throw std::invalid_argument("flow json: suspension needs 'matrix'");
    const auto rows = j["matrix"].get<std::vector<std::vector<long long>>>();
    if (rows.size() != 2 || rows[0].size() != 2 || rows[1].size() != 2)
      throw std::invalid_argument("flow json: matrix must be 2x2");
    SuspensionParams p;
    p.A = {{{{rows[0][0], rows[0][1]}}, {{rows[1][0], rows[1][1]}}}};
    p.validate();
    return make_suspension_flow(std::move(p));
  }
  throw std::invalid_argument("flow json: unknown kind '" + kind + "'");
}

std::unique_ptr<Flow> load_flow(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open flow file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return make_flow_from_json_text(ss.str());
}

// ------------------------------------------------------- generic pieces ----

double Flow::first_return(const FlowPoint& x, double t_start, double T,
                          double dt, double radius) const {
  if (!(dt > 0.0)) throw std::invalid_argument("first_return: dt must be > 0");
  if (T < t_start) return -1.0;
  FlowPoint p = x;
  evolve_inplace(p.x.data(), t_start);
  const long long steps = (long long)std::floor((T - t_start) / dt + 1e-9);
  for (long long i = 0; i <= steps; ++i) {
    if (distance_raw(p.x.data(), x.x.data()) <= radius)
      return t_start + double(i) * dt;
    evolve_inplace(p.x.data(), dt);
  }
  return -1.0;
}

}  // namespace reeblab
