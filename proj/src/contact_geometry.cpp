#include "reeblab/contact_geometry.hpp"

#include <cmath>
#include <stdexcept>

#include "reeblab/budget.hpp"
#include "reeblab/quadrature.hpp"
#include "reeblab/rng.hpp"
#include "reeblab/summation.hpp"

namespace reeblab {
namespace {

constexpr long long kSampleFloor = 100;

// alpha(v) at z for alpha = sum x_j dy_j - y_j dx_j, interleaved layout
double one_form(const double* z, const double* v, int mp1) {
  double s = 0.0;
  for (int j = 0; j < mp1; ++j)
    s += z[2 * j] * v[2 * j + 1] - z[2 * j + 1] * v[2 * j];
  return s;
}

// d alpha (v, w) = 2 sum_j (v_x w_y - v_y w_x)
double two_form(const double* v, const double* w, int mp1) {
  double s = 0.0;
  for (int j = 0; j < mp1; ++j)
    s += v[2 * j] * w[2 * j + 1] - v[2 * j + 1] * w[2 * j];
  return 2.0 * s;
}

// Pfaffian of an even-size antisymmetric matrix by first-row expansion.
// Sizes here are at most 2m + 2; fine for the m in scope.
double pfaffian(std::vector<std::vector<double>>& a, std::vector<int>& idx) {
  const std::size_t n = idx.size();
  if (n == 0) return 1.0;
  if (n == 2) return a[idx[0]][idx[1]];
  double sum = 0.0;
  std::vector<int> sub(n - 2);
  for (std::size_t j = 1; j < n; ++j) {
    double factor = a[idx[0]][idx[j]];
    if (factor == 0.0) continue;
    std::size_t p = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (k != j) sub[p++] = idx[k];
    double sign = (j % 2 == 1) ? 1.0 : -1.0;
    sum += sign * factor * pfaffian(a, sub);
  }
  return sum;
}

double factorial(int m) {
  double f = 1.0;
  for (int k = 2; k <= m; ++k) f *= k;
  return f;
}

// Orthonormal basis of the tangent space at z: Gram-Schmidt over the
// gradient direction followed by the standard basis, keeping everything
// after the first (normal) vector.
std::vector<std::vector<double>> tangent_frame(const LensSpaceParams& params,
                                               const double* z) {
  const int mp1 = params.m() + 1;
  const int d = 2 * mp1;
  std::vector<std::vector<double>> frame;
  std::vector<double> normal(d);
  for (int j = 0; j < mp1; ++j) {
    normal[2 * j] = params.a[j] * z[2 * j];
    normal[2 * j + 1] = params.a[j] * z[2 * j + 1];
  }
  auto push_orthonormalized = [&](std::vector<double> v) {
    for (const auto& u : frame) {
      double dot = 0.0;
      for (int i = 0; i < d; ++i) dot += u[i] * v[i];
      for (int i = 0; i < d; ++i) v[i] -= dot * u[i];
    }
    double norm2 = 0.0;
    for (double c : v) norm2 += c * c;
    if (norm2 < 1e-20) return;
    double inv = 1.0 / std::sqrt(norm2);
    for (double& c : v) c *= inv;
    frame.push_back(std::move(v));
  };
  push_orthonormalized(normal);
  for (int i = 0; i < d && int(frame.size()) < d; ++i) {
    std::vector<double> e(d, 0.0);
    e[i] = 1.0;
    push_orthonormalized(std::move(e));
  }
  if (int(frame.size()) != d)
    throw std::runtime_error("contact density: degenerate tangent frame");
  frame.erase(frame.begin());  // drop the normal, keep the tangent basis
  return frame;
}

struct McAccumulator {
  std::vector<double> values;

  double mean() const { return pairwise_sum(values) / double(values.size()); }
  double ci_halfwidth() const {
    const double mu = mean();
    std::vector<double> sq(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      sq[i] = (values[i] - mu) * (values[i] - mu);
    double var = pairwise_sum(sq) / double(values.size() - 1);
    return 1.96 * std::sqrt(var / double(values.size()));
  }
};

// Shared sampling loop: uniform direction on the sphere, projected
// radially onto the ellipsoid, weighed by form density, the radial map's
// surface Jacobian, and the caller's field. Returns per-sample values of
// area * weight. Radial projection rather than coordinate scaling: the
// scaling map pushes the round measure to an exact constant multiple of
// the form density, which would make every sample identical and the
// confidence interval meaningless.
McAccumulator sample_form_integral(const LensSpaceParams& params,
                                   long long n_samples, std::uint64_t seed,
                                   const TraceField* field) {
  params.validate();
  if (n_samples <= 0)
    throw std::invalid_argument("contact volume: need a positive sample count");
  const int mp1 = params.m() + 1;
  const int d = 2 * mp1;
  charge_budget(double(n_samples) * d * d * d, "contact volume sampling");

  const double area = 2.0 * std::pow(kPi, mp1) / factorial(params.m());

  Rng rng(seed);
  McAccumulator acc;
  acc.values.resize(std::size_t(n_samples));
  std::vector<double> u(d), z(d), pt;
  for (long long s = 0; s < n_samples; ++s) {
    double norm2 = 0.0;
    do {
      norm2 = 0.0;
      for (int i = 0; i < d; ++i) {
        u[i] = rng.gaussian();
        norm2 += u[i] * u[i];
      }
    } while (norm2 < 1e-12);
    const double inv = 1.0 / std::sqrt(norm2);
    // z = rho u with rho = (u^T A u)^{-1/2}; the Jacobian of the radial
    // map S^{D-1} -> ellipsoid is rho^{D+1} |A u|
    double quad = 0.0, anorm2 = 0.0;
    for (int j = 0; j < mp1; ++j) {
      const double ux = u[2 * j] * inv, uy = u[2 * j + 1] * inv;
      u[2 * j] = ux;
      u[2 * j + 1] = uy;
      quad += params.a[j] * (ux * ux + uy * uy);
      anorm2 += params.a[j] * params.a[j] * (ux * ux + uy * uy);
    }
    const double rho = 1.0 / std::sqrt(quad);
    for (int i = 0; i < d; ++i) z[i] = rho * u[i];
    const double jac = std::pow(rho, d + 1) * std::sqrt(anorm2);
    double w = contact_density(params, z.data()) * jac;
    if (field) {
      pt.assign(z.begin(), z.end());
      w *= (*field)(pt);
    }
    acc.values[std::size_t(s)] = area * w;
  }
  return acc;
}

}  // namespace

double contact_density(const LensSpaceParams& params, const double* z) {
  const int mp1 = params.m() + 1;
  auto frame = tangent_frame(params, z);
  const int n = int(frame.size());  // 2m + 1

  // bordered antisymmetric matrix: first row holds the one-form on the
  // frame, the block below the two-form; its Pfaffian times m! is the
  // evaluation of the top form on the orthonormal frame
  std::vector<std::vector<double>> b(n + 1, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i < n; ++i) {
    b[0][i + 1] = one_form(z, frame[i].data(), mp1);
    b[i + 1][0] = -b[0][i + 1];
    for (int j = i + 1; j < n; ++j) {
      b[i + 1][j + 1] = two_form(frame[i].data(), frame[j].data(), mp1);
      b[j + 1][i + 1] = -b[i + 1][j + 1];
    }
  }
  std::vector<int> idx(n + 1);
  for (int i = 0; i <= n; ++i) idx[i] = i;
  return factorial(params.m()) * std::abs(pfaffian(b, idx));
}

ContactVolumeResult contact_volume(const LensSpaceParams& params,
                                   long long n_samples, std::uint64_t seed) {
  McAccumulator acc = sample_form_integral(params, n_samples, seed, nullptr);
  ContactVolumeResult r;
  r.method = ContactVolumeResult::Method::monte_carlo;
  r.n_samples = n_samples;
  r.value = acc.mean() / double(params.q[0]);
  r.ci_halfwidth =
      (n_samples > 1 ? acc.ci_halfwidth() / double(params.q[0]) : 0.0);
  if (n_samples < kSampleFloor)
    r.warning = "sample count below floor; confidence interval unreliable";
  return r;
}

ContactVolumeResult contact_volume_closed_form(const LensSpaceParams& params) {
  params.validate();
  double v = std::pow(2.0 * kPi, params.m() + 1) / double(params.q[0]);
  for (double aj : params.a) v /= aj;
  ContactVolumeResult r;
  r.value = v;
  r.method = ContactVolumeResult::Method::analytic_oracle;
  return r;
}

double contact_volume_quadrature_m1(double a0, double a1) {
  if (!(a0 > 0.0) || !(a1 > 0.0))
    throw std::invalid_argument("quadrature oracle: frequencies must be > 0");
  const double r1_max = 1.0 / std::sqrt(a1);
  auto integrand = [a0, a1](double r1) {
    const double r0sq = (1.0 - a1 * r1 * r1) / a0;
    return r0sq * r1 + (a1 / a0) * r1 * r1 * r1;
  };
  const double inner = integrate_adaptive(integrand, 0.0, r1_max, 1e-12);
  return 2.0 * kPi * 2.0 * kPi * 2.0 * inner;
}

double leading_term_metric_contact(int m, double vol) {
  if (m < 1) throw std::invalid_argument("leading term: need m >= 1");
  return -0.5 * m * std::pow(2.0 * kPi, -(m + 1)) * vol;
}

double leading_term_general(const TraceField& field,
                            const LensSpaceParams& params, long long n_samples,
                            std::uint64_t seed) {
  if (!field)
    throw std::invalid_argument("leading term: missing trace field");
  McAccumulator acc = sample_form_integral(params, n_samples, seed, &field);
  const int m = params.m();
  const double integral = acc.mean() / double(params.q[0]);
  return -0.5 * std::pow(2.0 * kPi, -(m + 1)) / factorial(m) * integral;
}

double calibrated_constant_field(int m, double vol, double contact_volume) {
  if (m < 1) throw std::invalid_argument("calibration: need m >= 1");
  if (!(contact_volume > 0.0))
    throw std::invalid_argument("calibration: contact volume must be > 0");
  return m * factorial(m) * vol / contact_volume;
}

}  // namespace reeblab
