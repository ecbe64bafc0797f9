#pragma once
// Compactly supported piecewise polynomials with exact integral helpers.
// Piece i lives on [knots[i], knots[i+1]) and stores coefficients in the
// local variable u = x - knots[i], ascending powers; the local basis keeps
// high-order B-spline pieces well conditioned. Value is 0 outside the knots.

#include <vector>

namespace reeblab {

class PiecewisePoly {
 public:
  PiecewisePoly() = default;
  PiecewisePoly(std::vector<double> knots,
                std::vector<std::vector<double>> coef);

  double operator()(double x) const;
  double derivative_at(double x) const;

  // F(x) = integral of f over (-inf, x]; exact.
  double cumulative(double x) const;
  double mass() const { return total_; }
  double integral(double a, double b) const {
    return cumulative(b) - cumulative(a);
  }
  // integral of |u| f(u) over (-inf, y]; exact (pieces split at 0 inside).
  double abs_moment_cumulative(double y) const;

  double support_lo() const { return knots_.front(); }
  double support_hi() const { return knots_.back(); }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<std::vector<double>>& coefficients() const {
    return coef_;
  }
  double max_degree() const;

  // g(x) = f(s x) with s > 0; support scales by 1/s.
  PiecewisePoly scaled_arg(double s) const;
  // g(x) = c f(x).
  PiecewisePoly scaled_value(double c) const;
  // Sliding average g(x) = (1/(2w)) * integral of f over [x-w, x+w].
  PiecewisePoly box_convolve(double w) const;

  static PiecewisePoly box(double lo, double hi, double value);
  // Centered cardinal B-spline of the given order (order 1 = unit box);
  // support [-order/2, order/2], unit mass, C^{order-2}.
  static PiecewisePoly bspline(int order);

 private:
  std::vector<double> knots_;
  std::vector<std::vector<double>> coef_;
  std::vector<double> cum_;  // cumulative integral at each knot
  double total_ = 0.0;
  void build_cum();
  // index of piece containing x, or -1 / npieces for out-of-range
  int piece_of(double x) const;
};

}  // namespace reeblab
