#pragma once
// 1-d quadrature: fixed-order Gauss-Legendre panels and adaptive Simpson.

#include <functional>
#include <vector>

namespace reeblab {

// Nodes/weights for n-point Gauss-Legendre on [-1,1]; cached per order.
const std::vector<double>& gl_nodes(int n);
const std::vector<double>& gl_weights(int n);

double gauss_legendre(const std::function<double(double)>& f, double a,
                      double b, int n);

// Adaptive Simpson with absolute tolerance; max_depth guards runaway
// recursion on kinks (accuracy then degrades gracefully).
double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double abs_tol, int max_depth = 48);

}  // namespace reeblab
