#pragma once

#include <functional>
#include <vector>

#include "ajl/types.hpp"

namespace ajl::quad {

struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss–Legendre rule on [-1, 1].
const Rule& gauss_legendre(int n);

/// Composite Gauss–Legendre over [a, b] with `panels` equal sub-intervals.
cplx gauss_legendre(const std::function<cplx(double)>& f, double a, double b,
                    int nodes, int panels = 1);

/// Adaptive Gauss–Kronrod on a finite interval; throws NumericalError when the
/// error estimate stays above `rel_tol`.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-12);

/// ∫_a^∞ f(x) dx for integrable f (double-exponential rule).
double integrate_to_infinity(const std::function<double(double)>& f, double a,
                             double rel_tol = 1e-12);

/// ∫_0^∞ f(x) cos(ω x) dx and ∫_0^∞ f(x) sin(ω x) dx, ω > 0.
double fourier_cos(const std::function<double(double)>& f, double omega);
double fourier_sin(const std::function<double(double)>& f, double omega);

/// ∫_a^∞ e^{iωx} f(x) dx for f decaying at infinity, ω ≠ 0.
cplx fourier_tail(const std::function<double(double)>& f, double a, double omega);

}  // namespace ajl::quad
