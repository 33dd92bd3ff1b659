#include "ajl/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include "ajl/error.hpp"

namespace ajl::quad {

namespace {

Rule build_gauss_legendre(int n) {
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace

const Rule& gauss_legendre(int n) {
  if (n < 1) throw ValidationError("gauss_legendre: node count must be >= 1");
  static std::mutex mutex;
  static std::map<int, Rule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_gauss_legendre(n)).first;
  return it->second;
}

cplx gauss_legendre(const std::function<cplx(double)>& f, double a, double b,
                    int nodes, int panels) {
  if (panels < 1) throw ValidationError("gauss_legendre: panels must be >= 1");
  const Rule& rule = gauss_legendre(nodes);
  const double width = (b - a) / panels;
  cplx total{0.0, 0.0};
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * width;
    const double half = 0.5 * width;
    cplx panel{0.0, 0.0};
    for (int k = 0; k < nodes; ++k) panel += rule.weights[k] * f(mid + half * rule.nodes[k]);
    total += half * panel;
  }
  return total;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol) {
  double err = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, a, b, 20, rel_tol, &err, &l1);
  if (!std::isfinite(value) || err > std::max(1e3 * rel_tol * l1, 1e-13)) {
    throw NumericalError("quadrature did not converge on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "], error estimate " + std::to_string(err));
  }
  return value;
}

double integrate_to_infinity(const std::function<double(double)>& f, double a,
                             double rel_tol) {
  boost::math::quadrature::exp_sinh<double> integrator;
  double err = 0.0;
  double l1 = 0.0;
  const double value = integrator.integrate(
      [&](double t) { return f(a + t); }, 0.0, std::numeric_limits<double>::infinity(),
      rel_tol, &err, &l1);
  if (!std::isfinite(value)) throw NumericalError("tail quadrature produced a non-finite value");
  return value;
}

double fourier_cos(const std::function<double(double)>& f, double omega) {
  thread_local boost::math::quadrature::ooura_fourier_cos<double> integrator(1e-12);
  const auto [value, rel_err] = integrator.integrate(f, omega);
  if (!std::isfinite(value)) throw NumericalError("Fourier cosine quadrature failed");
  return value;
}

double fourier_sin(const std::function<double(double)>& f, double omega) {
  thread_local boost::math::quadrature::ooura_fourier_sin<double> integrator(1e-12);
  const auto [value, rel_err] = integrator.integrate(f, omega);
  if (!std::isfinite(value)) throw NumericalError("Fourier sine quadrature failed");
  return value;
}

cplx fourier_tail(const std::function<double(double)>& f, double a, double omega) {
  if (omega == 0.0) return {integrate_to_infinity(f, a), 0.0};
  const double w = std::abs(omega);
  auto shifted = [&](double t) { return f(a + t); };
  const double c = fourier_cos(shifted, w);
  const double s = fourier_sin(shifted, w);
  // ∫_0^∞ e^{iw(a+t)} g(t) dt = e^{iwa} (C + iS)
  const cplx tail = std::exp(cplx{0.0, w * a}) * cplx{c, s};
  return omega > 0.0 ? tail : std::conj(tail);
}

}  // namespace ajl::quad
