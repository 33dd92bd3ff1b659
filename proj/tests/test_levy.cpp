#include "doctest.h"

#include <cmath>
#include <filesystem>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ajl/error.hpp"
#include "ajl/levy.hpp"
#include "ajl/spectral.hpp"

using namespace ajl;

TEST_CASE("rho examples") {
  const auto stable = LevyMeasureSpec::symmetric_stable(0.1, 0.5);
  CHECK(rho_from_nu(stable, 0.0) == 0.0);
  CHECK(rho_from_nu(stable, kPi) == doctest::Approx(0.035917).epsilon(1e-4));
  CHECK(rho_from_nu(stable, kPi) == doctest::Approx(2.0 * 0.1 * std::pow(kPi, -1.5)).epsilon(1e-12));

  const auto cp = LevyMeasureSpec::compound_poisson_gaussian(1.0, 0.0, 1.0);
  // 2(1 - sin π/π)·φ_N(π) = 2·0.0028694; the spec's worked value halves φ_N(π).
  CHECK(rho_from_nu(cp, kPi) == doctest::Approx(2.0 * std::exp(-kPi * kPi / 2.0) / std::sqrt(2.0 * kPi)).epsilon(1e-12));
  CHECK(rho_from_nu(cp, kPi) == doctest::Approx(0.0057388).epsilon(1e-4));
  CHECK(rho_from_nu(cp, 0.0) == 0.0);

  // ρ ~ x²ν/3 near zero.
  for (double x : {1e-2, 1e-3}) CHECK(rho_from_nu(stable, x) == doctest::Approx(x * x / 3.0 * 0.1 * std::pow(x, -1.5)).epsilon(1e-3));
  CHECK(rho_from_nu(stable, 1e-6) < rho_from_nu(stable, 1e-4));
  CHECK(rho_from_nu(stable, 1e-8) < 1e-5);
  CHECK(rho_from_nu(stable, -2.0) == doctest::Approx(rho_from_nu(stable, 2.0)));
}

TEST_CASE("stable eta matches the Gamma-function form") {
  for (double a : {0.2, 0.5, 0.8}) {
    const double C = 0.7;
    const double eta = 2.0 * C * std::tgamma(1.0 - a) * std::cos(kPi * a / 2.0) / a;
    CHECK(LevyMeasureSpec::symmetric_stable(C, a).stable_eta() == doctest::Approx(eta).epsilon(1e-10));
    CHECK(stable_integral_constant(a) == doctest::Approx(eta / C).epsilon(1e-10));
  }
}

TEST_CASE("closed forms agree with quadrature of the Lévy integral") {
  const LevyMeasureSpec specs[] = {
      LevyMeasureSpec::symmetric_stable(1.0, 0.5),
      LevyMeasureSpec::symmetric_stable(0.4, 0.8),
      LevyMeasureSpec::compound_poisson_gaussian(1.0, 0.0, 1.0),
      LevyMeasureSpec::compound_poisson_gaussian(2.0, 0.3, 0.5),
  };
  for (const auto& spec : specs) {
    for (double u : {-3.0, 0.4, 1.0, 7.5}) {
      const cplx closed = levy_exponent(spec, u);
      const cplx quad = levy_exponent_by_quadrature(spec, u);
      CHECK(std::abs(closed - quad) <= 1e-6 * std::max(1.0, std::abs(closed)));
    }
    CHECK(std::abs(levy_exponent(spec, 0.0)) == 0.0);
  }
}

TEST_CASE("compound Poisson Gaussian exponent") {
  // Zero-mean jumps: the compensator vanishes and ϑ = λ(e^{-u²/2} - 1).
  const auto cp = LevyMeasureSpec::compound_poisson_gaussian(1.5, 0.0, 1.0);
  for (double u : {0.5, 2.0, 40.0}) CHECK(std::abs(levy_exponent(cp, u) - 1.5 * (std::exp(-u * u / 2.0) - 1.0)) < 1e-12);
  CHECK(compensator_drift(cp) == doctest::Approx(0.0));

  // Shifted jumps: ∫χ dν by an independent Gauss–Kronrod run.
  const auto shifted = LevyMeasureSpec::compound_poisson_gaussian(1.0, 0.5, 1.0);
  auto integrand = [](double x) { return chi_scalar(x) * std::exp(-(x - 0.5) * (x - 0.5) / 2.0) / std::sqrt(2.0 * kPi); };
  const double drift = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -40.0, 40.0, 15, 1e-13);
  CHECK(compensator_drift(shifted) == doctest::Approx(drift).epsilon(1e-9));
  const double u = 3.0;
  const cplx expect = std::exp(kI * 0.5 * u - u * u / 2.0) - 1.0 - kI * u * drift;
  CHECK(std::abs(levy_exponent(shifted, u) - expect) < 1e-9);
}

TEST_CASE("stable exponent is homogeneous") {
  const auto s = LevyMeasureSpec::symmetric_stable(1.0, 0.5);
  for (double u : {0.3, 1.0, 4.0}) {
    CHECK(std::abs(levy_exponent(s, 2.0 * u) - std::pow(2.0, 0.5) * levy_exponent(s, u)) < 1e-12);
    CHECK(std::abs(levy_exponent(s, -u) - levy_exponent(s, u)) < 1e-15);
  }
}

TEST_CASE("scaling the measure scales the exponent") {
  const auto s = LevyMeasureSpec::compound_poisson_gaussian(1.0, 0.2, 0.7);
  const auto t = s.scaled(2.5);
  for (double u : {0.5, 3.0}) CHECK(std::abs(levy_exponent(t, u) - 2.5 * levy_exponent(s, u)) < 1e-12);
  CHECK(t.density(0.4) == doctest::Approx(2.5 * s.density(0.4)));
}

TEST_CASE("Fourier transform of rho") {
  // At u = 0 the Ψ identity gives the mass ∫_{-1}^{1} η|w|^α dw = 2η/(1+α).
  for (double a : {0.3, 0.5, 0.8}) {
    const auto stable = LevyMeasureSpec::symmetric_stable(1.3, a);
    const cplx at0 = fourier_of_rho(stable, 0.0);
    CHECK(at0.real() == doctest::Approx(2.0 * stable.stable_eta() / (1.0 + a)).epsilon(1e-10));
    for (double u : {0.7, 3.0, 10.0}) CHECK(std::abs(fourier_of_rho(stable, u).imag()) < 1e-10);
  }
  const auto cp = LevyMeasureSpec::compound_poisson_gaussian(1.0, 0.0, 1.0);
  auto r = [&](double x) { return rho_from_nu(cp, x); };
  const double mass = 2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(r, 0.0, 40.0, 20, 1e-13);
  CHECK(fourier_of_rho(cp, 0.0).real() == doctest::Approx(mass).epsilon(1e-10));
  // Compound Poisson: 2λ(e^{-u²/2} - ∫_{-1}^{1} e^{-(u+w)²/2}/2 dw) in closed form.
  for (double u : {0.0, 1.0, 2.5}) {
    const double tail = std::sqrt(kPi / 2.0) * (std::erf((u + 1.0) / std::sqrt(2.0)) - std::erf((u - 1.0) / std::sqrt(2.0))) / 2.0;
    const double expect = 2.0 * std::exp(-u * u / 2.0) - 2.0 * tail;
    CHECK(fourier_of_rho(cp, u).real() == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("Psi transform of the exponent is the Fourier transform of rho") {
  const LevyMeasureSpec specs[] = {
      LevyMeasureSpec::symmetric_stable(1.0, 0.5),
      LevyMeasureSpec::compound_poisson_gaussian(1.0, 0.4, 0.8),
  };
  for (const auto& spec : specs) {
    // |u| > 1 keeps the kink of ϑ at zero outside the averaging window.
    for (double u : {1.3, -2.5, 6.0}) {
      PsiFn1 theta = [&](double v) { return levy_exponent(spec, v); };
      const cplx Psi = transform_psi(theta, u, 33, 8);
      CHECK(std::abs(Psi - fourier_of_rho(spec, u)) < 1e-10);
    }
  }
}

TEST_CASE("tabulated densities") {
  TabulatedDensity t{{-1.0, 0.0, 2.0}, {0.0, 1.0, 0.0}};
  CHECK(t(0.5) == doctest::Approx(0.75));
  CHECK(t(3.0) == 0.0);
  const auto path = std::filesystem::temp_directory_path() / "ajl_tab_test.csv";
  save_tabulated_csv(t, path);
  const auto back = load_tabulated_csv(path);
  CHECK(back.x == t.x);
  CHECK(back.value == t.value);
  std::filesystem::remove(path);

  TabulatedDensity bad{{0.0, 0.0}, {1.0, 1.0}};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(LevyMeasureSpec::symmetric_stable(1.0, 1.2), ValidationError);
}

TEST_CASE("moment supremum") {
  CHECK(LevyMeasureSpec::symmetric_stable(1.0, 0.5).moment_sup() == doctest::Approx(0.5));
  CHECK(std::isinf(LevyMeasureSpec::compound_poisson_gaussian(1.0, 0.0, 1.0).moment_sup()));
  CHECK(LevyMeasureSpec::none().has_finite_moment(3.0));
}
