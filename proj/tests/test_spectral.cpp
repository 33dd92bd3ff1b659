#include "doctest.h"

#include <cmath>
#include <random>

#include "ajl/error.hpp"
#include "ajl/sim.hpp"
#include "ajl/spectral.hpp"

using namespace ajl;

namespace {

std::vector<double> uniform_grid(double lo, double hi, double step) {
  std::vector<double> x;
  const auto n = static_cast<int>(std::lround((hi - lo) / step));
  for (int i = 0; i <= n; ++i) x.push_back(lo + step * i);
  return x;
}

// Ψ = 𝓛 + 𝓕[ρ] for compound Poisson N(0,1) jumps of unit rate (closed form).
cplx cp_Psi(double u, double L) {
  const double band = std::sqrt(kPi / 2.0) * (std::erf((u + 1.0) / std::sqrt(2.0)) - std::erf((u - 1.0) / std::sqrt(2.0)));
  return L + 2.0 * std::exp(-u * u / 2.0) - band;
}

}  // namespace

TEST_CASE("T0 truncation") {
  CHECK(truncate_T0(0.5, 0.3) == cplx(0.5, 0.0));
  CHECK(std::abs(truncate_T0(cplx(0.0, 0.1), 0.3) - cplx(0.0, 0.3)) < 1e-15);
  CHECK(truncate_T0(1.5, 0.3) == cplx(1.0, 0.0));
  CHECK(std::abs(truncate_T0(cplx(0.0, 0.1), 0.3, T0Mode::radial) - cplx(0.0, 0.3)) < 1e-15);
  CHECK(std::abs(truncate_T0(cplx(0.0, 2.0), 0.3, T0Mode::radial) - cplx(0.0, 1.0)) < 1e-15);
}

TEST_CASE("T1 truncation") {
  CHECK(truncate_T1(1.0, 1.0, 1.5) == cplx(1.0, 0.0));
  CHECK(std::abs(truncate_T1(2.0, 1.0, 1.5) - cplx(1.5, 0.0)) < 1e-15);
  CHECK(std::abs(truncate_T1(cplx(0.0, 2.0), 1.0, 1.5) - cplx(0.0, 1.5)) < 1e-15);
  CHECK_THROWS_AS(truncate_T1(1.0, 0.0, 1.5), NumericalError);
}

TEST_CASE("transform of quadratic exponents is constant") {
  // Brownian: ψₛ = iμu - σ²u²/2 ⇒ Ψ ≡ σ²/3 = (2/3)α⁰.
  const double sigma = 0.8, mu = -0.3;
  PsiFn1 bm = [&](double u) { return kI * mu * u - sigma * sigma * u * u / 2.0; };
  for (double u : {0.0, 1.0, -7.3, 40.0}) CHECK(std::abs(transform_psi(bm, u) - sigma * sigma / 3.0) < 1e-12);

  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    Mat A(2, 2);
    A << unif(gen), unif(gen), 0.0, unif(gen);
    A(1, 0) = A(0, 1);
    const Vec b = Vec::NullaryExpr(2, [&] { return unif(gen); });
    const double c = unif(gen);
    PsiFn quad = [&](const Vec& u) { return cplx(c - u.dot(A * u), b.dot(u)); };
    // ∫_{[-1,1]²} wᵀAw dw = (4/3)·tr A.
    const double expect = 4.0 / 3.0 * A.trace();
    for (int k = 0; k < 3; ++k) {
      const Vec u = Vec::NullaryExpr(2, [&] { return 10.0 * unif(gen); });
      CHECK(std::abs(transform_psi(quad, u) - expect) < 1e-11);
    }
    PsiFn1 one = [&](double u) { return cplx(c - A(0, 0) * u * u, b(0) * u); };
    CHECK(std::abs(transform_psi(one, 3.3) - 2.0 / 3.0 * A(0, 0)) < 1e-12);
  }
  PsiFn1 flat = [](double) { return cplx(2.0, -1.0); };
  CHECK(std::abs(transform_psi(flat, 5.0)) < 1e-14);
}

TEST_CASE("limit of a constant") {
  PsiFn c = [](const Vec&) { return cplx(0.7, 0.0); };
  for (double U : {1.0, 12.5, 40.0}) {
    CHECK(std::abs(limit_estimate(c, U, 1) - 0.7) < 1e-12);
  }
  CHECK(std::abs(limit_estimate(c, 5.0, 2) - 0.7) < 1e-12);
  const double mass = limit_kernel(0.0) + limit_kernel(0.5) + limit_kernel(1.0) + limit_kernel(1.5);
  CHECK(mass == doctest::Approx(15.0 * 0.0625));

  PsiGrid grid(0.05, std::vector<cplx>(801, cplx(0.7, 0.0)));
  for (double U : {1.0, 17.3, 40.0}) {
    CHECK(grid.kernel_limit(U) == doctest::Approx(0.7).epsilon(1e-13));
    CHECK(grid.boundary_limit(U) == doctest::Approx(0.7).epsilon(1e-13));
  }
}

TEST_CASE("inverting the limit gives zero") {
  const auto x = uniform_grid(-3.0, 3.0, 0.05);
  PsiFn1 c = [](double) { return cplx(0.4, 0.0); };
  const auto inv = invert_rho(c, 0.4, 20.0, x, 0.05);
  for (double v : inv.values) CHECK(v == 0.0);
  PsiGrid grid(0.05, std::vector<cplx>(401, cplx(0.4, 0.0)));
  for (double v : grid.invert(20.0, 0.4, x).values) CHECK(std::abs(v) < 1e-15);
  CHECK_THROWS_AS(invert_rho(c, 0.4, 20.0, x, 2.0), ValidationError);
}

TEST_CASE("Hermitian inversion matches the two-sided sum") {
  const auto x = uniform_grid(-5.0, 5.0, 0.01);
  const double du = 0.05;
  std::vector<cplx> vals;
  for (int k = 0; k <= 1200; ++k) vals.push_back(cp_Psi(du * k, 0.3) + cplx(0.0, 0.01 * std::sin(du * k)));
  PsiGrid grid(du, vals);
  PsiFn1 two_sided = [&](double u) {
    const auto k = static_cast<std::size_t>(std::lround(std::abs(u) / du));
    return u < 0.0 ? std::conj(vals[k]) : vals[k];
  };
  const auto a = grid.invert(25.0, 0.3, x);
  const auto b = invert_rho(two_sided, 0.3, 25.0, x, du);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
  CHECK(worst < 1e-12);
  CHECK(b.imag_residue < 1e-12);
}

TEST_CASE("inversion converges to rho as U grows") {
  const auto spec = LevyMeasureSpec::compound_poisson_gaussian(1.0, 0.0, 1.0);
  const auto x = uniform_grid(-4.0, 4.0, 0.02);
  std::vector<double> truth;
  for (double v : x) truth.push_back(rho_from_nu(spec, v));
  PsiFn1 Psi = [](double u) { return cp_Psi(u, 1.0 / 3.0); };
  double previous = std::numeric_limits<double>::infinity();
  for (double U : {2.0, 3.0, 4.0, 6.0, 40.0}) {
    const auto inv = invert_rho(Psi, 1.0 / 3.0, U, x, 0.05);
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(inv.values[i] - truth[i]));
    CHECK((err < previous || err < 1e-12));
    previous = err;
  }
  CHECK(previous < 1e-10);
}

TEST_CASE("second derivative variation") {
  const auto x = uniform_grid(0.0, 1.0, 0.001);
  std::vector<double> f;
  for (double v : x) f.push_back(v * v * v);
  CHECK(second_derivative_variation(f, 0.001) == doctest::Approx(3.0).epsilon(1e-2));
  std::vector<double> line;
  for (double v : x) line.push_back(2.0 * v - 1.0);
  CHECK(second_derivative_variation(line, 0.001) < 1e-8);
}

TEST_CASE("cutoff selection") {
  EstimatorConfig cfg;
  cfg.limit_mode = LimitMode::boundary;
  const std::size_t n = static_cast<std::size_t>(std::lround(cfg.U_max / cfg.u_grid_step)) + 1;

  SUBCASE("constant transform returns the smallest cutoff") {
    PsiGrid grid(cfg.u_grid_step, std::vector<cplx>(n, cplx(0.5, 0.0)));
    const auto sel = select_U(grid, cfg);
    CHECK(sel.U_hat == sel.U_grid.front());
    for (double o : sel.objective) CHECK(std::abs(o) < 1e-9);
  }

  SUBCASE("objective agrees with a direct evaluation") {
    std::vector<cplx> vals;
    for (std::size_t k = 0; k < n; ++k) vals.push_back(cp_Psi(cfg.u_grid_step * k, 0.3));
    PsiGrid grid(cfg.u_grid_step, vals);
    const auto x = cfg.x_grid();
    const auto sel = select_U(grid, cfg);
    for (double U : {2.0, 7.5, 30.0}) {
      const auto m = static_cast<std::size_t>(std::lround(U / cfg.u_grid_step));
      double misfit = 0.0;
      for (std::size_t k = m; k < n; ++k) misfit += ((k == m || k == n - 1) ? 0.5 : 1.0) * std::norm(vals[k] - vals[m]);
      misfit *= 2.0 * cfg.u_grid_step;
      const double L = vals[m].real();
      PsiFn1 f = [&](double u) { return cp_Psi(u, 0.3); };
      const auto inv = invert_rho(f, L, U, x, cfg.u_grid_step);
      const double brute = misfit + cfg.pi_reg * second_derivative_variation(inv.values, cfg.x_step);
      double got_misfit = 0.0;
      const double got = select_U_objective(grid, U, cfg, &got_misfit);
      CHECK(got == doctest::Approx(brute).epsilon(1e-10));
      CHECK(got_misfit == doctest::Approx(misfit).epsilon(1e-12));
    }
    // The batch search reproduces the single-cutoff objective.
    for (std::size_t c = 0; c < sel.U_grid.size(); c += 7)
      CHECK(sel.objective[c] == doctest::Approx(select_U_objective(grid, sel.U_grid[c], cfg)).epsilon(1e-10));
  }
}

TEST_CASE("theoretical cutoff") {
  CHECK_FALSE(theoretical_U(1000000, 0.5, 1.5, 0.4, 1.0, 1).has_value());
  const double N = 1e6, L = 0.01, r = 1.0;
  const double radicand = r * std::log(N) - (0.25 + 3.0 + 0.5) * std::log(std::log(N));
  const auto U = theoretical_U(1000000, L, 1.5, r, 0.0, 1);
  REQUIRE(U.has_value());
  CHECK(*U == doctest::Approx(std::sqrt(radicand / L)).epsilon(1e-12));
  CHECK(*U == doctest::Approx(19.922).epsilon(1e-4));
}

TEST_CASE("index fit recovers a synthetic index") {
  std::vector<double> u;
  std::vector<cplx> psi;
  for (int k = 1; k <= 200; ++k) {
    const double v = 0.1 * k;
    u.push_back(v);
    psi.emplace_back(-v * v / 2.0 - 2.0 * std::pow(v, 0.5) + 0.3, 0.7 * v);
  }
  const auto fit = estimate_index(u, psi);
  REQUIRE(fit.alpha_tilde.has_value());
  CHECK(*fit.alpha_tilde == doctest::Approx(0.5));
  CHECK(fit.l3 == doctest::Approx(-2.0).epsilon(1e-6));
  CHECK(fit.l2 == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(fit.l1 == doctest::Approx(0.7).epsilon(1e-9));
  CHECK(index_objective(u, psi, 0.5) < 1e-15);

  u.resize(20);
  psi.resize(20);
  CHECK_THROWS_AS(estimate_index(u, psi), ValidationError);
}

TEST_CASE("near-zero correction") {
  EstimatorConfig cfg;
  const auto x = cfg.x_grid();
  const auto stable = LevyMeasureSpec::symmetric_stable(1.0, 0.5);
  std::vector<double> rho;
  for (double v : x) rho.push_back(rho_from_nu(stable, v));

  SUBCASE("exact input keeps the stable shape") {
    const auto c = correct_rho(rho, 0.5, x, cfg);
    REQUIRE(c.applied);
    CHECK(c.c_eps == doctest::Approx(2.0).epsilon(1e-3));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(c.values[i] - rho[i]) < 1e-3 * std::max(1.0, rho[i]));
  }

  SUBCASE("the corrected curve is continuous at epsilon") {
    // Flatten the input near zero as a cutoff-limited estimate would.
    std::vector<double> damped = rho;
    for (std::size_t i = 0; i < x.size(); ++i) damped[i] = rho[i] * (1.0 - std::exp(-x[i] * x[i] / 0.02));
    const auto c = correct_rho(damped, 0.5, x, cfg);
    REQUIRE(c.applied);
    const double dx = cfg.x_step;
    for (std::size_t i = 1; i < x.size(); ++i) {
      if (std::abs(x[i]) > c.epsilon + dx || std::abs(x[i]) < c.epsilon - dx) continue;
      CHECK(std::abs(c.values[i] - damped[i]) < 0.05 * damped[i] + 1e-3);
    }
    for (std::size_t i = 0; i < x.size(); ++i)
      if (std::abs(x[i]) > c.epsilon) CHECK(c.values[i] == damped[i]);
  }

  SUBCASE("non-positive input leaves the estimate alone") {
    std::vector<double> negative(x.size(), -1.0);
    const auto c = correct_rho(negative, 0.5, x, cfg);
    CHECK_FALSE(c.applied);
    CHECK(c.values == negative);
  }
  CHECK_THROWS_AS(correct_rho(rho, 1.2, x, cfg), ValidationError);
}

TEST_CASE("estimator configuration") {
  EstimatorConfig cfg;
  CHECK(cfg.snap(12.34) == doctest::Approx(12.35));
  CHECK(cfg.snap(0.0) == doctest::Approx(cfg.u_grid_step));
  const auto g = cfg.U_search_grid();
  CHECK(g.front() == doctest::Approx(1.0));
  CHECK(g.back() == doctest::Approx(cfg.U_max));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  cfg.x_step = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK(parse_limit_mode("boundary") == LimitMode::boundary);
  CHECK_THROWS_AS(parse_limit_mode("median"), ValidationError);
}

TEST_CASE("psi estimates from smoothed values") {
  WeightProfiles profiles(0.5, 1);
  SmoothedCF cf;
  for (int k = 0; k <= 10; ++k) {
    const double u = 0.5 * k;
    cf.u_grid.push_back(Vec::Constant(1, u));
    // φ = exp(-u²s/2) at s = 0.2, φₛ = -u²/2·φ: ψₛ = -u²/2.
    const cplx phi = std::exp(-u * u * 0.1);
    cf.phi_hat.push_back(phi);
    cf.phi_s_hat.push_back(-u * u / 2.0 * phi);
  }
  const auto est = psi_estimates(cf, profiles);
  for (int k = 0; k <= 4; ++k) {
    const double u = 0.5 * k;
    CHECK(std::abs(est.psi_s_hat[k] + u * u / 2.0) < 1e-12);
    CHECK(std::abs(est.psi_hat[k] + u * u * 0.1) < 1e-12);
  }
  cf.state.truncated = true;
  CHECK_THROWS_AS(psi_estimates(cf, profiles), EstimatorUnavailable);
}

TEST_CASE("end to end on exact inputs") {
  EstimatorConfig cfg;
  cfg.U = 20.0;

  SUBCASE("Brownian motion gives a zero density") {
    BrownianParams bm{0.1, 0.9, 0.0, {}};
    const auto chars = brownian_characteristics(bm);
    const auto est = run_spectral_pipeline(psi_source_exact(chars, Vec::Zero(1), 0, 1.0), cfg);
    double sup = 0.0;
    for (double v : est.rho_tilde) sup = std::max(sup, std::abs(v));
    CHECK(sup <= 1e-6);
    CHECK(std::abs(est.L_hat - 0.81 / 3.0) < 1e-8);
  }

  SUBCASE("compound Poisson density is recovered") {
    BrownianParams bm{0.0, 1.0, 0.0, LevyMeasureSpec::compound_poisson_gaussian(1.0, 0.0, 1.0)};
    const auto chars = brownian_characteristics(bm);
    cfg.limit_mode = LimitMode::boundary;
    cfg.U = 40.0;
    const auto est = run_spectral_pipeline(psi_source_exact(chars, Vec::Zero(1), 0, 1.0), cfg);
    double err = 0.0, peak = 0.0;
    for (std::size_t i = 0; i < est.x_grid.size(); ++i) {
      const double truth = rho_from_nu(bm.jumps, est.x_grid[i]);
      peak = std::max(peak, truth);
      err = std::max(err, std::abs(est.rho_tilde[i] - truth));
    }
    CHECK(err <= 0.01 * peak);
    CHECK(est.imag_residue < 1e-8);
  }
}
