#include "doctest.h"

#include <cmath>
#include <filesystem>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ajl/error.hpp"
#include "ajl/smoother.hpp"

using namespace ajl;

namespace {

Vec vec1(double x) { return Vec::Constant(1, x); }

ObservationSet bm_random(std::size_t N, std::uint64_t seed, double T = 1.0) {
  BrownianParams bm;
  bm.mu = 0.2;
  return build_observation_set(Model{bm}, Design{RandomDesign{T}}, N, seed, 1);
}

// Direct solve of min Σ K((δ-s)/h)|Y - a - b(δ-s)|².
std::pair<cplx, cplx> brute_wls(const ObservationSet& obs, double u, const SmootherConfig& cfg) {
  Eigen::Matrix2cd A = Eigen::Matrix2cd::Zero();
  Eigen::Vector2cd rhs = Eigen::Vector2cd::Zero();
  for (const auto& r : obs.records) {
    const double z = r.delta - cfg.s;
    const double w = cfg.kernel(z / cfg.h);
    if (w == 0.0) continue;
    const cplx y = std::exp(kI * u * r.x_end(0));
    A(0, 0) += w;
    A(0, 1) += w * z;
    A(1, 1) += w * z * z;
    rhs(0) += w * y;
    rhs(1) += w * z * y;
  }
  A(1, 0) = A(0, 1);
  const Eigen::Vector2cd beta = A.fullPivLu().solve(rhs);
  return {beta(0), beta(1)};
}

}  // namespace

TEST_CASE("bandwidth rule") {
  CHECK(bandwidth_rule(1000, 0.2) == doctest::Approx(0.3994).epsilon(1e-3));
  // N = e makes log N = 1; the rule takes integer N, so check the formula directly.
  CHECK(std::pow(1.0 / std::exp(1.0), 0.2) == doctest::Approx(0.81873).epsilon(1e-5));
  CHECK(bandwidth_rule(250, 0.2) > bandwidth_rule(4000, 0.2));
  CHECK_THROWS_AS(bandwidth_rule(1, 0.2), ValidationError);
}

TEST_CASE("kernels") {
  const auto e = Kernel::epanechnikov();
  CHECK(e(0.0) == doctest::Approx(0.75));
  CHECK(e(1.5) == 0.0);
  for (const auto& k : {Kernel::epanechnikov(), Kernel::uniform(), Kernel::triweight()}) {
    const double mass = boost::math::quadrature::gauss_kronrod<double, 31>::integrate([&](double z) { return k(z); }, -1.0, 1.0);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(Kernel::by_name(k.name).name == k.name);
  }
  CHECK_THROWS_AS(Kernel::by_name("gaussian"), ValidationError);
}

TEST_CASE("local linear fit equals brute-force weighted least squares") {
  const auto obs = bm_random(400, 5);
  SmootherConfig cfg;
  cfg.h = 0.2;
  cfg.s = 0.3;
  for (double u : {0.0, 0.7, 2.5, -4.0}) {
    const auto fit = local_linear_fit(obs, vec1(u), cfg);
    const auto [a, b] = brute_wls(obs, u, cfg);
    CHECK(std::abs(fit.phi - a) < 1e-12);
    CHECK(std::abs(fit.phi_s - b) < 1e-12 * std::max(1.0, std::abs(b)));
  }
}

TEST_CASE("weights reproduce constants and lines exactly") {
  const auto obs = bm_random(300, 6);
  SmootherConfig cfg;
  cfg.h = 0.25;
  cfg.s = 0.4;
  const auto w = local_linear_weights(obs, cfg);
  double c0 = 0.0, c1 = 0.0, l0 = 0.0, l1 = 0.0;
  for (std::size_t n = 0; n < obs.size(); ++n) {
    const double y = 1.5 - 2.0 * obs.records[n].delta;
    c0 += w.tau0[n];
    c1 += w.tau1[n];
    l0 += w.tau0[n] * y;
    l1 += w.tau1[n] * y;
  }
  CHECK(c0 == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(c1) < 1e-10);
  CHECK(l0 == doctest::Approx(1.5 - 2.0 * cfg.s).epsilon(1e-13));
  CHECK(l1 == doctest::Approx(-2.0).epsilon(1e-12));

  // u = 0 gives φ̂ = 1 and φ̂ₛ = 0.
  const auto fit = local_linear_fit(obs, vec1(0.0), cfg);
  CHECK(std::abs(fit.phi - 1.0) < 1e-13);
  CHECK(std::abs(fit.phi_s) < 1e-10);
}

TEST_CASE("Hermitian symmetry") {
  const auto obs = bm_random(200, 7);
  SmootherConfig cfg;
  cfg.h = 0.3;
  cfg.s = 0.5;
  SmoothedCFEvaluator eval(obs, cfg);
  for (double u : {0.4, 3.0}) {
    const auto [p, ps] = eval(vec1(u));
    const auto [q, qs] = eval(vec1(-u));
    CHECK(std::abs(p - std::conj(q)) < 1e-14);
    CHECK(std::abs(ps - std::conj(qs)) < 1e-12);
  }
}

TEST_CASE("limiting design matrix for a uniform design") {
  SmootherConfig cfg;
  cfg.h = 1e-3;
  cfg.s = 0.5;
  const auto G = design_gamma(Design{RandomDesign{1.0}}, cfg);
  CHECK(G(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(G(0, 1)) < 1e-12);
  CHECK(G(1, 1) == doctest::Approx(0.2).epsilon(1e-10));

  // Close to the boundary the window is cut and the off-diagonal moment appears.
  cfg.h = 0.2;
  cfg.s = 0.05;
  const auto B = design_gamma(Design{RandomDesign{1.0}}, cfg);
  CHECK(B(0, 0) < 1.0);
  CHECK(B(0, 1) > 0.0);

  // The empirical Γ tracks Γ̄ and stays symmetric in the centre.
  const auto obs = bm_random(20000, 8);
  cfg.h = 0.1;
  cfg.s = 0.5;
  const auto st = gamma_matrices(obs, cfg);
  CHECK(std::abs(st.Gamma(0, 1)) < 0.05);
  CHECK(st.Gamma(0, 0) == doctest::Approx(st.GammaBar(0, 0)).epsilon(0.05));
  CHECK(st.Gamma(1, 1) == doctest::Approx(st.GammaBar(1, 1)).epsilon(0.1));
  CHECK_FALSE(st.truncated);
}

TEST_CASE("degenerate design truncates") {
  ObservationSet obs;
  obs.design = RandomDesign{1.0};
  obs.base_state = vec1(0.0);
  for (int i = 0; i < 10; ++i) obs.records.push_back({0.5, vec1(0.0), vec1(0.1 * i)});
  SmootherConfig cfg;
  cfg.h = 0.2;
  cfg.s = 0.5;
  const auto st = gamma_matrices(obs, cfg);
  CHECK(st.truncated);
  CHECK(st.lambda_min <= 0.5 * st.gamma0);
  const auto fit = local_linear_fit(obs, vec1(1.0), cfg);
  CHECK(fit.phi == cplx(0.0, 0.0));
  CHECK(fit.phi_s == cplx(0.0, 0.0));
  // Same answer on a second call.
  CHECK(gamma_matrices(obs, cfg).truncated);

  cfg.s = 0.9;
  CHECK_THROWS_AS(local_linear_weights(obs, cfg), EstimatorUnavailable);
}

TEST_CASE("finite-difference c.f. derivative") {
  ObservationSet obs;
  obs.design = IidPairs{0.1};
  obs.base_state = vec1(0.0);
  for (int i = 0; i < 5; ++i) obs.records.push_back({0.1, vec1(0.3 * i), vec1(0.3 * i)});
  CHECK(fd_cf_derivative(obs, vec1(2.0)) == cplx(0.0, 0.0));

  BrownianParams bm;
  const auto pairs = build_observation_set(Model{bm}, Design{IidPairs{0.1}}, 100, 1, 1);
  CHECK(fd_cf_derivative(pairs, vec1(0.0)) == cplx(0.0, 0.0));
  const auto random = bm_random(10, 1);
  CHECK_THROWS_AS(fd_cf_derivative(random, vec1(1.0)), ValidationError);
}

TEST_CASE("weighted sup error") {
  CHECK(sup_weight(0.5) == 1.0);
  CHECK(sup_weight(2.0) == doctest::Approx(1.0 / 16.0));
  std::vector<Vec> grid{vec1(0.0), vec1(2.0)};
  std::vector<cplx> a{1.0, 1.0}, b{0.5, 0.0};
  CHECK(weighted_sup_error(grid, a, b) == doctest::Approx(0.5));
}

TEST_CASE("smoothed c.f. file round trip") {
  const auto obs = bm_random(300, 9);
  SmootherConfig cfg;
  cfg.h = 0.3;
  cfg.s = 0.5;
  std::vector<Vec> grid;
  for (int k = -5; k <= 5; ++k) grid.push_back(vec1(0.5 * k));
  const auto cf = smoothed_cf_grid(obs, grid, cfg, 2);
  const auto serial = smoothed_cf_grid(obs, grid, cfg, 1);
  CHECK(cf.phi_hat == serial.phi_hat);

  const auto path = std::filesystem::temp_directory_path() / "ajl_smoothed_test.csv";
  write_smoothed_cf(cf, path);
  const auto back = read_smoothed_cf(path);
  CHECK(back.h == cf.h);
  CHECK(back.s == cf.s);
  CHECK(back.kernel == cf.kernel);
  CHECK(back.state.gamma0 == cf.state.gamma0);
  CHECK(back.state.truncated == cf.state.truncated);
  REQUIRE(back.u_grid.size() == grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(back.u_grid[i] == grid[i]);
    CHECK(back.phi_hat[i] == cf.phi_hat[i]);
    CHECK(back.phi_s_hat[i] == cf.phi_s_hat[i]);
  }
  std::filesystem::remove(path);
  std::filesystem::path side = path;
  std::filesystem::remove(side.replace_extension(".json"));
}
