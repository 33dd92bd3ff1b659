#include "ajl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include <Eigen/QR>

#include "ajl/error.hpp"
#include "ajl/io.hpp"
#include "ajl/parallel.hpp"
#include "ajl/quadrature.hpp"

namespace ajl {

LimitMode parse_limit_mode(const std::string& name) {
  if (name == "kernel") return LimitMode::kernel;
  if (name == "boundary") return LimitMode::boundary;
  throw ValidationError("limit mode must be 'kernel' or 'boundary', got '" + name + "'");
}

std::string to_string(LimitMode mode) { return mode == LimitMode::kernel ? "kernel" : "boundary"; }

T0Mode parse_t0_mode(const std::string& name) {
  if (name == "literal") return T0Mode::literal;
  if (name == "radial") return T0Mode::radial;
  throw ValidationError("t0 mode must be 'literal' or 'radial', got '" + name + "'");
}

std::string to_string(T0Mode mode) { return mode == T0Mode::literal ? "literal" : "radial"; }

double limit_kernel(double u) {
  const double a = std::abs(u);
  if (a > 1.0) return 0.0;
  const double t = a * (1.0 - a);
  return 15.0 * t * t;
}

void EstimatorConfig::validate() const {
  if (U && !(*U > 0.0)) throw ValidationError("U must be > 0");
  if (!(U_max > 1.0)) throw ValidationError("U_max must be > 1");
  if (!(kappa >= 1.0 && kappa < 2.0)) throw ValidationError("kappa must lie in [1, 2)");
  if (!(pi_reg > 0.0)) throw ValidationError("pi_reg must be > 0");
  if (!(u_grid_step > 0.0) || u_grid_step > U_max) throw ValidationError("u_grid_step must lie in (0, U_max]");
  if (transform_nodes < 1 || transform_panels < 1) throw ValidationError("transform quadrature needs >= 1 node and panel");
  if (!(x_step > 0.0) || !(x_max > x_min)) throw ValidationError("x grid must have x_max > x_min and x_step > 0");
  const double xabs = std::max(std::abs(x_min), std::abs(x_max));
  if (u_grid_step > kPi / (4.0 * xabs))
    throw ValidationError("u_grid_step exceeds the Nyquist margin pi / (4 max|x|)");
  if (U_search_points < 1) throw ValidationError("U search grid must be nonempty");
  if (epsilon_candidates < 1) throw ValidationError("epsilon_candidates must be >= 1");
  if (!(epsilon_tolerance >= 0.0)) throw ValidationError("epsilon_tolerance must be >= 0");
  if (U && *U > U_max) throw ValidationError("U must not exceed U_max");
}

std::vector<double> EstimatorConfig::x_grid() const {
  const auto n = static_cast<std::size_t>(std::llround((x_max - x_min) / x_step));
  std::vector<double> x(n + 1);
  for (std::size_t i = 0; i <= n; ++i) x[i] = x_min + x_step * static_cast<double>(i);
  return x;
}

double EstimatorConfig::snap(double value) const {
  const double k = std::max(1.0, std::round(value / u_grid_step));
  return k * u_grid_step;
}

std::vector<double> EstimatorConfig::U_search_grid() const {
  std::vector<double> out;
  const int n = U_search_points;
  for (int i = 0; i < n; ++i) {
    const double t = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    const double U = snap(std::exp(t * std::log(U_max)));
    if (U > U_max + 1e-12) continue;
    if (out.empty() || U > out.back() + 0.5 * u_grid_step) out.push_back(U);
  }
  if (out.empty()) throw ValidationError("empty U search grid");
  return out;
}

cplx truncate_T0(cplx phi_hat, double rho0, T0Mode mode) {
  if (!(rho0 > 0.0 && rho0 <= 1.0)) throw ValidationError("rho0 must lie in (0, 1]");
  const double m = std::abs(phi_hat);
  if (m > 1.0) return mode == T0Mode::literal ? cplx{1.0, 0.0} : phi_hat / m;
  if (m >= rho0) return phi_hat;
  if (m > 0.0) return rho0 * phi_hat / m;
  return {rho0, 0.0};
}

cplx truncate_T1(cplx phi_s_hat, cplx phi_hat, double rho1) {
  if (phi_hat == cplx{0.0, 0.0}) throw NumericalError("truncate_T1: zero denominator");
  if (!(rho1 >= 0.0)) throw ValidationError("rho1 must be >= 0");
  const cplx ratio = phi_s_hat / phi_hat;
  if (std::abs(phi_s_hat) <= rho1 * std::abs(phi_hat)) return ratio;
  return rho1 * ratio / std::abs(ratio);
}

PsiEstimates psi_estimates(const SmoothedCF& smoothed, const WeightProfiles& profiles, T0Mode mode) {
  const bool all_zero = std::all_of(smoothed.phi_hat.begin(), smoothed.phi_hat.end(),
                                    [](cplx z) { return z == cplx{0.0, 0.0}; });
  if (smoothed.state.truncated || all_zero)
    throw EstimatorUnavailable("smoothed c.f. is Gamma-truncated to zero; the spectral estimator is unavailable");
  PsiEstimates out;
  out.psi_hat.resize(smoothed.u_grid.size());
  out.psi_s_hat.resize(smoothed.u_grid.size());
  double prev_phase = 0.0;
  for (std::size_t k = 0; k < smoothed.u_grid.size(); ++k) {
    const double v = smoothed.u_grid[k].norm();
    const cplx t0 = truncate_T0(smoothed.phi_hat[k], profiles.rho0(v), mode);
    double phase = std::arg(t0);
    // Keep the phase within π of its predecessor.
    phase += 2.0 * kPi * std::round((prev_phase - phase) / (2.0 * kPi));
    prev_phase = phase;
    out.psi_hat[k] = {std::log(std::abs(t0)), phase};
    out.psi_s_hat[k] = truncate_T1(smoothed.phi_s_hat[k], t0, profiles.rho1(v));
  }
  return out;
}

namespace {

quad::Rule composite_rule(int nodes, int panels, double a, double b) {
  const quad::Rule& base = quad::gauss_legendre(nodes);
  quad::Rule out;
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + width * p;
    for (std::size_t i = 0; i < base.nodes.size(); ++i) {
      out.nodes.push_back(lo + 0.5 * width * (base.nodes[i] + 1.0));
      out.weights.push_back(0.5 * width * base.weights[i]);
    }
  }
  return out;
}

void check_nyquist(double du, const std::vector<double>& x_grid) {
  if (x_grid.empty()) throw ValidationError("x grid must be nonempty");
  double xabs = 0.0;
  for (double x : x_grid) xabs = std::max(xabs, std::abs(x));
  if (xabs > 0.0 && du > kPi / (4.0 * xabs))
    throw ValidationError("u_grid_step exceeds the Nyquist margin pi / (4 max|x|)");
}

std::size_t steps_for(double U, double du) {
  if (!(U > 0.0)) throw ValidationError("U must be > 0");
  return static_cast<std::size_t>(std::max(1.0, std::round(U / du)));
}

}  // namespace

cplx transform_psi(const PsiFn& psi_s, const Vec& u, int transform_nodes, int panels) {
  const auto d = u.size();
  if (d < 1 || d > 2) throw ValidationError("transform_psi supports d = 1 or 2");
  const quad::Rule rule = composite_rule(transform_nodes, panels, -1.0, 1.0);
  const double volume = d == 1 ? 2.0 : 4.0;
  cplx avg{0.0, 0.0};
  Vec w = u;
  if (d == 1) {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      w(0) = u(0) + rule.nodes[i];
      avg += rule.weights[i] * psi_s(w);
    }
  } else {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        w(0) = u(0) + rule.nodes[i];
        w(1) = u(1) + rule.nodes[j];
        avg += rule.weights[i] * rule.weights[j] * psi_s(w);
      }
    }
  }
  return volume * psi_s(u) - avg;
}

cplx transform_psi(const PsiFn1& psi_s, double u, int transform_nodes, int panels) {
  const quad::Rule rule = composite_rule(transform_nodes, panels, -1.0, 1.0);
  cplx avg{0.0, 0.0};
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) avg += rule.weights[i] * psi_s(u + rule.nodes[i]);
  return 2.0 * psi_s(u) - avg;
}

cplx limit_estimate(const PsiFn& Psi_hat, double U, int d, int nodes_per_panel) {
  if (!(U > 0.0)) throw ValidationError("U must be > 0");
  if (d < 1 || d > 2) throw ValidationError("limit_estimate supports d = 1 or 2");
  // The kernel is polynomial on each side of 0, so 0 is kept as a panel edge.
  const int per_side = std::max(1, static_cast<int>(std::ceil(U)));
  quad::Rule rule = composite_rule(nodes_per_panel, 2 * per_side, -U, U);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) rule.weights[i] *= limit_kernel(rule.nodes[i] / U) / U;
  cplx sum{0.0, 0.0};
  Vec u(d);
  if (d == 1) {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      u(0) = rule.nodes[i];
      sum += rule.weights[i] * Psi_hat(u);
    }
  } else {
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        u(0) = rule.nodes[i];
        u(1) = rule.nodes[j];
        sum += rule.weights[i] * rule.weights[j] * Psi_hat(u);
      }
    }
  }
  return sum;
}

namespace {

Inversion finish(std::vector<cplx> full) {
  Inversion out;
  out.values.resize(full.size());
  double re_max = 0.0;
  double im_max = 0.0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    out.values[i] = full[i].real();
    re_max = std::max(re_max, std::abs(full[i].real()));
    im_max = std::max(im_max, std::abs(full[i].imag()));
  }
  out.imag_residue = re_max > 0.0 ? im_max / re_max : im_max;
  return out;
}

}  // namespace

Inversion invert_rho(const PsiFn1& Psi_hat, double L_hat, double U, const std::vector<double>& x_grid,
                     double u_grid_step) {
  check_nyquist(u_grid_step, x_grid);
  const auto n = static_cast<long>(steps_for(U, u_grid_step));
  std::vector<cplx> vals(static_cast<std::size_t>(2 * n + 1));
  for (long k = -n; k <= n; ++k) vals[static_cast<std::size_t>(k + n)] = Psi_hat(u_grid_step * k) - L_hat;
  std::vector<cplx> full(x_grid.size());
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    cplx sum{0.0, 0.0};
    for (long k = -n; k <= n; ++k) {
      const double w = (k == -n || k == n) ? 0.5 : 1.0;
      sum += w * std::exp(cplx{0.0, -u_grid_step * k * x_grid[i]}) * vals[static_cast<std::size_t>(k + n)];
    }
    full[i] = sum * u_grid_step / (2.0 * kPi);
  }
  return finish(std::move(full));
}

Inversion invert_rho_2d(const PsiFn& Psi_hat, double L_hat, double U, const std::vector<double>& x_grid,
                        double u_grid_step) {
  check_nyquist(u_grid_step, x_grid);
  const auto n = static_cast<long>(steps_for(U, u_grid_step));
  const auto m = static_cast<std::size_t>(2 * n + 1);
  std::vector<cplx> vals(m * m);
  Vec u(2);
  for (long a = -n; a <= n; ++a) {
    for (long b = -n; b <= n; ++b) {
      u << u_grid_step * a, u_grid_step * b;
      vals[static_cast<std::size_t>(a + n) * m + static_cast<std::size_t>(b + n)] = Psi_hat(u) - L_hat;
    }
  }
  const std::size_t nx = x_grid.size();
  std::vector<cplx> full(nx * nx);
  const double scale = u_grid_step * u_grid_step / (4.0 * kPi * kPi);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < nx; ++j) {
      cplx sum{0.0, 0.0};
      for (long a = -n; a <= n; ++a) {
        const double wa = (a == -n || a == n) ? 0.5 : 1.0;
        for (long b = -n; b <= n; ++b) {
          const double wb = (b == -n || b == n) ? 0.5 : 1.0;
          const double phase = -u_grid_step * (a * x_grid[i] + b * x_grid[j]);
          sum += wa * wb * std::exp(cplx{0.0, phase}) *
                 vals[static_cast<std::size_t>(a + n) * m + static_cast<std::size_t>(b + n)];
        }
      }
      full[i * nx + j] = sum * scale;
    }
  }
  return finish(std::move(full));
}

PsiGrid::PsiGrid(double du, std::vector<cplx> values) : du_(du), values_(std::move(values)) {
  if (!(du_ > 0.0)) throw ValidationError("grid step must be > 0");
  if (values_.size() < 2) throw ValidationError("Psi grid needs at least two points");
}

std::size_t PsiGrid::index_of(double U) const {
  const std::size_t n = steps_for(U, du_);
  if (n >= values_.size()) throw ValidationError("U lies beyond the tabulated Psi grid");
  return n;
}

double PsiGrid::kernel_limit(double U) const {
  const std::size_t n = index_of(U);
  const double Ue = u(n);
  const quad::Rule& gl = quad::gauss_legendre(4);
  // Hat-function weights: the kernel (degree 4 per side) times a linear hat is
  // integrated exactly by 4-point Gauss–Legendre.
  std::vector<double> w(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double t = 0.5 * (gl.nodes[q] + 1.0);
      const double kv = limit_kernel((u(k) + t * du_) / Ue) / Ue * 0.5 * du_ * gl.weights[q];
      w[k] += (1.0 - t) * kv;
      w[k + 1] += t * kv;
    }
  }
  double sum = 0.0;
  for (std::size_t k = 0; k <= n; ++k) sum += w[k] * values_[k].real();
  // Hermitian extension to [-U, 0].
  return 2.0 * sum;
}

double PsiGrid::boundary_limit(double U) const { return values_[index_of(U)].real(); }

double PsiGrid::limit(double U, LimitMode mode) const {
  return mode == LimitMode::kernel ? kernel_limit(U) : boundary_limit(U);
}

namespace {

// ρ̃ for several cutoffs at once: running sums over k, read off at each n.
std::vector<std::vector<double>> invert_many(const PsiGrid& grid, const std::vector<std::size_t>& ns,
                                             const std::vector<double>& Ls, const std::vector<double>& x_grid,
                                             int threads) {
  const std::size_t n_max = *std::max_element(ns.begin(), ns.end());
  const auto& vals = grid.values();
  const double du = grid.du();
  std::vector<std::vector<double>> out(ns.size(), std::vector<double>(x_grid.size(), 0.0));
  parallel_for(x_grid.size(), threads, [&](std::size_t i) {
    const double x = x_grid[i];
    cplx P{0.0, 0.0};
    cplx Q{0.0, 0.0};
    std::vector<cplx> P_at(n_max + 1), Q_at(n_max + 1), e_at(n_max + 1);
    for (std::size_t k = 0; k <= n_max; ++k) {
      const cplx e = std::exp(cplx{0.0, -grid.u(k) * x});
      P += e * vals[k];
      Q += e;
      P_at[k] = P;
      Q_at[k] = Q;
      e_at[k] = e;
    }
    for (std::size_t c = 0; c < ns.size(); ++c) {
      const std::size_t n = ns[c];
      const cplx Pw = P_at[n] - 0.5 * (e_at[0] * vals[0] + e_at[n] * vals[n]);
      const cplx Qw = Q_at[n] - 0.5 * (e_at[0] + e_at[n]);
      // (2π)⁻¹ ∫_{-U}^{U} = π⁻¹ Re ∫_0^U for Hermitian Ψ̂ and real 𝓛.
      out[c][i] = (Pw - Ls[c] * Qw).real() * du / kPi;
    }
  });
  return out;
}

}  // namespace

Inversion PsiGrid::invert(double U, double L_hat, const std::vector<double>& x_grid) const {
  check_nyquist(du_, x_grid);
  const std::size_t n = index_of(U);
  std::vector<cplx> full(x_grid.size());
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    cplx pos{0.0, 0.0};
    cplx neg{0.0, 0.0};
    for (std::size_t k = 0; k <= n; ++k) {
      const double w = (k == 0 || k == n) ? 0.5 : 1.0;
      const cplx e = std::exp(cplx{0.0, -u(k) * x_grid[i]});
      pos += w * e * (values_[k] - L_hat);
      neg += w * std::conj(e) * (std::conj(values_[k]) - L_hat);
    }
    full[i] = (pos + neg) * du_ / (2.0 * kPi);
  }
  return finish(std::move(full));
}

PsiGrid tabulate_Psi(const PsiSource& source, const EstimatorConfig& config, int threads,
                     std::vector<cplx>* psi_s_out) {
  if (!source.psi_s) throw ValidationError("psi source has no psi_s function");
  const PsiFn1& psi_s = source.psi_s;
  const bool closed_form = config.exact_transform && static_cast<bool>(source.Psi);
  config.validate();
  const std::size_t n = steps_for(config.U_max, config.u_grid_step);
  std::vector<cplx> values(n + 1);
  std::vector<cplx> direct(n + 1);
  const quad::Rule rule = composite_rule(config.transform_nodes, config.transform_panels, -1.0, 1.0);
  parallel_for(n + 1, threads, [&](std::size_t k) {
    const double u = config.u_grid_step * static_cast<double>(k);
    direct[k] = psi_s(u);
    if (closed_form) {
      values[k] = source.Psi(u);
      return;
    }
    cplx avg{0.0, 0.0};
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) avg += rule.weights[i] * psi_s(u + rule.nodes[i]);
    values[k] = 2.0 * direct[k] - avg;
  });
  if (psi_s_out) *psi_s_out = std::move(direct);
  return PsiGrid(config.u_grid_step, std::move(values));
}

double second_derivative_variation(const std::vector<double>& f, double dx) {
  if (f.size() < 3) return 0.0;
  std::vector<double> d2(f.size() - 2);
  for (std::size_t i = 1; i + 1 < f.size(); ++i) d2[i - 1] = std::abs(f[i + 1] - 2.0 * f[i] + f[i - 1]) / (dx * dx);
  double sum = 0.0;
  for (double v : d2) sum += v;
  sum -= 0.5 * (d2.front() + d2.back());
  return sum * dx;
}

namespace {

double misfit_term(const PsiGrid& grid, std::size_t n) {
  const auto& v = grid.values();
  const std::size_t last = v.size() - 1;
  if (n >= last) return 0.0;
  double sum = 0.0;
  for (std::size_t k = n; k <= last; ++k) {
    const double w = (k == n || k == last) ? 0.5 : 1.0;
    sum += w * std::norm(v[k] - v[n]);
  }
  // Both half-lines contribute equally for Hermitian Ψ̂.
  return 2.0 * sum * grid.du();
}

}  // namespace

double select_U_objective(const PsiGrid& grid, double U, const EstimatorConfig& config, double* misfit) {
  const std::size_t n = grid.index_of(U);
  const double m = misfit_term(grid, n);
  const auto x = config.x_grid();
  const Inversion inv = grid.invert(U, grid.limit(U, config.limit_mode), x);
  if (misfit) *misfit = m;
  return m + config.pi_reg * second_derivative_variation(inv.values, config.x_step);
}

USelection select_U(const PsiGrid& grid, const EstimatorConfig& config, int threads) {
  config.validate();
  USelection sel;
  sel.U_grid = config.U_search_grid();
  std::vector<std::size_t> ns;
  std::vector<double> Ls;
  for (double U : sel.U_grid) {
    ns.push_back(grid.index_of(U));
    Ls.push_back(grid.limit(U, config.limit_mode));
  }
  const auto x = config.x_grid();
  const auto curves = invert_many(grid, ns, Ls, x, threads);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < ns.size(); ++c) {
    const double m = misfit_term(grid, ns[c]);
    const double obj = m + config.pi_reg * second_derivative_variation(curves[c], config.x_step);
    sel.misfit.push_back(m);
    sel.objective.push_back(obj);
    best = std::min(best, obj);
  }
  // Ties (up to rounding) go to the smaller cutoff.
  const double tol = 1e-9 * (1.0 + std::abs(best));
  for (std::size_t c = 0; c < ns.size(); ++c) {
    if (sel.objective[c] <= best + tol) {
      sel.U_hat = sel.U_grid[c];
      break;
    }
  }
  return sel;
}

std::optional<double> theoretical_U(std::size_t N, double Lambda, double kappa, double r, double q, int d) {
  if (N < 3) throw ValidationError("theoretical_U needs N >= 3");
  if (!(Lambda > 0.0)) throw ValidationError("Lambda must be > 0");
  const double logN = std::log(static_cast<double>(N));
  const double radicand = r * logN - ((kappa - 1.0) / 2.0 + 3.0 + d / 2.0 + q) * std::log(logN);
  if (!(radicand > 0.0)) return std::nullopt;
  return std::sqrt(radicand / Lambda);
}

double index_objective(const std::vector<double>& u, const std::vector<cplx>& psi_s, double a, double* l0,
                       double* l1, double* l2, double* l3) {
  const auto n = static_cast<Eigen::Index>(u.size());
  Eigen::MatrixXd A(n, 3);
  Eigen::VectorXd y(n);
  double suu = 0.0;
  double suy = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ui = u[static_cast<std::size_t>(i)];
    A(i, 0) = 1.0;
    A(i, 1) = ui * ui;
    A(i, 2) = std::pow(ui, a);
    y(i) = psi_s[static_cast<std::size_t>(i)].real();
    suu += ui * ui;
    suy += ui * psi_s[static_cast<std::size_t>(i)].imag();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) return std::numeric_limits<double>::quiet_NaN();
  const Eigen::VectorXd coef = qr.solve(y);
  const double slope = suy / suu;
  double sum = 0.0;
  double prev = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ui = u[static_cast<std::size_t>(i)];
    const double re = y(i) - A.row(i).dot(coef);
    const double im = psi_s[static_cast<std::size_t>(i)].imag() - slope * ui;
    sum += (re * re + im * im) * (ui - prev);
    prev = ui;
  }
  if (l0) *l0 = coef(0);
  if (l1) *l1 = slope;
  if (l2) *l2 = coef(1);
  if (l3) *l3 = coef(2);
  return sum;
}

IndexFit estimate_index(const std::vector<double>& u, const std::vector<cplx>& psi_s) {
  if (u.size() != psi_s.size()) throw ValidationError("estimate_index: size mismatch");
  if (u.size() < kIndexMinPoints) throw ValidationError("estimate_index needs at least 50 frequencies");
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0) || (i > 0 && !(u[i] > u[i - 1])))
      throw ValidationError("estimate_index needs positive increasing frequencies");
  }
  IndexFit fit;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 99; ++k) {
    const double a = k / 100.0;
    double l0, l1, l2, l3;
    const double obj = index_objective(u, psi_s, a, &l0, &l1, &l2, &l3);
    if (std::isnan(obj)) continue;
    fit.a_grid.push_back(a);
    fit.objective.push_back(obj);
    if (obj < best) {
      best = obj;
      fit.alpha_tilde = a;
      fit.l0 = l0;
      fit.l1 = l1;
      fit.l2 = l2;
      fit.l3 = l3;
    }
  }
  return fit;
}

namespace {

double interpolate(const std::vector<double>& x, const std::vector<double>& f, double at) {
  if (at <= x.front()) return f.front();
  if (at >= x.back()) return f.back();
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  const auto i = static_cast<std::size_t>(it - x.begin());
  const double t = (at - x[i - 1]) / (x[i] - x[i - 1]);
  return (1.0 - t) * f[i - 1] + t * f[i];
}

}  // namespace

Correction correct_rho(const std::vector<double>& rho_tilde, double alpha_tilde, const std::vector<double>& x_grid,
                       const EstimatorConfig& config) {
  if (!(alpha_tilde > 0.0 && alpha_tilde < 1.0)) throw ValidationError("alpha_tilde must lie in (0, 1)");
  if (rho_tilde.size() != x_grid.size() || x_grid.size() < 3) throw ValidationError("correct_rho: grid mismatch");
  const double dx = x_grid[1] - x_grid[0];
  for (std::size_t i = 1; i < x_grid.size(); ++i) {
    if (std::abs(x_grid[i] - x_grid[i - 1] - dx) > 1e-9 * std::max(1.0, std::abs(dx)))
      throw ValidationError("correct_rho needs a uniform x grid");
  }
  const double lo = 2.0 * dx;
  if (!(lo < 1.0)) throw ValidationError("x grid too coarse for the correction");
  Correction best;
  best.values = rho_tilde;
  double best_tv = std::numeric_limits<double>::infinity();
  struct Candidate {
    double eps, c, tv;
    std::vector<double> values;
  };
  std::vector<Candidate> candidates;
  const int m = config.epsilon_candidates;
  for (int j = 0; j < m; ++j) {
    const double t = m == 1 ? 0.0 : static_cast<double>(j) / (m - 1);
    const double eps = lo * std::pow(1.0 / lo, t);
    const double at = 0.5 * (interpolate(x_grid, rho_tilde, eps) + interpolate(x_grid, rho_tilde, -eps));
    if (!(at > 0.0)) continue;
    const double c = at * std::pow(eps, 1.0 + alpha_tilde) / one_minus_sinc(eps);
    std::vector<double> r = rho_tilde;
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
      const double x = std::abs(x_grid[i]);
      if (x > eps) continue;
      r[i] = x == 0.0 ? 0.0 : c * one_minus_sinc(x) * std::pow(x, -1.0 - alpha_tilde);
    }
    const double tv = second_derivative_variation(r, dx);
    best_tv = std::min(best_tv, tv);
    candidates.push_back({eps, c, tv, std::move(r)});
  }
  if (candidates.empty()) return best;
  // Smallest ε whose roughness is within tolerance of the minimum.
  for (auto& cand : candidates) {
    if (cand.tv <= (1.0 + config.epsilon_tolerance) * best_tv) {
      best.applied = true;
      best.epsilon = cand.eps;
      best.c_eps = cand.c;
      best.values = std::move(cand.values);
      break;
    }
  }
  return best;
}

PsiSource psi_source_exact(const AffineCharacteristics& chars, const Vec& x, int component, double s) {
  chars.validate();
  check_state(x, chars);
  if (component < 0 || component >= chars.d) throw ValidationError("component out of range");
  PsiSource out;
  out.kind = "exact";
  out.psi_s = [chars, x, component, s](double u) {
    Vec uu = Vec::Zero(chars.d);
    uu(component) = u;
    return log_cf_time_derivative(uu, s, x, chars);
  };
  return out;
}

PsiSource psi_source_fd(const ObservationSet& obs) {
  if (obs.dim() != 1) throw ValidationError("psi_source_fd needs a one-dimensional observation set");
  const auto* pairs = std::get_if<IidPairs>(&obs.design);
  if (!pairs) throw ValidationError("finite-difference route needs an iid-pairs design");
  if (obs.size() == 0) throw ValidationError("empty observation set");
  const double base = obs.base_state(0);
  // Offsets from the base state absorb the e^{-iu·x} factor.
  auto ends = std::make_shared<std::vector<double>>();
  auto starts = std::make_shared<std::vector<double>>();
  bool common_start = true;
  for (const auto& r : obs.records) {
    ends->push_back(r.x_end(0) - base);
    starts->push_back(r.x_start(0) - base);
    common_start = common_start && r.x_start(0) == base;
  }
  if (common_start) starts->clear();
  const double scale = 1.0 / (static_cast<double>(obs.size()) * pairs->Delta);
  const double n = static_cast<double>(obs.size());
  PsiSource out;
  out.kind = "finite-difference";
  out.psi_s = [starts, ends, scale, n](double u) {
    double re = 0.0;
    double im = 0.0;
    for (double y : *ends) {
      re += std::cos(u * y);
      im += std::sin(u * y);
    }
    if (starts->empty()) {
      re -= n;
    } else {
      for (double y : *starts) {
        re -= std::cos(u * y);
        im -= std::sin(u * y);
      }
    }
    return cplx{re, im} * scale;
  };
  // ∫_{-1}^{1} e^{i(u+w)y} dw = 2e^{iuy} sin(y)/y; the constant part cancels.
  out.Psi = [starts, ends, scale](double u) {
    double re = 0.0;
    double im = 0.0;
    for (double y : *ends) {
      const double w = 2.0 * one_minus_sinc(y);
      re += w * std::cos(u * y);
      im += w * std::sin(u * y);
    }
    for (double y : *starts) {
      const double w = 2.0 * one_minus_sinc(y);
      re -= w * std::cos(u * y);
      im -= w * std::sin(u * y);
    }
    return cplx{re, im} * scale;
  };
  return out;
}

PsiSource psi_source_smoother(const ObservationSet& obs, const SmootherConfig& smoother,
                           const WeightProfiles& profiles, T0Mode mode) {
  if (obs.dim() != 1) throw ValidationError("psi_source_smoother needs a one-dimensional observation set");
  auto eval = std::make_shared<SmoothedCFEvaluator>(obs, smoother);
  if (eval->state().truncated)
    throw EstimatorUnavailable("design matrix is Gamma-truncated; the spectral estimator is unavailable");
  PsiSource out;
  out.kind = "smoother";
  out.psi_s = [eval, profiles, mode](double u) {
    Vec uu(1);
    uu(0) = u;
    const auto [phi, phi_s] = (*eval)(uu);
    const double v = std::abs(u);
    const cplx t0 = truncate_T0(phi, profiles.rho0(v), mode);
    return truncate_T1(phi_s, t0, profiles.rho1(v));
  };
  return out;
}

SpectralEstimate run_spectral_pipeline(const PsiSource& source, const EstimatorConfig& config, int threads) {
  config.validate();
  SpectralEstimate est;
  est.source = source.kind;
  const PsiFn1& psi_s = source.psi_s;
  est.limit_mode = config.limit_mode;
  est.x_grid = config.x_grid();
  const PsiGrid grid = tabulate_Psi(source, config, threads, &est.psi_s_hat);
  est.Psi_hat = grid.values();
  for (std::size_t k = 0; k < grid.size(); ++k) est.u_grid.push_back(grid.u(k));

  if (config.U) {
    est.U_used = config.snap(*config.U);
  } else {
    est.selection = select_U(grid, config, threads);
    est.U_used = est.selection.U_hat;
  }
  est.L_hat = grid.limit(est.U_used, config.limit_mode);
  const Inversion inv = grid.invert(est.U_used, est.L_hat, est.x_grid);
  est.rho_tilde = inv.values;
  est.imag_residue = inv.imag_residue;

  if (config.fit_index) {
    const std::size_t n = grid.index_of(est.U_used);
    std::vector<double> u;
    std::vector<cplx> y;
    if (n >= kIndexMinPoints) {
      for (std::size_t k = 1; k <= n; ++k) {
        u.push_back(grid.u(k));
        y.push_back(est.psi_s_hat[k]);
      }
    } else {
      // Too few grid points below Û: refine the fit grid on (0, Û].
      u.resize(kIndexMinPoints);
      y.resize(kIndexMinPoints);
      const double step = est.U_used / static_cast<double>(kIndexMinPoints);
      for (std::size_t k = 0; k < kIndexMinPoints; ++k) u[k] = step * static_cast<double>(k + 1);
      parallel_for(kIndexMinPoints, threads, [&](std::size_t k) { y[k] = psi_s(u[k]); });
    }
    est.index = estimate_index(u, y);
    if (est.index.alpha_tilde) est.correction = correct_rho(est.rho_tilde, *est.index.alpha_tilde, est.x_grid, config);
  }
  if (!est.correction.applied) est.correction.values = est.rho_tilde;
  return est;
}

void write_spectral_csvs(const SpectralEstimate& est, const std::filesystem::path& dir) {
  write_csv(dir / "rho.csv", {"x", "rho_tilde", "rho_corrected"},
            {est.x_grid, est.rho_tilde, est.correction.values});
  std::vector<double> re_P, im_P, re_p, im_p;
  for (std::size_t k = 0; k < est.u_grid.size(); ++k) {
    re_P.push_back(est.Psi_hat[k].real());
    im_P.push_back(est.Psi_hat[k].imag());
    re_p.push_back(est.psi_s_hat[k].real());
    im_p.push_back(est.psi_s_hat[k].imag());
  }
  write_csv(dir / "psi.csv", {"u", "re_Psi", "im_Psi", "re_psi_s", "im_psi_s"}, {est.u_grid, re_P, im_P, re_p, im_p});
  write_csv(dir / "index.csv", {"a", "objective"}, {est.index.a_grid, est.index.objective});
  if (!est.selection.U_grid.empty())
    write_csv(dir / "u_select.csv", {"U", "objective", "misfit"},
              {est.selection.U_grid, est.selection.objective, est.selection.misfit});
}

}  // namespace ajl
