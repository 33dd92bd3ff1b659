#include "ajl/affine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "ajl/error.hpp"

namespace ajl {

namespace {

bool near_zero(double v) { return std::abs(v) <= 1e-14; }

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

/// zᵀ A z without conjugation.
cplx quadratic_form(const Mat& a, const CVec& z) { return z.transpose() * (a.cast<cplx>() * z); }

double max_abs(const CVec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

AffineCharacteristics AffineCharacteristics::zero(int d, int m) {
  AffineCharacteristics c;
  c.d = d;
  c.m = m;
  c.alpha0 = Mat::Zero(d, d);
  c.alpha1.assign(static_cast<std::size_t>(d), Mat::Zero(d, d));
  c.beta0 = Vec::Zero(d);
  c.beta1 = Mat::Zero(d, d);
  c.gamma1 = Vec::Zero(d);
  c.jump_axis = d - 1;
  return c;
}

void AffineCharacteristics::validate() const {
  require(d >= 1 && d <= kMaxDimension, "dimension d must be 1 or 2");
  require(m >= 0 && m <= d, "m must satisfy 0 <= m <= d");
  require(alpha0.rows() == d && alpha0.cols() == d, "alpha0 must be d x d");
  require(static_cast<int>(alpha1.size()) == d, "alpha1 must hold d matrices");
  require(beta0.size() == d, "beta0 must have length d");
  require(beta1.rows() == d && beta1.cols() == d, "beta1 must be d x d");
  require(gamma1.size() == d, "gamma1 must have length d");
  require(gamma0 >= 0.0, "gamma0 must be >= 0");

  require((alpha0 - alpha0.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "alpha0 must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eig(alpha0);
  require(eig.eigenvalues().minCoeff() >= -1e-12, "alpha0 must be positive semidefinite");
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i < m || j < m) require(near_zero(alpha0(i, j)), "alpha0 must vanish outside the real-valued block");

  for (int j = 0; j < d; ++j) {
    const Mat& a = alpha1[static_cast<std::size_t>(j)];
    require(a.rows() == d && a.cols() == d, "alpha1[j] must be d x d");
    require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12, "alpha1[j] must be symmetric");
    if (j >= m) require(a.cwiseAbs().maxCoeff() <= 1e-14, "alpha1[j] must vanish for real-valued j");
    require(gamma1(j) >= 0.0, "gamma1 must be >= 0");
    if (j >= m) require(near_zero(gamma1(j)), "gamma1 must vanish for real-valued components");
  }
  for (int k = 0; k < m; ++k) {
    require(beta0(k) >= 0.0, "beta0 must be >= 0 on nonnegative components");
    for (int j = m; j < d; ++j)
      require(near_zero(beta1(k, j)), "nonnegative components cannot drift on real-valued ones");
  }
  require(jump_axis >= 0 && jump_axis < d, "jump_axis out of range");
  if (!nu0.is_none())
    require(jump_axis >= m, "two-sided jumps must act on a real-valued component");
}

bool AffineCharacteristics::is_levy() const {
  if (beta1.cwiseAbs().maxCoeff() > 0.0 || gamma1.cwiseAbs().maxCoeff() > 0.0) return false;
  return std::all_of(alpha1.begin(), alpha1.end(), [](const Mat& a) { return a.cwiseAbs().maxCoeff() == 0.0; });
}

Vec chi_truncation(const Vec& u) {
  Vec out(u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k) out(k) = chi_scalar(u(k));
  return out;
}

cplx eval_F0(const CVec& z, const AffineCharacteristics& chars) {
  cplx value = quadratic_form(chars.alpha0, z) + (z.transpose() * chars.beta0.cast<cplx>())(0) - chars.gamma0;
  if (!chars.nu0.is_none()) value += levy_exponent(chars.nu0, z(chars.jump_axis));
  return value;
}

cplx eval_F1(const CVec& z, int j, const AffineCharacteristics& chars) {
  if (j < 0 || j >= chars.d) throw ValidationError("F1 component index " + std::to_string(j) + " out of range");
  const cplx drift = (z.transpose() * chars.beta1.col(j).cast<cplx>())(0);
  return quadratic_form(chars.alpha1[static_cast<std::size_t>(j)], z) + drift - chars.gamma1(j);
}

CVec eval_F1(const CVec& z, const AffineCharacteristics& chars) {
  CVec out(chars.d);
  for (int j = 0; j < chars.d; ++j) out(j) = eval_F1(z, j, chars);
  return out;
}

namespace {

/// y = (ψ₀, ψ₁).
CVec riccati_rhs(const CVec& y, const AffineCharacteristics& chars) {
  const CVec psi1 = y.tail(chars.d);
  CVec dy(chars.d + 1);
  dy(0) = eval_F0(psi1, chars);
  dy.tail(chars.d) = eval_F1(psi1, chars);
  return dy;
}

CVec rk4(const CVec& y0, double s, int steps, const AffineCharacteristics& chars) {
  const double h = s / steps;
  CVec y = y0;
  for (int n = 0; n < steps; ++n) {
    const CVec k1 = riccati_rhs(y, chars);
    const CVec k2 = riccati_rhs(y + 0.5 * h * k1, chars);
    const CVec k3 = riccati_rhs(y + 0.5 * h * k2, chars);
    const CVec k4 = riccati_rhs(y + h * k3, chars);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!y.allFinite())
      throw NumericalError("Riccati solution blew up; last finite time " + std::to_string(n * h));
  }
  return y;
}

}  // namespace

RiccatiSolution riccati_solve(const Vec& u, double s, const AffineCharacteristics& chars,
                              const RiccatiOptions& options) {
  if (u.size() != chars.d) throw ValidationError("frequency vector has wrong dimension");
  if (!(s >= 0.0) || !std::isfinite(s)) throw ValidationError("time s must be finite and >= 0");
  CVec y0 = CVec::Zero(chars.d + 1);
  y0.tail(chars.d) = kI * u.cast<cplx>();
  if (s == 0.0) return {cplx{0.0, 0.0}, y0.tail(chars.d), 0};

  int steps = std::max(1, options.initial_steps);
  CVec coarse = rk4(y0, s, steps, chars);
  while (true) {
    if (2 * steps > options.max_steps)
      throw NumericalError("Riccati step halving did not converge by s = " + std::to_string(s));
    const CVec fine = rk4(y0, s, 2 * steps, chars);
    steps *= 2;
    const double diff = max_abs(fine - coarse);
    if (diff <= options.rel_tol * std::max(1.0, max_abs(fine))) {
      const CVec extrapolated = fine + (fine - coarse) / 15.0;
      return {extrapolated(0), extrapolated.tail(chars.d), steps};
    }
    coarse = fine;
  }
}

CVec linear_block_closed_form(const Vec& u, double s, const AffineCharacteristics& chars) {
  const int k = chars.d - chars.m;
  if (k == 0) return CVec{};
  const Mat block = chars.beta1.bottomRightCorner(k, k);
  const Mat propagator = (s * block.transpose()).exp();
  return propagator.cast<cplx>() * (kI * u.tail(k).cast<cplx>());
}

void check_state(const Vec& x, const AffineCharacteristics& chars) {
  if (x.size() != chars.d) throw ValidationError("state vector has wrong dimension");
  for (int k = 0; k < chars.m; ++k)
    if (x(k) < 0.0) throw ValidationError("state component " + std::to_string(k) + " must be >= 0");
}

CFEvaluation cf_evaluate(const Vec& u, double s, const Vec& x, const AffineCharacteristics& chars) {
  check_state(x, chars);
  const RiccatiSolution sol = riccati_solve(u, s, chars);
  CFEvaluation out;
  out.u = u;
  out.s = s;
  out.x = x;
  out.psi0 = sol.psi0;
  out.psi1 = sol.psi1;
  out.phi = std::exp(sol.psi0 + (x.cast<cplx>().transpose() * sol.psi1)(0));
  return out;
}

cplx cond_cf(const Vec& u, double s, const Vec& x, const AffineCharacteristics& chars) {
  return cf_evaluate(u, s, x, chars).phi;
}

cplx log_cf_time_derivative(const Vec& u, double s, const Vec& x, const AffineCharacteristics& chars) {
  check_state(x, chars);
  const RiccatiSolution sol = riccati_solve(u, s, chars);
  return eval_F0(sol.psi1, chars) + (x.cast<cplx>().transpose() * eval_F1(sol.psi1, chars))(0);
}

cplx cf_time_derivative(const Vec& u, double s, const Vec& x, const AffineCharacteristics& chars, int order) {
  if (order != 1 && order != 2) throw ValidationError("only time derivatives of order 1 and 2 are supported");
  if (!chars.nu0.has_finite_moment(order - 1))
    throw ValidationError("jump measure lacks the moment needed for derivative order " + std::to_string(order));
  const CFEvaluation ev = cf_evaluate(u, s, x, chars);
  const CVec& z = ev.psi1;
  const CVec f1 = eval_F1(z, chars);
  const CVec xc = x.cast<cplx>();
  const cplx dpsi = eval_F0(z, chars) + (xc.transpose() * f1)(0);
  if (order == 1) return dpsi * ev.phi;

  // ∂²ψ = ∇F₀(ψ₁)·F₁(ψ₁) + Σⱼ xⱼ ∇F₁ⱼ(ψ₁)·F₁(ψ₁)
  CVec grad0 = 2.0 * (chars.alpha0.cast<cplx>() * z) + chars.beta0.cast<cplx>();
  if (!chars.nu0.is_none()) grad0(chars.jump_axis) += levy_exponent_derivative(chars.nu0, z(chars.jump_axis));
  cplx d2psi = (grad0.transpose() * f1)(0);
  for (int j = 0; j < chars.d; ++j) {
    if (xc(j) == 0.0) continue;
    const CVec grad1 = 2.0 * (chars.alpha1[static_cast<std::size_t>(j)].cast<cplx>() * z) +
                       chars.beta1.col(j).cast<cplx>();
    d2psi += xc(j) * (grad1.transpose() * f1)(0);
  }
  return (dpsi * dpsi + d2psi) * ev.phi;
}

SubmatrixBounds submatrix_bounds(const AffineCharacteristics& chars, double horizon, double kappa, double R) {
  if (!(horizon > 0.0)) throw ValidationError("horizon must be > 0");
  if (!(kappa >= 1.0 && kappa < 2.0)) throw ValidationError("kappa must lie in [1, 2)");
  const int k = chars.d - chars.m;
  SubmatrixBounds b;
  b.kappa = kappa;
  b.R = R;
  b.A_block = chars.alpha0.bottomRightCorner(k, k);
  b.B_block = chars.beta1.bottomRightCorner(k, k);
  if (k == 0) return b;
  const double lambda_a = Eigen::SelfAdjointEigenSolver<Mat>(b.A_block).eigenvalues().maxCoeff();
  auto lambda_exp = [&](double t) {
    return Eigen::EigenSolver<Mat>((t * b.B_block).exp()).eigenvalues().cwiseAbs().maxCoeff();
  };
  constexpr int kSteps = 400;
  const double dt = horizon / kSteps;
  double integral = 0.0;
  double prev = lambda_exp(0.0);
  double worst = lambda_a * prev * prev;
  for (int i = 1; i <= kSteps; ++i) {
    const double cur = lambda_exp(i * dt);
    integral += 0.5 * dt * (prev * prev + cur * cur);
    worst = std::max({worst, lambda_a * integral, lambda_a * cur * cur});
    prev = cur;
  }
  b.Lambda = worst;
  return b;
}

WeightProfiles::WeightProfiles(double Lambda, int d, double safety) : lambda_(Lambda * safety), d_(d) {
  if (!(Lambda > 0.0)) throw ValidationError("weight profiles need Lambda > 0");
  if (!(safety > 0.0)) throw ValidationError("safety factor must be > 0");
  if (d < 1 || d > kMaxDimension) throw ValidationError("dimension d must be 1 or 2");
}

double WeightProfiles::rho0(double v) const { return std::exp(-lambda_ * d_ * v * v); }

double WeightProfiles::rho1(double v) const { return lambda_ * d_ * (1.0 + v * v); }

WeightProfiles weight_profiles(const SubmatrixBounds& bounds, int d, double safety) {
  return WeightProfiles(bounds.Lambda, d, safety);
}

DominanceReport check_weight_dominance(const WeightProfiles& profiles, const AffineCharacteristics& chars,
                                       const Vec& x, const Vec& direction, const std::vector<double>& radii,
                                       const std::vector<double>& times) {
  DominanceReport report;
  report.rho0_margin = std::numeric_limits<double>::infinity();
  report.rho1_margin = std::numeric_limits<double>::infinity();
  const double norm = direction.cwiseAbs().maxCoeff();
  if (!(norm > 0.0)) throw ValidationError("direction must be nonzero");
  for (double v : radii) {
    const Vec u = direction * (v / norm);
    for (double s : times) {
      const double modulus = std::abs(cond_cf(u, s, x, chars));
      const double slope = std::abs(log_cf_time_derivative(u, s, x, chars));
      report.rho0_margin = std::min(report.rho0_margin, modulus / profiles.rho0(v));
      if (slope > 0.0) report.rho1_margin = std::min(report.rho1_margin, profiles.rho1(v) / slope);
    }
  }
  report.holds = report.rho0_margin >= 1.0 && report.rho1_margin >= 1.0;
  return report;
}

}  // namespace ajl
