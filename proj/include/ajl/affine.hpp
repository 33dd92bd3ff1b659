#pragma once

#include <vector>

#include "ajl/levy.hpp"
#include "ajl/types.hpp"

namespace ajl {

/// Largest state dimension supported by the solvers and grids.
inline constexpr int kMaxDimension = 2;

/// Admissible characteristics (α, β, γ, ν) of a regular affine process on
/// ℝ₊^m × ℝ^{d-m}, restricted to state-independent jumps.
///
/// Conventions (0-based component indices):
///  - F₀(z) = zᵀα⁰z + β⁰·z - γ⁰ + κ(z_a), where κ is the Lévy exponent of
///    ν⁽⁰⁾ and a = jump_axis.
///  - beta1(k, j) is the coefficient of x_j in the drift of component k, so
///    F₁,ⱼ(z) = zᵀα¹ⱼz + Σ_k z_k·beta1(k, j) - γ¹ⱼ.
///  - α⁰ and α¹ⱼ are half the instantaneous covariance.
struct AffineCharacteristics {
  int d = 1;
  int m = 0;
  Mat alpha0;
  std::vector<Mat> alpha1;
  Vec beta0;
  Mat beta1;
  double gamma0 = 0.0;
  Vec gamma1;
  LevyMeasureSpec nu0;
  int jump_axis = 0;

  /// All coefficients zero, shapes set for (d, m).
  static AffineCharacteristics zero(int d, int m);

  /// Structural admissibility checks; throws ValidationError.
  void validate() const;

  /// True when α¹, β¹ and γ¹ vanish, i.e. the process is Lévy.
  bool is_levy() const;
};

/// Componentwise truncation χ_k(u) = (1 ∧ |u_k|)·sign(u_k).
Vec chi_truncation(const Vec& u);

cplx eval_F0(const CVec& z, const AffineCharacteristics& chars);
/// F₁,ⱼ for 0-based j; throws ValidationError when j is out of range.
cplx eval_F1(const CVec& z, int j, const AffineCharacteristics& chars);
CVec eval_F1(const CVec& z, const AffineCharacteristics& chars);

struct RiccatiOptions {
  double rel_tol = 1e-10;
  int initial_steps = 16;
  int max_steps = 1 << 20;
};

struct RiccatiSolution {
  cplx psi0;
  CVec psi1;
  int steps = 0;
};

/// Solves ∂ψ₁/∂s = F₁(ψ₁), ψ₁(u,0) = iu and ψ₀(u,s) = ∫₀ˢ F₀(ψ₁(u,t)) dt with
/// RK4 and step halving until successive solutions agree to `rel_tol`.
RiccatiSolution riccati_solve(const Vec& u, double s, const AffineCharacteristics& chars,
                              const RiccatiOptions& options = {});

/// Closed form e^{s𝔅ᵀ}(iu_{m..d-1}) of the linear (real-valued) block of ψ₁.
CVec linear_block_closed_form(const Vec& u, double s, const AffineCharacteristics& chars);

struct CFEvaluation {
  Vec u;
  double s = 0.0;
  Vec x;
  cplx psi0;
  CVec psi1;
  cplx phi;
};

CFEvaluation cf_evaluate(const Vec& u, double s, const Vec& x, const AffineCharacteristics& chars);

/// φ(u|s,x) = exp(ψ₀(u,s) + x·ψ₁(u,s)).
cplx cond_cf(const Vec& u, double s, const Vec& x, const AffineCharacteristics& chars);

/// ∂ψ(u|s,x)/∂s = F₀(ψ₁) + x·F₁(ψ₁).
cplx log_cf_time_derivative(const Vec& u, double s, const Vec& x, const AffineCharacteristics& chars);

/// ∂ˡφ(u|s,x)/∂sˡ for l ∈ {1, 2}. Order 2 requires a finite first moment of
/// ν⁽⁰⁾ beyond the unit ball.
cplx cf_time_derivative(const Vec& u, double s, const Vec& x, const AffineCharacteristics& chars,
                        int order);

void check_state(const Vec& x, const AffineCharacteristics& chars);

struct SubmatrixBounds {
  Mat A_block;
  Mat B_block;
  double Lambda = 0.0;
  double kappa = 1.5;
  double R = 1.0;
};

/// Blocks 𝔄, 𝔅 of the real-valued components and the class bound
/// Λ = max_{s∈[0,T]} max{λ(𝔄)∫₀ˢλ²(e^{t𝔅})dt, λ(𝔄)λ²(e^{s𝔅})}.
SubmatrixBounds submatrix_bounds(const AffineCharacteristics& chars, double horizon, double kappa = 1.5,
                                 double R = 1.0);

/// ϱ₀(v) = exp(-Λ'·d·v²), ϱ₁(v) = Λ'·d·(1 + v²) with Λ' = safety·Λ.
class WeightProfiles {
 public:
  WeightProfiles(double Lambda, int d, double safety = 1.0);

  double rho0(double v) const;
  double rho1(double v) const;
  double Lambda() const { return lambda_; }
  int dimension() const { return d_; }

 private:
  double lambda_;
  int d_;
};

WeightProfiles weight_profiles(const SubmatrixBounds& bounds, int d, double safety = 1.0);

struct DominanceReport {
  bool holds = true;
  /// min over the grid of |φ| / ϱ₀ (≥ 1 when the lower bound holds).
  double rho0_margin = 0.0;
  /// min over the grid of ϱ₁ / |∂ₛψ| (≥ 1 when the upper bound holds).
  double rho1_margin = 0.0;
};

/// Spot-checks ϱ₀(‖u‖) ≤ |φ(u|s,x)| and |∂ₛψ(u|s,x)| ≤ ϱ₁(‖u‖) along the
/// direction `direction` for ‖u‖ in `radii` and s in `times`.
DominanceReport check_weight_dominance(const WeightProfiles& profiles, const AffineCharacteristics& chars,
                                       const Vec& x, const Vec& direction, const std::vector<double>& radii,
                                       const std::vector<double>& times);

}  // namespace ajl
