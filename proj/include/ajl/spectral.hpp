#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ajl/affine.hpp"
#include "ajl/smoother.hpp"
#include "ajl/types.hpp"

namespace ajl {

enum class LimitMode { kernel, boundary };
enum class T0Mode { literal, radial };

LimitMode parse_limit_mode(const std::string& name);
std::string to_string(LimitMode mode);
T0Mode parse_t0_mode(const std::string& name);
std::string to_string(T0Mode mode);

/// 𝒦(u) = 15u²(1 - |u|)² on [-1, 1].
double limit_kernel(double u);

struct EstimatorConfig {
  /// Fixed inversion cutoff; nullopt selects Û from the data.
  std::optional<double> U;
  double U_max = 60.0;
  double kappa = 1.5;
  double pi_reg = 100.0;
  double u_grid_step = 0.05;
  int transform_nodes = 33;
  int transform_panels = 1;
  double x_min = -5.0;
  double x_max = 5.0;
  double x_step = 0.01;
  LimitMode limit_mode = LimitMode::kernel;
  T0Mode t0_mode = T0Mode::literal;
  int U_search_points = 60;
  int epsilon_candidates = 40;
  double epsilon_tolerance = 0.05;
  bool fit_index = true;
  /// Use a source's closed-form transform when it has one.
  bool exact_transform = true;

  void validate() const;
  std::vector<double> x_grid() const;
  /// U snapped to the nearest multiple of u_grid_step (at least one step).
  double snap(double U) const;
  /// 60 log-spaced points in [1, U_max], snapped, duplicates removed.
  std::vector<double> U_search_grid() const;
};

cplx truncate_T0(cplx phi_hat, double rho0, T0Mode mode = T0Mode::literal);
cplx truncate_T1(cplx phi_s_hat, cplx phi_hat, double rho1);

struct PsiEstimates {
  std::vector<cplx> psi_hat;
  std::vector<cplx> psi_s_hat;
};

/// ψ̂ = log T₀[φ̂] unwrapped along the grid, ψ̂ₛ = T₁[φ̂ₛ / T₀[φ̂]]. The grid is
/// walked in the stored order, which should start at u = 0.
PsiEstimates psi_estimates(const SmoothedCF& smoothed, const WeightProfiles& profiles,
                           T0Mode mode = T0Mode::literal);

using PsiFn = std::function<cplx(const Vec&)>;
using PsiFn1 = std::function<cplx(double)>;

/// Ψ̂(u) = ∫_{[-1,1]^d} [ψ̂ₛ(u) - ψ̂ₛ(u + w)] dw, tensor Gauss–Legendre (d ≤ 2).
cplx transform_psi(const PsiFn& psi_s, const Vec& u, int transform_nodes = 33, int panels = 1);
cplx transform_psi(const PsiFn1& psi_s, double u, int transform_nodes = 33, int panels = 1);

/// 𝓛 = ∫ 𝒦^U(u₁)…𝒦^U(u_d) Ψ̂(u) du by Gauss–Legendre over [-U, U]^d.
cplx limit_estimate(const PsiFn& Psi_hat, double U, int d, int nodes_per_unit = 4);

/// ρ̃(x) = (2π)^{-d} ∫_{[-U,U]^d} e^{-iu·x}[Ψ̂(u) - 𝓛] du by trapezoid with
/// step u_grid_step. Returns the real part. Throws on a Nyquist violation.
struct Inversion {
  std::vector<double> values;
  /// max |Im| / max |Re| over the grid.
  double imag_residue = 0.0;
};
Inversion invert_rho(const PsiFn1& Psi_hat, double L_hat, double U, const std::vector<double>& x_grid,
                     double u_grid_step);
/// d = 2 on the tensor grid x_grid × x_grid (row-major, first index slowest).
Inversion invert_rho_2d(const PsiFn& Psi_hat, double L_hat, double U, const std::vector<double>& x_grid,
                        double u_grid_step);

/// Ψ̂ tabulated on u = k·du, k = 0..n, with Ψ̂(-u) = conj Ψ̂(u).
class PsiGrid {
 public:
  PsiGrid(double du, std::vector<cplx> values);

  double du() const { return du_; }
  std::size_t size() const { return values_.size(); }
  double u(std::size_t k) const { return du_ * static_cast<double>(k); }
  const std::vector<cplx>& values() const { return values_; }
  std::size_t index_of(double U) const;

  /// 𝓛 with 𝒦^U integrated exactly against the piecewise-linear interpolant.
  double kernel_limit(double U) const;
  double boundary_limit(double U) const;
  double limit(double U, LimitMode mode) const;

  Inversion invert(double U, double L_hat, const std::vector<double>& x_grid) const;

 private:
  double du_;
  std::vector<cplx> values_;
};

/// ψ̂ₛ together with an optional closed form of its Ψ transform.
struct PsiSource {
  std::string kind = "custom";
  PsiFn1 psi_s;
  PsiFn1 Psi;
};

/// Also stores ψ̂ₛ on the same grid when `psi_s_out` is given.
PsiGrid tabulate_Psi(const PsiSource& source, const EstimatorConfig& config, int threads = 1,
                     std::vector<cplx>* psi_s_out = nullptr);

/// ∫|∂ₓₓ f| dx with central differences and trapezoid weights on a uniform grid.
double second_derivative_variation(const std::vector<double>& f, double dx);

struct USelection {
  double U_hat = 0.0;
  std::vector<double> U_grid;
  std::vector<double> objective;
  std::vector<double> misfit;
};

/// Objective 2∫_U^{U_max}|Ψ̂(u) - Ψ̂(U)|²du + π∫|∂ₓₓρ̃(x; U)|dx.
double select_U_objective(const PsiGrid& grid, double U, const EstimatorConfig& config, double* misfit = nullptr);
USelection select_U(const PsiGrid& grid, const EstimatorConfig& config, int threads = 1);

/// U_N = Λ^{-1/2}√(r log N - ((κ-1)/2 + 3 + d/2 + q) log log N), nullopt when the
/// radicand is not positive.
std::optional<double> theoretical_U(std::size_t N, double Lambda, double kappa, double r, double q, int d);

struct IndexFit {
  std::optional<double> alpha_tilde;
  std::vector<double> a_grid;
  std::vector<double> objective;
  /// l₀, l₁ (imaginary part), l₂, l₃ at α̃.
  double l0 = 0.0, l1 = 0.0, l2 = 0.0, l3 = 0.0;
};

inline constexpr std::size_t kIndexMinPoints = 50;

/// Least-squares fit of ψ̂ₛ(u) by l₀ + l₁u + l₂u² + l₃u^a on the given points
/// (increasing, positive, at least kIndexMinPoints of them).
IndexFit estimate_index(const std::vector<double>& u, const std::vector<cplx>& psi_s);
double index_objective(const std::vector<double>& u, const std::vector<cplx>& psi_s, double a,
                       double* l0 = nullptr, double* l1 = nullptr, double* l2 = nullptr, double* l3 = nullptr);

struct Correction {
  bool applied = false;
  std::vector<double> values;
  double epsilon = 0.0;
  double c_eps = 0.0;
};

Correction correct_rho(const std::vector<double>& rho_tilde, double alpha_tilde, const std::vector<double>& x_grid,
                       const EstimatorConfig& config);

struct SpectralEstimate {
  std::string source;
  std::vector<double> u_grid;
  std::vector<cplx> Psi_hat;
  std::vector<cplx> psi_s_hat;
  double L_hat = 0.0;
  double U_used = 0.0;
  LimitMode limit_mode = LimitMode::kernel;
  std::vector<double> x_grid;
  std::vector<double> rho_tilde;
  double imag_residue = 0.0;
  USelection selection;
  IndexFit index;
  Correction correction;
};

/// ψ̂ₛ(u) = ∂ₛψ(u e_k | s, x) from the Riccati solution.
PsiSource psi_source_exact(const AffineCharacteristics& chars, const Vec& x, int component, double s);
/// (NΔ)⁻¹Σ[e^{iuXⁿ(Δ)} - e^{iuXⁿ(0)}]·e^{-iu·x}; one-dimensional iid-pairs set.
/// Its transform is (NΔ)⁻¹Σ 2e^{iuy}(1 - sin y / y) in the offsets y.
PsiSource psi_source_fd(const ObservationSet& obs);
/// T₁[φ̂ₛ / T₀[φ̂]] from the local-linear smoother; one-dimensional set.
PsiSource psi_source_smoother(const ObservationSet& obs, const SmootherConfig& smoother,
                           const WeightProfiles& profiles, T0Mode mode);

SpectralEstimate run_spectral_pipeline(const PsiSource& source, const EstimatorConfig& config, int threads = 1);

/// rho.csv, psi.csv and index.csv inside `dir`.
void write_spectral_csvs(const SpectralEstimate& est, const std::filesystem::path& dir);

}  // namespace ajl
