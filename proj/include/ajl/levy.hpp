#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ajl/types.hpp"

namespace ajl {

/// Density sampled on a strictly increasing grid; linear interpolation inside,
/// zero outside.
struct TabulatedDensity {
  std::vector<double> x;
  std::vector<double> value;

  void validate() const;
  double operator()(double at) const;
  /// Trapezoid weights matching the grid.
  std::vector<double> trapezoid_weights() const;
};

TabulatedDensity load_tabulated_csv(const std::filesystem::path& path);
void save_tabulated_csv(const TabulatedDensity& table, const std::filesystem::path& path);

struct NoJumps {};

/// ν(x) = scale·|x|^{-1-index}, index ∈ (0, 1).
struct SymmetricStable {
  double scale = 1.0;
  double index = 0.5;
};

struct GaussianJumps {
  double mean = 0.0;
  double variance = 1.0;
};

/// ν = rate · (law of a single jump).
struct CompoundPoisson {
  double rate = 1.0;
  std::variant<GaussianJumps, TabulatedDensity> law;
};

/// One-dimensional Lévy measure ν⁽⁰⁾ with a Lebesgue density.
class LevyMeasureSpec {
 public:
  using Kind = std::variant<NoJumps, SymmetricStable, CompoundPoisson, TabulatedDensity>;

  LevyMeasureSpec() = default;
  explicit LevyMeasureSpec(Kind kind);

  static LevyMeasureSpec none() { return LevyMeasureSpec{}; }
  static LevyMeasureSpec symmetric_stable(double scale, double index);
  static LevyMeasureSpec compound_poisson_gaussian(double rate, double mean, double variance);
  static LevyMeasureSpec compound_poisson_tabulated(double rate, TabulatedDensity law);
  static LevyMeasureSpec tabulated(TabulatedDensity density);

  const Kind& kind() const { return kind_; }
  std::string kind_name() const;
  bool is_none() const { return std::holds_alternative<NoJumps>(kind_); }
  bool is_symmetric() const;

  /// ν(x); +∞ at x = 0 for the stable kind.
  double density(double x) const;

  /// Supremum of p with ∫_{|x|>1} |x|^p ν(dx) < ∞.
  double moment_sup() const;
  bool has_finite_moment(double p) const { return p <= 0.0 || p < moment_sup(); }

  /// η with ϑ(u) = -η|u|^α for the stable kind, 0 otherwise.
  double stable_eta() const { return eta_; }

  LevyMeasureSpec scaled(double factor) const;

 private:
  Kind kind_{NoJumps{}};
  double eta_ = 0.0;
};

/// χ(x) = (1 ∧ |x|)·sign(x), χ(0) = 0.
double chi_scalar(double x);

/// ∫ χ(x) ν(dx); zero for symmetric measures.
double compensator_drift(const LevyMeasureSpec& spec);

/// 2∫_0^∞ (1 - cos y) y^{-1-α} dy, computed once per α by quadrature.
double stable_integral_constant(double index);

/// ϑ(u) = ∫ (e^{iux} - 1 - iuχ(x)) ν(dx), closed form where available.
cplx levy_exponent(const LevyMeasureSpec& spec, double u);

/// κ(z) = ∫ (e^{zx} - 1 - zχ(x)) ν(dx) for complex z. Pure-imaginary z reduces
/// to levy_exponent; other z throws NumericalError when the integral diverges.
cplx levy_exponent(const LevyMeasureSpec& spec, cplx z);

/// dκ/dz.
cplx levy_exponent_derivative(const LevyMeasureSpec& spec, cplx z);

/// ϑ(u) by direct quadrature of the defining integral (no closed forms).
cplx levy_exponent_by_quadrature(const LevyMeasureSpec& spec, double u);

/// 1 - sin(x)/x with the removable singularity filled in.
double one_minus_sinc(double x);

struct TransformedDensity {
  std::vector<double> x_grid;
  std::vector<double> values;
  int d = 1;

  /// Trapezoid mass over the grid.
  double mass() const;
};

/// ρ(x) = 2(1 - sin x / x) ν(x), ρ(0) = 0.
double rho_from_nu(const LevyMeasureSpec& spec, double x);
TransformedDensity rho_from_nu(const LevyMeasureSpec& spec, std::span<const double> x_grid);

/// ρ(x₁,x₂) = 4∏(1 - sin x_k / x_k) ν₂(x₁,x₂) for a product measure
/// ν₂ = ν_a ⊗ ν_b.
double rho_from_nu_product(const LevyMeasureSpec& first, const LevyMeasureSpec& second,
                           double x1, double x2);

/// 𝓕[ρ](u) = ∫ e^{iuz} ρ(z) dz by quadrature.
cplx fourier_of_rho(const LevyMeasureSpec& spec, double u);

}  // namespace ajl
