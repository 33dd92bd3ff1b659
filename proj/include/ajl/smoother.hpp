#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ajl/sim.hpp"
#include "ajl/types.hpp"

namespace ajl {

/// Bounded kernel supported on [-1, 1].
struct Kernel {
  std::string name;
  std::function<double(double)> fn;

  double operator()(double z) const { return (z < -1.0 || z > 1.0) ? 0.0 : fn(z); }

  static Kernel epanechnikov();
  static Kernel uniform();
  static Kernel triweight();
  static Kernel by_name(const std::string& name);
};

struct SmootherConfig {
  double h = 0.0;
  double s = 0.0;
  Kernel kernel = Kernel::epanechnikov();
  /// Truncation threshold γ₀; nullopt means 0.5·λ_min(Γ̄(s)).
  std::optional<double> gamma0;
  double r = 0.2;
};

/// h = (log^{1+r}(N) / N)^{1/5}.
double bandwidth_rule(std::size_t N, double r);

struct SmootherState {
  double S[3] = {0.0, 0.0, 0.0};
  Eigen::Matrix2d Gamma = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d GammaBar = Eigen::Matrix2d::Zero();
  double lambda_min = 0.0;
  double gamma0 = 0.0;
  bool truncated = false;
  /// Records with |δₙ - s| ≤ h.
  std::size_t window_count = 0;
};

/// Local-linear weights τ₀ₙ, τ₁ₙ at the evaluation time.
struct LocalLinearWeights {
  std::vector<double> tau0;
  std::vector<double> tau1;
  SmootherState state;
};

/// Design-density kernel moments μ_l(s) = ∫ zˡ K(z) p_δ(s + hz) dz.
Eigen::Matrix2d design_gamma(const Design& design, const SmootherConfig& config);

SmootherState gamma_matrices(const ObservationSet& obs, const SmootherConfig& config);

/// Throws EstimatorUnavailable when no lag falls inside the kernel window.
LocalLinearWeights local_linear_weights(const ObservationSet& obs, const SmootherConfig& config);

struct LocalLinearFit {
  cplx phi;
  cplx phi_s;
  SmootherState state;
};

/// φ̂ = Σ τ₀ₙ e^{iu·Xₙ}, φ̂ₛ = Σ τ₁ₙ e^{iu·Xₙ}; zero when Γ-truncated.
LocalLinearFit local_linear_fit(const ObservationSet& obs, const Vec& u, const SmootherConfig& config);

/// Sup-norm weight v ↦ min{1, v⁻⁴}.
double sup_weight(double v);

struct SmoothedCF {
  std::vector<Vec> u_grid;
  std::vector<cplx> phi_hat;
  std::vector<cplx> phi_s_hat;
  SmootherState state;
  double h = 0.0;
  double s = 0.0;
  std::string kernel;
};

SmoothedCF smoothed_cf_grid(const ObservationSet& obs, const std::vector<Vec>& u_grid,
                            const SmootherConfig& config, int threads = 1);

/// Evaluator reusing one set of weights across frequencies.
class SmoothedCFEvaluator {
 public:
  SmoothedCFEvaluator(const ObservationSet& obs, const SmootherConfig& config);

  /// (φ̂(u), φ̂ₛ(u)); both zero when truncated.
  std::pair<cplx, cplx> operator()(const Vec& u) const;
  const SmootherState& state() const { return weights_.state; }

 private:
  LocalLinearWeights weights_;
  std::vector<Vec> ends_;
};

/// (NΔ)⁻¹ Σ [e^{iu·Xⁿ(Δ)} - e^{iu·Xⁿ(0)}]; requires an iid-pairs design.
cplx fd_cf_derivative(const ObservationSet& obs, const Vec& u);

/// Sup over the grid of w(‖u‖)|estimate - truth|.
double weighted_sup_error(const std::vector<Vec>& u_grid, const std::vector<cplx>& estimate,
                          const std::vector<cplx>& truth);

/// CSV (u_1..d, re_phi, im_phi, re_phis, im_phis) plus a JSON sidecar next to
/// it holding h, s, kernel, γ₀ and the truncation flag.
void write_smoothed_cf(const SmoothedCF& cf, const std::filesystem::path& csv_path);
SmoothedCF read_smoothed_cf(const std::filesystem::path& csv_path);

}  // namespace ajl
