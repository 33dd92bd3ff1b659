#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ajl/config.hpp"

namespace ajl {

std::string code_version();

struct CommandOptions {
  std::filesystem::path out_dir;
  int threads = 1;
  bool exact_oracle = false;
  std::optional<LimitMode> limit_mode;
};

struct SimulateResult {
  ObservationSet observations;
  std::filesystem::path csv;
  std::filesystem::path sidecar;
};

/// observations.csv and observations.json in the output directory.
SimulateResult cmd_simulate(const RunConfig& config, const CommandOptions& options);

struct EstimateResult {
  SpectralEstimate estimate;
  nlohmann::json manifest;
};

/// Reads `observations` (ignored in exact-oracle mode) and writes rho.csv,
/// psi.csv, index.csv, manifest.json and timings.json.
EstimateResult cmd_estimate(const RunConfig& config, const std::optional<std::filesystem::path>& observations,
                            const CommandOptions& options);

/// ψ̂ₛ source for the log-price marginal under the configured route.
PsiSource make_psi_source(const RunConfig& config, const ObservationSet& observations);
PsiSource make_exact_source(const RunConfig& config);

/// Relative L² distance √(Σ(a-b)² / Σb²) over lo ≤ |x| ≤ hi.
double relative_l2(const std::vector<double>& estimate, const std::vector<double>& truth,
                   const std::vector<double>& x, double lo, double hi);

struct ReplicationRun {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  double U_hat = 0.0;
  double L_hat = 0.0;
  double alpha_tilde = -1.0;
  double epsilon = 0.0;
  double l2_tilde = 0.0;
  double l2_corrected = 0.0;
  double near_tilde = 0.0;
  double near_corrected = 0.0;
  double sup_rho_tilde = 0.0;
};

struct ReplicationSummary {
  /// 0 marks the no-jump sanity study.
  double alpha = 0.0;
  std::size_t seeds = 0;
  double median_alpha_tilde = 0.0;
  double median_l2_tilde = 0.0;
  double median_l2_corrected = 0.0;
  double median_near_reduction = 0.0;
  double median_sup_rho_tilde = 0.0;
  bool pass_alpha = false;
  bool pass_l2 = false;
  bool pass_near = false;
};

struct ReplicationReport {
  std::vector<ReplicationRun> runs;
  std::vector<ReplicationSummary> summaries;
  std::string table;
};

inline constexpr double kL2Threshold = 0.35;
inline constexpr double kNearReductionThreshold = 0.30;

/// α ∈ {0.5, 0.8} Bates studies over `seed_count` seeds starting at
/// config.seed; a config without jumps runs the no-jump sanity study instead.
ReplicationReport cmd_replicate_paper(const RunConfig& base, std::size_t seed_count, const CommandOptions& options);

/// oracle_<what>.csv for what ∈ {cf, rho, exponent}.
std::filesystem::path cmd_oracle(const RunConfig& config, const std::string& what, const CommandOptions& options);

struct PlotSeries {
  std::string name;
  std::vector<double> y;
  bool dashed = false;
  std::string color = "black";
};

/// Static line plot; estimate dashed, truth solid.
void write_svg_plot(const std::filesystem::path& path, const std::string& title, const std::vector<double>& x,
                    const std::vector<PlotSeries>& series);

}  // namespace ajl
