#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "ajl/sim.hpp"
#include "ajl/smoother.hpp"
#include "ajl/spectral.hpp"

namespace ajl {

inline constexpr int kConfigSchema = 1;

struct JumpSection {
  std::string kind = "none";
  double scale = 1.0;
  double index = 0.5;
  double rate = 1.0;
  double mean = 0.0;
  double variance = 1.0;
  std::string table;

  LevyMeasureSpec spec() const;
};

struct ModelSection {
  std::string kind;
  BatesParams bates;
  BrownianParams brownian;
  JumpSection jumps;
};

struct DesignSection {
  std::string kind = "iid-pairs";
  std::size_t N = 0;
  double Delta = 0.1;
  double T = 1.0;
};

struct SmootherSection {
  /// nullopt: bandwidth rule.
  std::optional<double> h;
  double r = 0.2;
  std::string kernel = "epanechnikov";
  /// nullopt: 0.5·λ_min(Γ̄).
  std::optional<double> gamma0;
  double s = 0.05;
};

struct SpectralSection {
  EstimatorConfig estimator;
  /// nullopt: class bound from the real-valued block.
  std::optional<double> Lambda;
  double profile_safety = 1.0;
  /// auto | finite-difference | smoother
  std::string route = "auto";
};

struct OracleSection {
  double s = 1.0;
  double u_min = -20.0;
  double u_max = 20.0;
  double u_step = 0.1;
};

struct OutputSection {
  std::string directory = "out";
  bool svg = true;
};

struct RunConfig {
  int schema = kConfigSchema;
  std::uint64_t seed = 0;
  ModelSection model;
  DesignSection design;
  SmootherSection smoother;
  SpectralSection spectral;
  OracleSection oracle;
  OutputSection output;

  Model build_model() const;
  Design build_design() const;
  SmootherConfig smoother_config(std::size_t N) const;
  /// Estimation route after resolving "auto" against the design.
  std::string resolved_route() const;
  double resolved_Lambda() const;

  void validate() const;
  /// Every effective value, keyed by section.
  nlohmann::json echo() const;
};

/// INI text: top-level `schema` and `seed`, sections model, jumps, design,
/// smoother, spectral, oracle, output. Unknown keys are rejected.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

/// Bates study of the numerical example with stable jumps of index `alpha`.
RunConfig paper_config(double alpha);

}  // namespace ajl
