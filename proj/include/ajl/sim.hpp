#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ajl/affine.hpp"
#include "ajl/levy.hpp"
#include "ajl/rng.hpp"
#include "ajl/types.hpp"

namespace ajl {

/// dX = -V/2 dt + √V dWˢ + dZ,  dV = λ(θ - V) dt + ζ√V dWᵛ, Wˢ ⟂ Wᵛ.
/// State layout is (V, X).
struct BatesParams {
  double lambda = 1.5;
  double theta = 1.0;
  double zeta = 0.3;
  double v0 = 1.0;
  double x0 = 0.0;
  LevyMeasureSpec jumps;

  void validate() const;
};

/// dX = μ dt + σ dW + dZ.
struct BrownianParams {
  double mu = 0.0;
  double sigma = 1.0;
  double x0 = 0.0;
  LevyMeasureSpec jumps;

  void validate() const;
};

using Model = std::variant<BrownianParams, BatesParams>;

AffineCharacteristics bates_characteristics(const BatesParams& p);
AffineCharacteristics brownian_characteristics(const BrownianParams& p);
AffineCharacteristics characteristics(const Model& model);
Vec initial_state(const Model& model);
/// Index of the log-price component within the state vector.
int log_price_component(const Model& model);
const LevyMeasureSpec& jump_measure(const Model& model);
std::string model_kind(const Model& model);

/// δₙ i.i.d. uniform on [0, T], every segment started at the base state.
struct RandomDesign {
  double T = 1.0;

  double density(double t) const { return (t >= 0.0 && t <= T) ? 1.0 / T : 0.0; }
};

/// N independent (X(0), X(Δ)) pairs from a common initial state.
struct IidPairs {
  double Delta = 0.1;
};

using Design = std::variant<RandomDesign, IidPairs>;

std::string design_kind(const Design& design);

struct ObservationRecord {
  double delta = 0.0;
  Vec x_start;
  Vec x_end;
};

struct ObservationSet {
  Design design;
  Vec base_state;
  std::vector<ObservationRecord> records;
  std::uint64_t seed = 0;

  int dim() const { return static_cast<int>(base_state.size()); }
  std::size_t size() const { return records.size(); }
  bool is_iid_pairs() const { return std::holds_alternative<IidPairs>(design); }

  /// One-dimensional set holding only `component`.
  ObservationSet marginal(int component) const;

  void validate() const;
};

/// Symmetric α-stable increment with c.f. exp(-η|u|^α dt) (Chambers–Mallows–Stuck).
double sample_stable_increment(double alpha, double eta, double dt, StreamRng& rng);

/// Exact square-root diffusion transition via the noncentral χ² law.
double cir_step(double v, double dt, double lambda, double theta, double zeta, StreamRng& rng);

/// Increment of the pure-jump Lévy process Z over dt, compensated as in the
/// truncation χ.
double sample_jump_increment(const LevyMeasureSpec& jumps, double dt, StreamRng& rng);

/// ⌈Δ / 0.005⌉, at least 1.
int default_substeps(double Delta);

std::pair<Vec, Vec> simulate_bates_pair(const BatesParams& params, double Delta, int n_substeps,
                                        StreamRng& rng);
std::pair<Vec, Vec> simulate_brownian_pair(const BrownianParams& params, double Delta, int n_substeps,
                                           StreamRng& rng);
std::pair<Vec, Vec> simulate_pair(const Model& model, double Delta, int n_substeps, StreamRng& rng);

/// Record n draws from StreamRng(seed, "simulate", n), so the result does not
/// depend on `threads`.
ObservationSet build_observation_set(const Model& model, const Design& design, std::size_t N,
                                     std::uint64_t seed, int threads = 1);

/// CSV with header delta,x_start_1..d,x_end_1..d.
void write_observations_csv(const ObservationSet& obs, const std::filesystem::path& path);
/// Reads the CSV; the design is taken from `design` when given, otherwise
/// inferred (all lags equal → iid pairs, else random design on [0, max δ]).
ObservationSet read_observations_csv(const std::filesystem::path& path,
                                     const std::optional<Design>& design = std::nullopt);

}  // namespace ajl
