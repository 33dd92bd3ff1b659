#include "ajl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <functional>
#include <sstream>

#include "ajl/error.hpp"
#include "ajl/io.hpp"
#include "ajl/parallel.hpp"

namespace ajl {

void BatesParams::validate() const {
  if (!(lambda > 0.0 && theta > 0.0 && zeta > 0.0 && v0 > 0.0))
    throw ValidationError("Bates parameters lambda, theta, zeta, v0 must be > 0");
  if (!std::isfinite(x0)) throw ValidationError("x0 must be finite");
}

void BrownianParams::validate() const {
  if (!(sigma >= 0.0)) throw ValidationError("sigma must be >= 0");
  if (!std::isfinite(mu) || !std::isfinite(x0)) throw ValidationError("mu and x0 must be finite");
}

AffineCharacteristics bates_characteristics(const BatesParams& p) {
  p.validate();
  auto c = AffineCharacteristics::zero(2, 1);
  c.alpha1[0](0, 0) = 0.5 * p.zeta * p.zeta;
  c.alpha1[0](1, 1) = 0.5;
  c.beta0(0) = p.lambda * p.theta;
  c.beta1(0, 0) = -p.lambda;
  c.beta1(1, 0) = -0.5;
  c.nu0 = p.jumps;
  c.jump_axis = 1;
  c.validate();
  return c;
}

AffineCharacteristics brownian_characteristics(const BrownianParams& p) {
  p.validate();
  auto c = AffineCharacteristics::zero(1, 0);
  c.alpha0(0, 0) = 0.5 * p.sigma * p.sigma;
  c.beta0(0) = p.mu;
  c.nu0 = p.jumps;
  c.jump_axis = 0;
  c.validate();
  return c;
}

AffineCharacteristics characteristics(const Model& model) {
  return std::visit(
      [](const auto& p) {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, BatesParams>) return bates_characteristics(p);
        else return brownian_characteristics(p);
      },
      model);
}

Vec initial_state(const Model& model) {
  if (const auto* b = std::get_if<BatesParams>(&model)) return Vec{{b->v0, b->x0}};
  return Vec::Constant(1, std::get<BrownianParams>(model).x0);
}

int log_price_component(const Model& model) { return std::holds_alternative<BatesParams>(model) ? 1 : 0; }

const LevyMeasureSpec& jump_measure(const Model& model) {
  return std::visit([](const auto& p) -> const LevyMeasureSpec& { return p.jumps; }, model);
}

std::string model_kind(const Model& model) { return std::holds_alternative<BatesParams>(model) ? "bates" : "brownian"; }

std::string design_kind(const Design& design) {
  return std::holds_alternative<IidPairs>(design) ? "iid-pairs" : "random-design";
}

ObservationSet ObservationSet::marginal(int component) const {
  if (component < 0 || component >= dim()) throw ValidationError("marginal component out of range");
  ObservationSet out;
  out.design = design;
  out.seed = seed;
  out.base_state = Vec::Constant(1, base_state(component));
  out.records.reserve(records.size());
  for (const auto& r : records)
    out.records.push_back({r.delta, Vec::Constant(1, r.x_start(component)), Vec::Constant(1, r.x_end(component))});
  return out;
}

void ObservationSet::validate() const {
  const int d = dim();
  if (d < 1) throw ValidationError("observation set has no state dimension");
  for (const auto& r : records) {
    if (r.x_start.size() != d || r.x_end.size() != d) throw ValidationError("record dimension mismatch");
    if (!(r.delta >= 0.0) || !std::isfinite(r.delta)) throw ValidationError("lags must be finite and >= 0");
    if (const auto* p = std::get_if<IidPairs>(&design); p && r.delta != p->Delta)
      throw ValidationError("iid-pairs records must share the lag Delta");
    if (const auto* rd = std::get_if<RandomDesign>(&design); rd && r.delta > rd->T)
      throw ValidationError("random-design lags must lie in [0, T]");
  }
}

// ---------------------------------------------------------------------------

double sample_stable_increment(double alpha, double eta, double dt, StreamRng& rng) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("stable index must lie in (0, 1)");
  if (dt <= 0.0 || eta == 0.0) return 0.0;
  const double v = kPi * (rng.uniform() - 0.5);
  const double w = -std::log(rng.uniform());
  const double standard = std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
                          std::pow(std::cos((1.0 - alpha) * v) / w, (1.0 - alpha) / alpha);
  return std::pow(eta * dt, 1.0 / alpha) * standard;
}

double cir_step(double v, double dt, double lambda, double theta, double zeta, StreamRng& rng) {
  if (!(v >= 0.0)) throw ValidationError("variance must be >= 0");
  if (dt <= 0.0) return v;
  const double decay = std::exp(-lambda * dt);
  if (zeta <= 1e-12) return theta + (v - theta) * decay;
  const double c = zeta * zeta * (1.0 - decay) / (4.0 * lambda);
  const double df = 4.0 * lambda * theta / (zeta * zeta);
  const double noncentrality = v * decay / c;
  long long poisson = 0;
  if (noncentrality > 0.0) poisson = std::poisson_distribution<long long>(0.5 * noncentrality)(rng);
  const double chi2 = std::gamma_distribution<double>(0.5 * df + static_cast<double>(poisson), 2.0)(rng);
  return c * chi2;
}

namespace {

double sample_table(const TabulatedDensity& t, StreamRng& rng) {
  // inverse CDF of the piecewise-linear density, linear within cells
  std::vector<double> cdf(t.x.size(), 0.0);
  for (std::size_t i = 1; i < t.x.size(); ++i)
    cdf[i] = cdf[i - 1] + 0.5 * (t.x[i] - t.x[i - 1]) * (t.value[i] + t.value[i - 1]);
  const double target = rng.uniform() * cdf.back();
  const auto it = std::lower_bound(cdf.begin(), cdf.end(), target);
  const std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), 1, cdf.size() - 1);
  const double span = cdf[hi] - cdf[hi - 1];
  const double frac = span > 0.0 ? (target - cdf[hi - 1]) / span : 0.5;
  return t.x[hi - 1] + frac * (t.x[hi] - t.x[hi - 1]);
}

double table_mass(const TabulatedDensity& t) {
  const auto w = t.trapezoid_weights();
  double m = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) m += w[i] * t.value[i];
  return m;
}

/// Σ of Poisson(rate·dt) jumps minus the compensator ∫χ dν · dt.
double compound_poisson_increment(double rate, double compensator, double dt, StreamRng& rng,
                                  const std::function<double(StreamRng&)>& jump) {
  const long long count = std::poisson_distribution<long long>(rate * dt)(rng);
  double sum = 0.0;
  for (long long k = 0; k < count; ++k) sum += jump(rng);
  return sum - compensator * dt;
}

}  // namespace

double sample_jump_increment(const LevyMeasureSpec& jumps, double dt, StreamRng& rng) {
  if (dt <= 0.0 || jumps.is_none()) return 0.0;
  if (const auto* s = std::get_if<SymmetricStable>(&jumps.kind()))
    return sample_stable_increment(s->index, jumps.stable_eta(), dt, rng);
  if (const auto* c = std::get_if<CompoundPoisson>(&jumps.kind())) {
    const double drift = compensator_drift(jumps);
    if (const auto* g = std::get_if<GaussianJumps>(&c->law)) {
      const GaussianJumps law = *g;
      return compound_poisson_increment(c->rate, drift, dt, rng, [law](StreamRng& r) {
        return law.mean + std::sqrt(law.variance) * std::normal_distribution<double>(0.0, 1.0)(r);
      });
    }
    const auto& t = std::get<TabulatedDensity>(c->law);
    return compound_poisson_increment(c->rate * table_mass(t), drift, dt, rng,
                                      [&t](StreamRng& r) { return sample_table(t, r); });
  }
  const auto& t = std::get<TabulatedDensity>(jumps.kind());
  return compound_poisson_increment(table_mass(t), compensator_drift(jumps), dt, rng,
                                    [&t](StreamRng& r) { return sample_table(t, r); });
}

int default_substeps(double Delta) { return std::max(1, static_cast<int>(std::ceil(Delta / 0.005 - 1e-9))); }

std::pair<Vec, Vec> simulate_bates_pair(const BatesParams& params, double Delta, int n_substeps, StreamRng& rng) {
  if (!(Delta >= 0.0)) throw ValidationError("Delta must be >= 0");
  if (n_substeps < 1) throw ValidationError("n_substeps must be >= 1");
  Vec start{{params.v0, params.x0}};
  if (Delta == 0.0) return {start, start};
  const double dt = Delta / n_substeps;
  std::normal_distribution<double> gauss(0.0, 1.0);
  double v = params.v0;
  double x = params.x0;
  for (int k = 0; k < n_substeps; ++k) {
    const double v_next = cir_step(v, dt, params.lambda, params.theta, params.zeta, rng);
    x += -0.5 * v * dt + std::sqrt(v * dt) * gauss(rng) + sample_jump_increment(params.jumps, dt, rng);
    v = v_next;
  }
  return {start, Vec{{v, x}}};
}

std::pair<Vec, Vec> simulate_brownian_pair(const BrownianParams& params, double Delta, int n_substeps,
                                           StreamRng& rng) {
  if (!(Delta >= 0.0)) throw ValidationError("Delta must be >= 0");
  if (n_substeps < 1) throw ValidationError("n_substeps must be >= 1");
  Vec start = Vec::Constant(1, params.x0);
  if (Delta == 0.0) return {start, start};
  // The diffusion part is Gaussian, so it is drawn exactly in one step.
  double x = params.x0 + params.mu * Delta +
             params.sigma * std::sqrt(Delta) * std::normal_distribution<double>(0.0, 1.0)(rng);
  const double dt = Delta / n_substeps;
  if (!params.jumps.is_none())
    for (int k = 0; k < n_substeps; ++k) x += sample_jump_increment(params.jumps, dt, rng);
  return {start, Vec::Constant(1, x)};
}

std::pair<Vec, Vec> simulate_pair(const Model& model, double Delta, int n_substeps, StreamRng& rng) {
  if (const auto* b = std::get_if<BatesParams>(&model)) return simulate_bates_pair(*b, Delta, n_substeps, rng);
  return simulate_brownian_pair(std::get<BrownianParams>(model), Delta, n_substeps, rng);
}

ObservationSet build_observation_set(const Model& model, const Design& design, std::size_t N, std::uint64_t seed,
                                     int threads) {
  if (N < 1) throw ValidationError("N must be >= 1");
  if (const auto* p = std::get_if<IidPairs>(&design); p && !(p->Delta > 0.0))
    throw ValidationError("Delta must be > 0");
  if (const auto* r = std::get_if<RandomDesign>(&design); r && !(r->T > 0.0))
    throw ValidationError("T must be > 0");
  std::visit([](const auto& p) { p.validate(); }, model);

  ObservationSet obs;
  obs.design = design;
  obs.base_state = initial_state(model);
  obs.seed = seed;
  obs.records.resize(N);
  parallel_for(N, threads, [&](std::size_t n) {
    StreamRng rng(seed, "simulate", n);
    double delta = 0.0;
    if (const auto* p = std::get_if<IidPairs>(&design)) delta = p->Delta;
    else delta = std::get<RandomDesign>(design).T * rng.uniform();
    auto [start, end] = simulate_pair(model, delta, default_substeps(delta), rng);
    obs.records[n] = ObservationRecord{delta, std::move(start), std::move(end)};
  });
  return obs;
}

// ---------------------------------------------------------------------------

void write_observations_csv(const ObservationSet& obs, const std::filesystem::path& path) {
  const int d = obs.dim();
  std::ostringstream out;
  out << "delta";
  for (int k = 1; k <= d; ++k) out << ",x_start_" << k;
  for (int k = 1; k <= d; ++k) out << ",x_end_" << k;
  out << '\n';
  for (const auto& r : obs.records) {
    out << format_double(r.delta);
    for (int k = 0; k < d; ++k) out << ',' << format_double(r.x_start(k));
    for (int k = 0; k < d; ++k) out << ',' << format_double(r.x_end(k));
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

ObservationSet read_observations_csv(const std::filesystem::path& path, const std::optional<Design>& design) {
  const CsvTable table = read_csv(path);
  if (table.header.empty() || table.header.front() != "delta" || table.header.size() % 2 != 1)
    throw ValidationError("observation CSV must start with 'delta' followed by x_start/x_end columns");
  const int d = static_cast<int>((table.header.size() - 1) / 2);
  for (int k = 1; k <= d; ++k) {
    if (table.header[static_cast<std::size_t>(k)] != "x_start_" + std::to_string(k) ||
        table.header[static_cast<std::size_t>(d + k)] != "x_end_" + std::to_string(k))
      throw ValidationError("unexpected observation CSV column layout");
  }
  if (table.rows.empty()) throw ValidationError("observation CSV has no rows");
  ObservationSet obs;
  for (const auto& row : table.rows) {
    ObservationRecord r;
    r.delta = row[0];
    r.x_start.resize(d);
    r.x_end.resize(d);
    for (int k = 0; k < d; ++k) {
      r.x_start(k) = row[static_cast<std::size_t>(1 + k)];
      r.x_end(k) = row[static_cast<std::size_t>(1 + d + k)];
    }
    obs.records.push_back(std::move(r));
  }
  obs.base_state = obs.records.front().x_start;
  if (design) {
    obs.design = *design;
  } else {
    const double first = obs.records.front().delta;
    const bool equal = std::all_of(obs.records.begin(), obs.records.end(),
                                   [first](const auto& r) { return r.delta == first; });
    double max_delta = 0.0;
    for (const auto& r : obs.records) max_delta = std::max(max_delta, r.delta);
    if (equal && first > 0.0) obs.design = IidPairs{first};
    else obs.design = RandomDesign{max_delta > 0.0 ? max_delta : 1.0};
  }
  obs.validate();
  return obs;
}

}  // namespace ajl
