#include "ajl/smoother.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

#include "ajl/error.hpp"
#include "ajl/io.hpp"
#include "ajl/parallel.hpp"
#include "ajl/quadrature.hpp"

namespace ajl {

Kernel Kernel::epanechnikov() {
  return {"epanechnikov", [](double z) { return 0.75 * (1.0 - z * z); }};
}

Kernel Kernel::uniform() {
  return {"uniform", [](double) { return 0.5; }};
}

Kernel Kernel::triweight() {
  return {"triweight", [](double z) {
            const double t = 1.0 - z * z;
            return 35.0 / 32.0 * t * t * t;
          }};
}

Kernel Kernel::by_name(const std::string& name) {
  if (name == "epanechnikov") return epanechnikov();
  if (name == "uniform") return uniform();
  if (name == "triweight") return triweight();
  throw ValidationError("unknown kernel '" + name + "'");
}

double bandwidth_rule(std::size_t N, double r) {
  if (N < 2) throw ValidationError("bandwidth rule needs N >= 2");
  if (!(r > 0.0)) throw ValidationError("bandwidth exponent r must be > 0");
  const double n = static_cast<double>(N);
  return std::pow(std::pow(std::log(n), 1.0 + r) / n, 0.2);
}

double sup_weight(double v) {
  const double a = std::abs(v);
  return a <= 1.0 ? 1.0 : 1.0 / (a * a * a * a);
}

namespace {

void check_config(const SmootherConfig& config) {
  if (!(config.h > 0.0)) throw ValidationError("bandwidth h must be > 0");
  if (!(config.s >= 0.0)) throw ValidationError("evaluation time s must be >= 0");
  if (config.gamma0 && !(*config.gamma0 > 0.0)) throw ValidationError("gamma0 must be > 0");
}

double design_density(const Design& design, double t) {
  if (const auto* r = std::get_if<RandomDesign>(&design)) return r->density(t);
  throw ValidationError("the smoother needs a random design with a lag density");
}

double smallest_eigenvalue(const Eigen::Matrix2d& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(m).eigenvalues().minCoeff();
}

}  // namespace

Eigen::Matrix2d design_gamma(const Design& design, const SmootherConfig& config) {
  check_config(config);
  const RandomDesign& rd = std::get<RandomDesign>(design);
  // The density has jumps at 0 and T; integrate piecewise between them.
  std::vector<double> breaks{-1.0};
  for (double edge : {0.0, rd.T}) {
    const double z = (edge - config.s) / config.h;
    if (z > -1.0 && z < 1.0) breaks.push_back(z);
  }
  breaks.push_back(1.0);
  double mu[3] = {0.0, 0.0, 0.0};
  for (int l = 0; l < 3; ++l) {
    for (std::size_t i = 1; i < breaks.size(); ++i) {
      const double a = breaks[i - 1];
      const double b = breaks[i];
      mu[l] += quad::gauss_legendre(
                   [&](double z) {
                     return cplx{std::pow(z, l) * config.kernel(z) * design_density(design, config.s + config.h * z),
                                 0.0};
                   },
                   a, b, 20)
                   .real();
    }
  }
  Eigen::Matrix2d g;
  g << mu[0], mu[1], mu[1], mu[2];
  return g;
}

SmootherState gamma_matrices(const ObservationSet& obs, const SmootherConfig& config) {
  check_config(config);
  SmootherState st;
  const double n = static_cast<double>(obs.size());
  for (const auto& r : obs.records) {
    const double dz = r.delta - config.s;
    const double k = config.kernel(dz / config.h);
    if (k == 0.0 && std::abs(dz) > config.h) continue;
    if (std::abs(dz) <= config.h) ++st.window_count;
    st.S[0] += k;
    st.S[1] += k * dz;
    st.S[2] += k * dz * dz;
  }
  const double h = config.h;
  st.Gamma << st.S[0] / h, st.S[1] / (h * h), st.S[1] / (h * h), st.S[2] / (h * h * h);
  st.Gamma /= n;
  st.lambda_min = smallest_eigenvalue(st.Gamma);
  if (std::holds_alternative<RandomDesign>(obs.design)) {
    st.GammaBar = design_gamma(obs.design, config);
  }
  if (config.gamma0) {
    st.gamma0 = *config.gamma0;
  } else {
    const double bar_min = smallest_eigenvalue(st.GammaBar);
    if (!(bar_min > 0.0))
      throw ValidationError("automatic gamma0 needs a design with positive lambda_min(GammaBar)");
    st.gamma0 = 0.5 * bar_min;
  }
  st.truncated = st.lambda_min <= 0.5 * st.gamma0;
  return st;
}

LocalLinearWeights local_linear_weights(const ObservationSet& obs, const SmootherConfig& config) {
  LocalLinearWeights w;
  w.state = gamma_matrices(obs, config);
  if (w.state.window_count == 0)
    throw EstimatorUnavailable("no observation lag inside the kernel window [s - h, s + h]");
  const std::size_t n = obs.size();
  w.tau0.assign(n, 0.0);
  w.tau1.assign(n, 0.0);
  if (w.state.truncated) return w;
  const double* S = w.state.S;
  std::vector<double> b0(n, 0.0);
  std::vector<double> b1(n, 0.0);
  double b0_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dz = obs.records[i].delta - config.s;
    const double k = config.kernel(dz / config.h);
    b0[i] = k * (S[2] - dz * S[1]);
    b1[i] = k * (dz * S[0] - S[1]);
    b0_sum += b0[i];
  }
  // Σb₀ = S₀S₂ - S₁², so τ₁ = b₁/Σb₀ is already the slope of the local fit and
  // (φ̂, hφ̂ₛ) coincides with Γ⁻¹Y.
  for (std::size_t i = 0; i < n; ++i) {
    w.tau0[i] = b0[i] / b0_sum;
    w.tau1[i] = b1[i] / b0_sum;
  }
  return w;
}

SmoothedCFEvaluator::SmoothedCFEvaluator(const ObservationSet& obs, const SmootherConfig& config)
    : weights_(local_linear_weights(obs, config)) {
  ends_.reserve(obs.size());
  for (const auto& r : obs.records) ends_.push_back(r.x_end);
}

std::pair<cplx, cplx> SmoothedCFEvaluator::operator()(const Vec& u) const {
  if (weights_.state.truncated) return {cplx{0.0, 0.0}, cplx{0.0, 0.0}};
  cplx phi{0.0, 0.0};
  cplx phi_s{0.0, 0.0};
  for (std::size_t i = 0; i < ends_.size(); ++i) {
    if (weights_.tau0[i] == 0.0 && weights_.tau1[i] == 0.0) continue;
    const cplx e = std::exp(cplx{0.0, u.dot(ends_[i])});
    phi += weights_.tau0[i] * e;
    phi_s += weights_.tau1[i] * e;
  }
  return {phi, phi_s};
}

LocalLinearFit local_linear_fit(const ObservationSet& obs, const Vec& u, const SmootherConfig& config) {
  if (u.size() != obs.dim()) throw ValidationError("frequency dimension does not match the observations");
  SmoothedCFEvaluator eval(obs, config);
  const auto [phi, phi_s] = eval(u);
  return {phi, phi_s, eval.state()};
}

SmoothedCF smoothed_cf_grid(const ObservationSet& obs, const std::vector<Vec>& u_grid, const SmootherConfig& config,
                            int threads) {
  if (u_grid.empty()) throw ValidationError("u grid must be nonempty");
  for (const auto& u : u_grid)
    if (u.size() != obs.dim()) throw ValidationError("frequency dimension does not match the observations");
  SmoothedCFEvaluator eval(obs, config);
  SmoothedCF out;
  out.u_grid = u_grid;
  out.phi_hat.resize(u_grid.size());
  out.phi_s_hat.resize(u_grid.size());
  out.state = eval.state();
  out.h = config.h;
  out.s = config.s;
  out.kernel = config.kernel.name;
  parallel_for(u_grid.size(), threads, [&](std::size_t k) {
    const auto [phi, phi_s] = eval(u_grid[k]);
    out.phi_hat[k] = phi;
    out.phi_s_hat[k] = phi_s;
  });
  return out;
}

cplx fd_cf_derivative(const ObservationSet& obs, const Vec& u) {
  const auto* pairs = std::get_if<IidPairs>(&obs.design);
  if (!pairs) throw ValidationError("finite-difference derivative needs an iid-pairs design");
  if (u.size() != obs.dim()) throw ValidationError("frequency dimension does not match the observations");
  cplx sum{0.0, 0.0};
  for (const auto& r : obs.records)
    sum += std::exp(cplx{0.0, u.dot(r.x_end)}) - std::exp(cplx{0.0, u.dot(r.x_start)});
  return sum / (static_cast<double>(obs.size()) * pairs->Delta);
}

double weighted_sup_error(const std::vector<Vec>& u_grid, const std::vector<cplx>& estimate,
                          const std::vector<cplx>& truth) {
  if (u_grid.size() != estimate.size() || u_grid.size() != truth.size())
    throw ValidationError("weighted_sup_error: size mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < u_grid.size(); ++k) {
    worst = std::max(worst, sup_weight(u_grid[k].norm()) * std::abs(estimate[k] - truth[k]));
  }
  return worst;
}

void write_smoothed_cf(const SmoothedCF& cf, const std::filesystem::path& csv_path) {
  const std::size_t d = cf.u_grid.empty() ? 1 : static_cast<std::size_t>(cf.u_grid.front().size());
  std::vector<std::string> header;
  std::vector<std::vector<double>> cols(d + 4);
  for (std::size_t k = 1; k <= d; ++k) header.push_back("u_" + std::to_string(k));
  for (const char* name : {"re_phi", "im_phi", "re_phis", "im_phis"}) header.emplace_back(name);
  for (std::size_t i = 0; i < cf.u_grid.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) cols[k].push_back(cf.u_grid[i](static_cast<Eigen::Index>(k)));
    cols[d].push_back(cf.phi_hat[i].real());
    cols[d + 1].push_back(cf.phi_hat[i].imag());
    cols[d + 2].push_back(cf.phi_s_hat[i].real());
    cols[d + 3].push_back(cf.phi_s_hat[i].imag());
  }
  write_csv(csv_path, header, cols);
  nlohmann::json side;
  side["h"] = cf.h;
  side["s"] = cf.s;
  side["kernel"] = cf.kernel;
  side["gamma0"] = cf.state.gamma0;
  side["lambda_min"] = cf.state.lambda_min;
  side["truncated"] = cf.state.truncated;
  std::filesystem::path side_path = csv_path;
  side_path.replace_extension(".json");
  write_file_atomic(side_path, side.dump(2) + "\n");
}

SmoothedCF read_smoothed_cf(const std::filesystem::path& csv_path) {
  const CsvTable table = read_csv(csv_path);
  if (table.header.size() < 5) throw ValidationError("smoothed c.f. CSV has too few columns");
  const std::size_t d = table.header.size() - 4;
  SmoothedCF cf;
  for (const auto& row : table.rows) {
    Vec u(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) u(static_cast<Eigen::Index>(k)) = row[k];
    cf.u_grid.push_back(u);
    cf.phi_hat.emplace_back(row[d], row[d + 1]);
    cf.phi_s_hat.emplace_back(row[d + 2], row[d + 3]);
  }
  std::filesystem::path side_path = csv_path;
  side_path.replace_extension(".json");
  const auto side = nlohmann::json::parse(read_file(side_path));
  cf.h = side.at("h").get<double>();
  cf.s = side.at("s").get<double>();
  cf.kernel = side.at("kernel").get<std::string>();
  cf.state.gamma0 = side.at("gamma0").get<double>();
  cf.state.lambda_min = side.at("lambda_min").get<double>();
  cf.state.truncated = side.at("truncated").get<bool>();
  return cf;
}

}  // namespace ajl
