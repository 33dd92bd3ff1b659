#include "ajl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ajl/error.hpp"
#include "ajl/io.hpp"
#include "ajl/parallel.hpp"

#ifndef AJL_VERSION
#define AJL_VERSION "0.0.0"
#endif

namespace ajl {

namespace fs = std::filesystem;
using nlohmann::json;

std::string code_version() { return AJL_VERSION; }

namespace {

class StageTimer {
 public:
  void start(const std::string& stage) {
    stage_ = stage;
    begin_ = std::chrono::steady_clock::now();
  }
  void stop() {
    timings_[stage_] = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin_).count();
  }
  const json& timings() const { return timings_; }

 private:
  std::string stage_;
  std::chrono::steady_clock::time_point begin_;
  json timings_ = json::object();
};

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

json hashes(const fs::path& dir, const std::vector<std::string>& names) {
  json out = json::object();
  for (const auto& name : names) out[name] = file_hash(dir / name);
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

EstimatorConfig estimator_for(const RunConfig& config, const CommandOptions& options) {
  EstimatorConfig e = config.spectral.estimator;
  if (options.limit_mode) e.limit_mode = *options.limit_mode;
  return e;
}

json theoretical_cutoff(const RunConfig& config) {
  try {
    const auto U = theoretical_U(std::max<std::size_t>(config.design.N, 3), config.resolved_Lambda(),
                                 config.spectral.estimator.kappa, config.smoother.r, 0.0, 1);
    return U ? json(*U) : json("fallback");
  } catch (const ValidationError&) {
    return "unavailable";
  }
}

json estimate_summary(const SpectralEstimate& est) {
  json s;
  s["source"] = est.source;
  s["limit_mode"] = to_string(est.limit_mode);
  s["U_hat"] = est.U_used;
  s["L_hat"] = est.L_hat;
  s["alpha_tilde"] = est.index.alpha_tilde ? json(*est.index.alpha_tilde) : json(nullptr);
  s["correction_applied"] = est.correction.applied;
  s["epsilon"] = est.correction.epsilon;
  s["c_eps"] = est.correction.c_eps;
  s["imag_residue"] = est.imag_residue;
  return s;
}

}  // namespace

double relative_l2(const std::vector<double>& estimate, const std::vector<double>& truth,
                   const std::vector<double>& x, double lo, double hi) {
  if (estimate.size() != truth.size() || truth.size() != x.size()) throw ValidationError("relative_l2: size mismatch");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    if (a < lo || a > hi) continue;
    num += (estimate[i] - truth[i]) * (estimate[i] - truth[i]);
    den += truth[i] * truth[i];
  }
  if (!(den > 0.0)) throw ValidationError("relative_l2: truth vanishes on the window");
  return std::sqrt(num / den);
}

SimulateResult cmd_simulate(const RunConfig& config, const CommandOptions& options) {
  config.validate();
  SimulateResult res;
  res.observations = build_observation_set(config.build_model(), config.build_design(), config.design.N,
                                           config.seed, options.threads);
  res.csv = options.out_dir / "observations.csv";
  res.sidecar = options.out_dir / "observations.json";
  write_observations_csv(res.observations, res.csv);
  json side;
  side["code_version"] = code_version();
  side["config"] = config.echo();
  side["design"] = design_kind(res.observations.design);
  side["dimension"] = res.observations.dim();
  side["N"] = res.observations.size();
  side["seed"] = config.seed;
  side["observations_hash"] = file_hash(res.csv);
  write_json(res.sidecar, side);
  return res;
}

PsiSource make_exact_source(const RunConfig& config) {
  const Model model = config.build_model();
  const double s = config.resolved_route() == "smoother" ? config.smoother.s : 0.0;
  PsiSource src = psi_source_exact(characteristics(model), initial_state(model), log_price_component(model), s);
  return src;
}

PsiSource make_psi_source(const RunConfig& config, const ObservationSet& observations) {
  const Model model = config.build_model();
  const ObservationSet marginal = observations.marginal(log_price_component(model));
  if (config.resolved_route() == "finite-difference") return psi_source_fd(marginal);
  const WeightProfiles profiles(config.resolved_Lambda(), characteristics(model).d, config.spectral.profile_safety);
  return psi_source_smoother(marginal, config.smoother_config(marginal.size()), profiles,
                             config.spectral.estimator.t0_mode);
}

EstimateResult cmd_estimate(const RunConfig& config, const std::optional<fs::path>& observations,
                            const CommandOptions& options) {
  config.validate();
  StageTimer timer;
  EstimateResult res;
  json inputs = json::object();
  PsiSource source;
  if (options.exact_oracle) {
    source = make_exact_source(config);
  } else {
    if (!observations) throw ValidationError("estimate needs an observation file unless --exact-oracle is set");
    timer.start("read");
    if (!fs::exists(*observations)) throw IoError("observation file not found: " + observations->string());
    const ObservationSet obs = read_observations_csv(*observations, config.build_design());
    timer.stop();
    inputs[observations->filename().string()] = file_hash(*observations);
    timer.start("smooth");
    source = make_psi_source(config, obs);
    timer.stop();
  }
  timer.start("spectral");
  res.estimate = run_spectral_pipeline(source, estimator_for(config, options), options.threads);
  timer.stop();

  timer.start("write");
  write_spectral_csvs(res.estimate, options.out_dir);
  std::vector<std::string> outputs{"rho.csv", "psi.csv", "index.csv"};
  if (!res.estimate.selection.U_grid.empty()) outputs.push_back("u_select.csv");
  json& m = res.manifest;
  m["code_version"] = code_version();
  m["command"] = "estimate";
  m["config"] = config.echo();
  m["exact_oracle"] = options.exact_oracle;
  m["inputs"] = inputs;
  m["outputs"] = hashes(options.out_dir, outputs);
  m["summary"] = estimate_summary(res.estimate);
  m["summary"]["theoretical_U"] = theoretical_cutoff(config);
  write_json(options.out_dir / "manifest.json", m);
  timer.stop();
  write_json(options.out_dir / "timings.json", timer.timings());
  return res;
}

namespace {

bool alpha_band(double alpha, double estimate) {
  if (alpha == 0.5) return estimate >= 0.4 && estimate <= 0.6;
  if (alpha == 0.8) return estimate >= 0.7 && estimate <= 0.9;
  return std::abs(estimate - alpha) <= 0.1;
}

std::string alpha_tag(double alpha) { return fixed(alpha, 1); }

struct Job {
  double alpha;
  std::size_t index;
};

}  // namespace

ReplicationReport cmd_replicate_paper(const RunConfig& base, std::size_t seed_count, const CommandOptions& options) {
  if (seed_count == 0) throw ValidationError("seed_count must be >= 1");
  base.validate();
  if (base.model.jumps.kind != "none" && base.model.jumps.kind != "stable")
    throw ValidationError("replicate-paper studies stable jumps (or none for the sanity row)");
  const bool no_jumps = base.model.jumps.kind == "none";
  const std::vector<double> alphas = no_jumps ? std::vector<double>{0.0} : std::vector<double>{0.5, 0.8};
  const EstimatorConfig estimator = estimator_for(base, options);
  const std::vector<double> x_grid = estimator.x_grid();

  std::vector<Job> jobs;
  for (double a : alphas)
    for (std::size_t i = 0; i < seed_count; ++i) jobs.push_back({a, i});
  std::vector<ReplicationRun> runs(jobs.size());
  std::vector<SpectralEstimate> typical(alphas.size());
  StageTimer timer;
  timer.start("runs");
  parallel_for(jobs.size(), options.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    RunConfig c = base;
    if (!no_jumps) c.model.jumps.index = job.alpha;
    c.seed = base.seed + job.index;
    const Model model = c.build_model();
    const ObservationSet obs = build_observation_set(model, c.build_design(), c.design.N, c.seed);
    SpectralEstimate est = run_spectral_pipeline(make_psi_source(c, obs), estimator, 1);
    ReplicationRun& r = runs[j];
    r.alpha = job.alpha;
    r.seed = c.seed;
    r.U_hat = est.U_used;
    r.L_hat = est.L_hat;
    r.alpha_tilde = est.index.alpha_tilde.value_or(-1.0);
    r.epsilon = est.correction.epsilon;
    for (double v : est.rho_tilde) r.sup_rho_tilde = std::max(r.sup_rho_tilde, std::abs(v));
    if (!no_jumps) {
      const auto truth = rho_from_nu(jump_measure(model), x_grid).values;
      r.l2_tilde = relative_l2(est.rho_tilde, truth, x_grid, 0.2, 3.0);
      r.l2_corrected = relative_l2(est.correction.values, truth, x_grid, 0.2, 3.0);
      r.near_tilde = relative_l2(est.rho_tilde, truth, x_grid, 0.0, 0.5);
      r.near_corrected = relative_l2(est.correction.values, truth, x_grid, 0.0, 0.5);
    }
    if (job.index == 0) {
      const auto slot = static_cast<std::size_t>(std::find(alphas.begin(), alphas.end(), job.alpha) - alphas.begin());
      typical[slot] = std::move(est);
    }
  });
  timer.stop();

  ReplicationReport report;
  report.runs = runs;
  std::ostringstream table;
  if (no_jumps) {
    table << "no-jump sanity (rho = 0), seeds " << seed_count << "\n";
  } else {
    table << "alpha  seeds  med_alpha_tilde  med_L2_tilde  med_L2_corrected  med_near_reduction  pass\n";
  }
  for (double a : alphas) {
    ReplicationSummary s;
    s.alpha = a;
    std::vector<double> at, lt, lc, red, sup;
    for (const auto& r : runs) {
      if (r.alpha != a) continue;
      at.push_back(r.alpha_tilde);
      lt.push_back(r.l2_tilde);
      lc.push_back(r.l2_corrected);
      red.push_back(r.near_tilde > 0.0 ? 1.0 - r.near_corrected / r.near_tilde : 0.0);
      sup.push_back(r.sup_rho_tilde);
    }
    s.seeds = at.size();
    s.median_sup_rho_tilde = median(sup);
    if (no_jumps) {
      table << "median sup|rho_tilde| = " << format_double(s.median_sup_rho_tilde) << "\n";
    } else {
      s.median_alpha_tilde = median(at);
      s.median_l2_tilde = median(lt);
      s.median_l2_corrected = median(lc);
      s.median_near_reduction = median(red);
      s.pass_alpha = alpha_band(a, s.median_alpha_tilde);
      s.pass_l2 = s.median_l2_corrected <= kL2Threshold;
      s.pass_near = s.median_near_reduction >= kNearReductionThreshold;
      const bool pass = s.pass_alpha && s.pass_l2 && s.pass_near;
      table << alpha_tag(a) << "    " << s.seeds << "      " << fixed(s.median_alpha_tilde, 3) << "            "
            << fixed(s.median_l2_tilde, 3) << "         " << fixed(s.median_l2_corrected, 3) << "             "
            << fixed(s.median_near_reduction, 3) << "               " << (pass ? "PASS" : "FAIL") << "\n";
    }
    report.summaries.push_back(s);
  }
  report.table = table.str();

  timer.start("write");
  const fs::path& dir = options.out_dir;
  std::vector<std::string> outputs;
  {
    std::vector<std::vector<double>> cols(11);
    for (const auto& r : runs) {
      const double v[] = {r.alpha,      static_cast<double>(r.seed),
                          r.U_hat,      r.L_hat,
                          r.alpha_tilde, r.epsilon,
                          r.l2_tilde,   r.l2_corrected,
                          r.near_tilde, r.near_corrected,
                          r.sup_rho_tilde};
      for (std::size_t k = 0; k < cols.size(); ++k) cols[k].push_back(v[k]);
    }
    write_csv(dir / "runs.csv",
              {"alpha", "seed", "U_hat", "L_hat", "alpha_tilde", "epsilon", "l2_tilde", "l2_corrected", "near_tilde",
               "near_corrected", "sup_rho_tilde"},
              cols);
    outputs.push_back("runs.csv");
  }
  {
    std::vector<std::vector<double>> cols(10);
    for (const auto& s : report.summaries) {
      const double v[] = {s.alpha,
                          static_cast<double>(s.seeds),
                          s.median_alpha_tilde,
                          s.median_l2_tilde,
                          s.median_l2_corrected,
                          s.median_near_reduction,
                          s.median_sup_rho_tilde,
                          s.pass_alpha ? 1.0 : 0.0,
                          s.pass_l2 ? 1.0 : 0.0,
                          s.pass_near ? 1.0 : 0.0};
      for (std::size_t k = 0; k < cols.size(); ++k) cols[k].push_back(v[k]);
    }
    write_csv(dir / "summary.csv",
              {"alpha", "seeds", "median_alpha_tilde", "median_l2_tilde", "median_l2_corrected",
               "median_near_reduction", "median_sup_rho_tilde", "pass_alpha", "pass_l2", "pass_near"},
              cols);
    outputs.push_back("summary.csv");
  }
  write_file_atomic(dir / "summary.txt", report.table);
  outputs.push_back("summary.txt");

  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const SpectralEstimate& est = typical[k];
    const std::string tag = no_jumps ? "nojump" : "alpha_" + alpha_tag(alphas[k]);
    RunConfig c = base;
    if (!no_jumps) c.model.jumps.index = alphas[k];
    const auto truth = rho_from_nu(jump_measure(c.build_model()), x_grid).values;
    write_csv(dir / ("fig2_" + tag + ".csv"), {"x", "rho_true", "rho_tilde"}, {x_grid, truth, est.rho_tilde});
    write_csv(dir / ("fig3_" + tag + ".csv"), {"a", "objective"}, {est.index.a_grid, est.index.objective});
    write_csv(dir / ("fig4_" + tag + ".csv"), {"x", "rho_true", "rho_corrected"},
              {x_grid, truth, est.correction.values});
    outputs.insert(outputs.end(), {"fig2_" + tag + ".csv", "fig3_" + tag + ".csv", "fig4_" + tag + ".csv"});
    if (base.output.svg) {
      write_svg_plot(dir / ("fig2_" + tag + ".svg"), "rho, " + tag, x_grid,
                     {{"true", truth, false, "red"}, {"estimate", est.rho_tilde, true, "black"}});
      write_svg_plot(dir / ("fig3_" + tag + ".svg"), "O(a), " + tag, est.index.a_grid,
                     {{"O(a)", est.index.objective, false, "black"}});
      write_svg_plot(dir / ("fig4_" + tag + ".svg"), "corrected rho, " + tag, x_grid,
                     {{"true", truth, false, "red"}, {"corrected", est.correction.values, true, "black"}});
      outputs.insert(outputs.end(), {"fig2_" + tag + ".svg", "fig3_" + tag + ".svg", "fig4_" + tag + ".svg"});
    }
  }

  json m;
  m["code_version"] = code_version();
  m["command"] = "replicate-paper";
  m["config"] = base.echo();
  m["limit_mode"] = to_string(estimator.limit_mode);
  m["alphas"] = alphas;
  m["seed_count"] = seed_count;
  m["first_seed"] = base.seed;
  m["outputs"] = hashes(dir, outputs);
  json summaries = json::array();
  for (const auto& s : report.summaries) {
    summaries.push_back({{"alpha", s.alpha},
                         {"seeds", s.seeds},
                         {"median_alpha_tilde", s.median_alpha_tilde},
                         {"median_l2_tilde", s.median_l2_tilde},
                         {"median_l2_corrected", s.median_l2_corrected},
                         {"median_near_reduction", s.median_near_reduction},
                         {"median_sup_rho_tilde", s.median_sup_rho_tilde},
                         {"pass_alpha", s.pass_alpha},
                         {"pass_l2", s.pass_l2},
                         {"pass_near", s.pass_near}});
  }
  m["summary"] = summaries;
  write_json(dir / "manifest.json", m);
  timer.stop();
  write_json(dir / "timings.json", timer.timings());
  return report;
}

fs::path cmd_oracle(const RunConfig& config, const std::string& what, const CommandOptions& options) {
  config.validate();
  const Model model = config.build_model();
  const fs::path path = options.out_dir / ("oracle_" + what + ".csv");
  if (what == "rho") {
    const auto x = config.spectral.estimator.x_grid();
    write_csv(path, {"x", "rho"}, {x, rho_from_nu(jump_measure(model), x).values});
    return path;
  }
  std::vector<double> u;
  const auto n = static_cast<std::size_t>(std::llround((config.oracle.u_max - config.oracle.u_min) / config.oracle.u_step));
  for (std::size_t k = 0; k <= n; ++k) u.push_back(config.oracle.u_min + config.oracle.u_step * static_cast<double>(k));
  std::vector<double> re(u.size()), im(u.size());
  if (what == "cf") {
    const auto chars = characteristics(model);
    const Vec x0 = initial_state(model);
    const int k = log_price_component(model);
    parallel_for(u.size(), options.threads, [&](std::size_t i) {
      Vec uu = Vec::Zero(chars.d);
      uu(k) = u[i];
      const cplx v = cond_cf(uu, config.oracle.s, x0, chars);
      re[i] = v.real();
      im[i] = v.imag();
    });
    write_csv(path, {"u", "re_phi", "im_phi"}, {u, re, im});
    return path;
  }
  if (what == "exponent") {
    const LevyMeasureSpec& jumps = jump_measure(model);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const cplx v = levy_exponent(jumps, u[i]);
      re[i] = v.real();
      im[i] = v.imag();
    }
    write_csv(path, {"u", "re_exponent", "im_exponent"}, {u, re, im});
    return path;
  }
  throw ValidationError("oracle target must be cf, rho or exponent, got '" + what + "'");
}

void write_svg_plot(const fs::path& path, const std::string& title, const std::vector<double>& x,
                    const std::vector<PlotSeries>& series) {
  constexpr double W = 640.0, H = 400.0, L = 60.0, R = 20.0, T = 40.0, B = 40.0;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (double v : x) {
    if (!std::isfinite(v)) continue;
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  for (const auto& s : series) {
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  const auto px = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - R); };
  const auto py = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" font-family=\"sans-serif\" "
         "font-size=\"12\">\n";
  out << "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  out << "<text x=\"320\" y=\"24\" text-anchor=\"middle\">" << title << "</text>\n";
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"gray\"/>\n";
  out << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\">" << fixed(xmin, 2) << "</text>\n";
  out << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\">" << fixed(xmax, 2)
      << "</text>\n";
  out << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" text-anchor=\"end\">" << fixed(ymin, 3) << "</text>\n";
  out << "<text x=\"" << L - 4 << "\" y=\"" << T + 10 << "\" text-anchor=\"end\">" << fixed(ymax, 3) << "</text>\n";
  double legend_y = T + 16;
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"";
    if (s.dashed) out << " stroke-dasharray=\"6,4\"";
    out << " points=\"";
    for (std::size_t i = 0; i < x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(x[i]) || !std::isfinite(s.y[i])) continue;
      out << fixed(px(x[i]), 2) << "," << fixed(py(s.y[i]), 2) << " ";
    }
    out << "\"/>\n";
    out << "<line x1=\"" << W - R - 120 << "\" y1=\"" << legend_y << "\" x2=\"" << W - R - 90 << "\" y2=\"" << legend_y
        << "\" stroke=\"" << s.color << "\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
    out << "<text x=\"" << W - R - 84 << "\" y=\"" << legend_y + 4 << "\">" << s.name << "</text>\n";
    legend_y += 16;
  }
  out << "</svg>\n";
  write_file_atomic(path, out.str());
}

}  // namespace ajl
