#include "ajl/config.hpp"

#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ajl/error.hpp"
#include "ajl/io.hpp"

namespace ajl {

namespace pt = boost::property_tree;

LevyMeasureSpec JumpSection::spec() const {
  if (kind == "none") return LevyMeasureSpec::none();
  if (kind == "stable") return LevyMeasureSpec::symmetric_stable(scale, index);
  if (kind == "cp-gaussian") return LevyMeasureSpec::compound_poisson_gaussian(rate, mean, variance);
  if (kind == "cp-tabulated") return LevyMeasureSpec::compound_poisson_tabulated(rate, load_tabulated_csv(table));
  if (kind == "tabulated") return LevyMeasureSpec::tabulated(load_tabulated_csv(table));
  throw ValidationError("unknown jump kind '" + kind + "'");
}

Model RunConfig::build_model() const {
  if (model.kind == "bates") {
    BatesParams p = model.bates;
    p.jumps = model.jumps.spec();
    p.validate();
    return p;
  }
  if (model.kind == "brownian") {
    BrownianParams p = model.brownian;
    p.jumps = model.jumps.spec();
    p.validate();
    return p;
  }
  throw ValidationError("model.kind must be 'bates' or 'brownian'");
}

Design RunConfig::build_design() const {
  if (design.kind == "iid-pairs") {
    if (!(design.Delta > 0.0)) throw ValidationError("design.Delta must be > 0");
    return IidPairs{design.Delta};
  }
  if (design.kind == "random-design") {
    if (!(design.T > 0.0)) throw ValidationError("design.T must be > 0");
    return RandomDesign{design.T};
  }
  throw ValidationError("design.kind must be 'iid-pairs' or 'random-design'");
}

SmootherConfig RunConfig::smoother_config(std::size_t N) const {
  SmootherConfig c;
  c.s = smoother.s;
  c.r = smoother.r;
  c.h = smoother.h ? *smoother.h : bandwidth_rule(N, smoother.r);
  c.kernel = Kernel::by_name(smoother.kernel);
  c.gamma0 = smoother.gamma0;
  return c;
}

std::string RunConfig::resolved_route() const {
  if (spectral.route == "auto") return design.kind == "iid-pairs" ? "finite-difference" : "smoother";
  return spectral.route;
}

double RunConfig::resolved_Lambda() const {
  if (spectral.Lambda) return *spectral.Lambda;
  const double horizon = design.kind == "iid-pairs" ? design.Delta : design.T;
  const auto bounds = submatrix_bounds(characteristics(build_model()), horizon, spectral.estimator.kappa);
  if (!(bounds.Lambda > 0.0))
    throw ValidationError("the class bound gives Lambda = 0 for this model; set spectral.Lambda explicitly");
  return bounds.Lambda;
}

void RunConfig::validate() const {
  if (schema != kConfigSchema) throw ValidationError("unsupported config schema " + std::to_string(schema));
  if (model.kind.empty()) throw ValidationError("model.kind is required");
  if (design.N == 0) throw ValidationError("design.N is required and must be >= 1");
  (void)build_model();
  (void)build_design();
  spectral.estimator.validate();
  if (smoother.h && !(*smoother.h > 0.0)) throw ValidationError("smoother.h must be > 0");
  if (!(smoother.r > 0.0)) throw ValidationError("smoother.r must be > 0");
  if (smoother.gamma0 && !(*smoother.gamma0 > 0.0)) throw ValidationError("smoother.gamma0 must be > 0");
  if (!(smoother.s >= 0.0)) throw ValidationError("smoother.s must be >= 0");
  (void)Kernel::by_name(smoother.kernel);
  const std::string route = resolved_route();
  if (route != "finite-difference" && route != "smoother")
    throw ValidationError("spectral.route must be auto, finite-difference or smoother");
  if (route == "finite-difference" && design.kind != "iid-pairs")
    throw ValidationError("the finite-difference route needs an iid-pairs design");
  if (route == "smoother" && design.kind != "random-design")
    throw ValidationError("the smoother route needs a random design");
  if (spectral.Lambda && !(*spectral.Lambda > 0.0)) throw ValidationError("spectral.Lambda must be > 0");
  if (!(spectral.profile_safety > 0.0)) throw ValidationError("spectral.profile_safety must be > 0");
  if (!(oracle.u_step > 0.0) || !(oracle.u_max > oracle.u_min)) throw ValidationError("oracle u grid is empty");
  if (output.directory.empty()) throw ValidationError("output.directory must be nonempty");
}

namespace {

nlohmann::json optional_number(const std::optional<double>& v, const char* fallback) {
  return v ? nlohmann::json(*v) : nlohmann::json(fallback);
}

}  // namespace

nlohmann::json RunConfig::echo() const {
  using nlohmann::json;
  const EstimatorConfig& e = spectral.estimator;
  json j;
  j["schema"] = schema;
  j["seed"] = seed;
  j["model"] = {{"kind", model.kind}};
  if (model.kind == "bates") {
    const auto& b = model.bates;
    j["model"].update({{"lambda", b.lambda}, {"theta", b.theta}, {"zeta", b.zeta}, {"v0", b.v0}, {"x0", b.x0}});
  } else {
    const auto& b = model.brownian;
    j["model"].update({{"mu", b.mu}, {"sigma", b.sigma}, {"x0", b.x0}});
  }
  j["jumps"] = {{"kind", model.jumps.kind},   {"scale", model.jumps.scale},     {"index", model.jumps.index},
                {"rate", model.jumps.rate},   {"mean", model.jumps.mean},       {"variance", model.jumps.variance},
                {"table", model.jumps.table}};
  j["design"] = {{"kind", design.kind}, {"N", design.N}, {"Delta", design.Delta}, {"T", design.T}};
  j["smoother"] = {{"h", optional_number(smoother.h, "rule")},
                   {"r", smoother.r},
                   {"kernel", smoother.kernel},
                   {"gamma0", optional_number(smoother.gamma0, "auto")},
                   {"s", smoother.s}};
  j["spectral"] = {{"U", optional_number(e.U, "auto")},
                   {"U_max", e.U_max},
                   {"kappa", e.kappa},
                   {"pi_reg", e.pi_reg},
                   {"u_grid_step", e.u_grid_step},
                   {"transform_nodes", e.transform_nodes},
                   {"transform_panels", e.transform_panels},
                   {"exact_transform", e.exact_transform},
                   {"x_min", e.x_min},
                   {"x_max", e.x_max},
                   {"x_step", e.x_step},
                   {"limit_mode", to_string(e.limit_mode)},
                   {"t0_mode", to_string(e.t0_mode)},
                   {"U_search_points", e.U_search_points},
                   {"epsilon_candidates", e.epsilon_candidates},
                   {"epsilon_tolerance", e.epsilon_tolerance},
                   {"fit_index", e.fit_index},
                   {"Lambda", optional_number(spectral.Lambda, "auto")},
                   {"profile_safety", spectral.profile_safety},
                   {"route", spectral.route}};
  j["oracle"] = {{"s", oracle.s}, {"u_min", oracle.u_min}, {"u_max", oracle.u_max}, {"u_step", oracle.u_step}};
  j["output"] = {{"directory", output.directory}, {"svg", output.svg}};
  return j;
}

namespace {

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  const pt::ptree* section(const std::string& name) {
    seen_sections_.insert(name);
    const auto it = tree_.find(name);
    return it == tree_.not_found() ? nullptr : &it->second;
  }

  void finish_section(const std::string& name, const pt::ptree* sec, const std::set<std::string>& used) {
    if (!sec) return;
    for (const auto& [key, value] : *sec) {
      if (!used.count(key)) throw ValidationError("unknown key '" + name + "." + key + "'");
    }
  }

  void check_top_level(const std::set<std::string>& top_keys) {
    for (const auto& [key, value] : tree_) {
      const bool is_section = !value.empty();
      if (is_section && !seen_sections_.count(key)) throw ValidationError("unknown section [" + key + "]");
      if (!is_section && !top_keys.count(key)) throw ValidationError("unknown top-level key '" + key + "'");
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> seen_sections_;
};

double to_number(const std::string& where, const std::string& text) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ValidationError("'" + where + "' must be a number, got '" + text + "'");
  }
}

bool to_bool(const std::string& where, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ValidationError("'" + where + "' must be true or false, got '" + text + "'");
}

struct SectionReader {
  std::string name;
  const pt::ptree* sec;
  std::set<std::string> used;

  std::optional<std::string> raw(const std::string& key) {
    used.insert(key);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return *v;
  }
  void number(const std::string& key, double& out) {
    if (auto v = raw(key)) out = to_number(name + "." + key, *v);
  }
  void integer(const std::string& key, int& out) {
    if (auto v = raw(key)) out = static_cast<int>(to_number(name + "." + key, *v));
  }
  void text(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }
  void flag(const std::string& key, bool& out) {
    if (auto v = raw(key)) out = to_bool(name + "." + key, *v);
  }
  /// A number or the given keyword (→ nullopt).
  void number_or(const std::string& key, const std::string& keyword, std::optional<double>& out) {
    if (auto v = raw(key)) {
      if (*v == keyword) out.reset();
      else out = to_number(name + "." + key, *v);
    }
  }
};

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  RunConfig c;
  Reader reader(tree);
  const auto schema = tree.get_optional<std::string>("schema");
  if (!schema) throw ValidationError("config must declare 'schema = 1'");
  c.schema = static_cast<int>(to_number("schema", *schema));
  if (c.schema != kConfigSchema) throw ValidationError("unsupported config schema " + *schema);
  if (const auto seed = tree.get_optional<std::string>("seed")) {
    try {
      c.seed = std::stoull(*seed);
    } catch (const std::exception&) {
      throw ValidationError("seed must be an unsigned 64-bit integer");
    }
  }
  SectionReader m{"model", reader.section("model"), {}};
  m.text("kind", c.model.kind);
  m.number("lambda", c.model.bates.lambda);
  m.number("theta", c.model.bates.theta);
  m.number("zeta", c.model.bates.zeta);
  m.number("v0", c.model.bates.v0);
  m.number("mu", c.model.brownian.mu);
  m.number("sigma", c.model.brownian.sigma);
  double x0 = 0.0;
  m.number("x0", x0);
  c.model.bates.x0 = x0;
  c.model.brownian.x0 = x0;
  reader.finish_section("model", m.sec, m.used);

  SectionReader j{"jumps", reader.section("jumps"), {}};
  j.text("kind", c.model.jumps.kind);
  j.number("scale", c.model.jumps.scale);
  j.number("index", c.model.jumps.index);
  j.number("rate", c.model.jumps.rate);
  j.number("mean", c.model.jumps.mean);
  j.number("variance", c.model.jumps.variance);
  j.text("table", c.model.jumps.table);
  reader.finish_section("jumps", j.sec, j.used);

  SectionReader d{"design", reader.section("design"), {}};
  d.text("kind", c.design.kind);
  double N = 0.0;
  d.number("N", N);
  if (N < 0.0 || N != std::floor(N)) throw ValidationError("design.N must be a nonnegative integer");
  c.design.N = static_cast<std::size_t>(N);
  d.number("Delta", c.design.Delta);
  d.number("T", c.design.T);
  reader.finish_section("design", d.sec, d.used);

  SectionReader s{"smoother", reader.section("smoother"), {}};
  s.number_or("h", "rule", c.smoother.h);
  s.number("r", c.smoother.r);
  s.text("kernel", c.smoother.kernel);
  s.number_or("gamma0", "auto", c.smoother.gamma0);
  s.number("s", c.smoother.s);
  reader.finish_section("smoother", s.sec, s.used);

  EstimatorConfig& e = c.spectral.estimator;
  SectionReader sp{"spectral", reader.section("spectral"), {}};
  sp.number_or("U", "auto", e.U);
  sp.number("U_max", e.U_max);
  sp.number("kappa", e.kappa);
  sp.number("pi_reg", e.pi_reg);
  sp.number("u_grid_step", e.u_grid_step);
  sp.integer("transform_nodes", e.transform_nodes);
  sp.integer("transform_panels", e.transform_panels);
  sp.flag("exact_transform", e.exact_transform);
  sp.number("x_min", e.x_min);
  sp.number("x_max", e.x_max);
  sp.number("x_step", e.x_step);
  if (auto v = sp.raw("limit_mode")) e.limit_mode = parse_limit_mode(*v);
  if (auto v = sp.raw("t0_mode")) e.t0_mode = parse_t0_mode(*v);
  sp.integer("U_search_points", e.U_search_points);
  sp.integer("epsilon_candidates", e.epsilon_candidates);
  sp.number("epsilon_tolerance", e.epsilon_tolerance);
  sp.flag("fit_index", e.fit_index);
  sp.number_or("Lambda", "auto", c.spectral.Lambda);
  sp.number("profile_safety", c.spectral.profile_safety);
  sp.text("route", c.spectral.route);
  reader.finish_section("spectral", sp.sec, sp.used);

  SectionReader o{"oracle", reader.section("oracle"), {}};
  o.number("s", c.oracle.s);
  o.number("u_min", c.oracle.u_min);
  o.number("u_max", c.oracle.u_max);
  o.number("u_step", c.oracle.u_step);
  reader.finish_section("oracle", o.sec, o.used);

  SectionReader out{"output", reader.section("output"), {}};
  out.text("directory", c.output.directory);
  out.flag("svg", c.output.svg);
  reader.finish_section("output", out.sec, out.used);
  reader.check_top_level({"schema", "seed"});

  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) { return parse_run_config(read_file(path)); }

RunConfig paper_config(double alpha) {
  RunConfig c;
  c.model.kind = "bates";
  c.model.jumps.kind = "stable";
  c.model.jumps.scale = 1.0;
  c.model.jumps.index = alpha;
  c.design.kind = "iid-pairs";
  c.design.N = 1000;
  c.design.Delta = 0.1;
  c.spectral.estimator.limit_mode = LimitMode::boundary;
  c.output.directory = "replicate";
  return c;
}

}  // namespace ajl
