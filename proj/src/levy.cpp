#include "ajl/levy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ajl/error.hpp"
#include "ajl/quadrature.hpp"

namespace ajl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * kPi); }
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

/// E[χ(J)] for J ~ N(m, s²): E[clamp(J, -1, 1)].
double gaussian_mean_chi(const GaussianJumps& g) {
  const double s = std::sqrt(g.variance);
  if (s == 0.0) return chi_scalar(g.mean);
  const double a = (-1.0 - g.mean) / s;
  const double b = (1.0 - g.mean) / s;
  const double inside = g.mean * (normal_cdf(b) - normal_cdf(a)) + s * (normal_pdf(a) - normal_pdf(b));
  return -normal_cdf(a) + (1.0 - normal_cdf(b)) + inside;
}

double gaussian_density(const GaussianJumps& g, double x) {
  const double s = std::sqrt(g.variance);
  return normal_pdf((x - g.mean) / s) / s;
}

/// cos(y) - 1 without cancellation.
double cos_minus_one(double y) {
  const double h = std::sin(0.5 * y);
  return -2.0 * h * h;
}

/// sin(y) - y without cancellation.
double sin_minus_id(double y) {
  if (std::abs(y) < 1e-2) {
    const double y2 = y * y;
    return -y * y2 / 6.0 * (1.0 - y2 / 20.0 * (1.0 - y2 / 42.0));
  }
  return std::sin(y) - y;
}

/// Sum of trapezoid-weighted g(x_i)·value_i over a table.
template <class F>
auto table_sum(const TabulatedDensity& t, F&& g) {
  const auto w = t.trapezoid_weights();
  decltype(g(0.0)) acc{};
  for (std::size_t i = 0; i < t.x.size(); ++i) acc += w[i] * t.value[i] * g(t.x[i]);
  return acc;
}

/// ∫_0^1 g over dyadic panels [2^{-k-1}, 2^{-k}], so integrable power-law
/// behaviour at zero never lands inside a single Gauss–Kronrod panel.
double integrate_unit(const std::function<double(double)>& g) {
  double total = 0.0, err_total = 0.0, l1_total = 0.0;
  int quiet = 0;
  for (int k = 0; k < 400 && quiet < 3; ++k) {
    const double hi = std::ldexp(1.0, -k);
    double err = 0.0, l1 = 0.0;
    // Shallow recursion: on tiny panels the error estimate stalls at roundoff.
    const double part = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.5 * hi, hi, 8, 1e-13, &err, &l1);
    total += part;
    err_total += err;
    l1_total += l1;
    quiet = std::abs(part) <= 1e-17 * std::abs(total) ? quiet + 1 : 0;
  }
  if (!std::isfinite(total) || err_total > 1e-10 * std::max(l1_total, 1e-300))
    throw NumericalError("near-zero Lévy integral did not converge");
  return total;
}

/// ∫_0^∞ (e^{iux} - 1 - iuχ(x)) f(x) dx for a density f on the half-line.
cplx half_line_exponent(const std::function<double(double)>& f, double u) {
  if (u == 0.0) return {0.0, 0.0};
  const double re_inner = integrate_unit([&](double x) { return cos_minus_one(u * x) * f(x); });
  const double im_inner = integrate_unit([&](double x) { return sin_minus_id(u * x) * f(x); });
  const double tail_mass = quad::integrate_to_infinity(f, 1.0);
  const cplx tail = quad::fourier_tail(f, 1.0, u);
  return cplx{re_inner, im_inner} + tail - tail_mass * cplx{1.0, u};
}

/// ∫_0^∞ e^{iuz} 2(1 - sin z / z) f(z) dz for a Lévy density f on the half-line.
/// The tail splits the oscillating sinc factor off into two Fourier integrals of
/// the monotone f(z)/z at frequencies u ± 1.
cplx half_line_rho_fourier(const std::function<double(double)>& f, double u) {
  auto rho = [&](double x) { return 2.0 * one_minus_sinc(x) * f(x); };
  const double re = integrate_unit([&](double x) { return std::cos(u * x) * rho(x); });
  const double im = integrate_unit([&](double x) { return std::sin(u * x) * rho(x); });
  auto over_x = [&](double x) { return f(x) / x; };
  // sin(x)e^{iux} = (e^{i(u+1)x} - e^{i(u-1)x}) / 2i
  const cplx sinc_part = (quad::fourier_tail(over_x, 1.0, u + 1.0) - quad::fourier_tail(over_x, 1.0, u - 1.0)) / (2.0 * kI);
  return cplx{re, im} + 2.0 * quad::fourier_tail(f, 1.0, u) - 2.0 * sinc_part;
}

}  // namespace

// ---------------------------------------------------------------------------
// TabulatedDensity

void TabulatedDensity::validate() const {
  if (x.size() < 2 || x.size() != value.size())
    throw ValidationError("tabulated density needs >= 2 points and matching columns");
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1])) throw ValidationError("tabulated density grid must be strictly increasing");
  for (double v : value)
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("tabulated density values must be finite and >= 0");
}

double TabulatedDensity::operator()(double at) const {
  if (x.empty() || at < x.front() || at > x.back()) return 0.0;
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  if (it == x.end()) return value.back();
  const std::size_t hi = static_cast<std::size_t>(it - x.begin());
  const std::size_t lo = hi - 1;
  const double t = (at - x[lo]) / (x[hi] - x[lo]);
  return (1.0 - t) * value[lo] + t * value[hi];
}

std::vector<double> TabulatedDensity::trapezoid_weights() const {
  std::vector<double> w(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i) {
    const double h = 0.5 * (x[i] - x[i - 1]);
    w[i - 1] += h;
    w[i] += h;
  }
  return w;
}

TabulatedDensity load_tabulated_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  TabulatedDensity table;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double a = 0.0;
    double b = 0.0;
    if (!(fields >> a >> b)) throw ValidationError("malformed density row: " + line);
    table.x.push_back(a);
    table.value.push_back(b);
  }
  table.validate();
  return table;
}

void save_tabulated_csv(const TabulatedDensity& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(17);
  for (std::size_t i = 0; i < table.x.size(); ++i) out << table.x[i] << ',' << table.value[i] << '\n';
}

// ---------------------------------------------------------------------------
// LevyMeasureSpec

LevyMeasureSpec::LevyMeasureSpec(Kind kind) : kind_(std::move(kind)) {
  std::visit(overloaded{
                 [](const NoJumps&) {},
                 [this](const SymmetricStable& s) {
                   if (!(s.scale > 0.0)) throw ValidationError("stable scale must be > 0");
                   if (!(s.index > 0.0 && s.index < 1.0))
                     throw ValidationError("stable index must lie in (0, 1)");
                   eta_ = s.scale * stable_integral_constant(s.index);
                 },
                 [](const CompoundPoisson& c) {
                   if (!(c.rate > 0.0)) throw ValidationError("compound Poisson rate must be > 0");
                   std::visit(overloaded{[](const GaussianJumps& g) {
                                           if (!(g.variance > 0.0))
                                             throw ValidationError("jump variance must be > 0");
                                         },
                                         [](const TabulatedDensity& t) { t.validate(); }},
                              c.law);
                 },
                 [](const TabulatedDensity& t) { t.validate(); },
             },
             kind_);
}

LevyMeasureSpec LevyMeasureSpec::symmetric_stable(double scale, double index) {
  return LevyMeasureSpec{SymmetricStable{scale, index}};
}

LevyMeasureSpec LevyMeasureSpec::compound_poisson_gaussian(double rate, double mean, double variance) {
  return LevyMeasureSpec{CompoundPoisson{rate, GaussianJumps{mean, variance}}};
}

LevyMeasureSpec LevyMeasureSpec::compound_poisson_tabulated(double rate, TabulatedDensity law) {
  return LevyMeasureSpec{CompoundPoisson{rate, std::move(law)}};
}

LevyMeasureSpec LevyMeasureSpec::tabulated(TabulatedDensity density) {
  return LevyMeasureSpec{std::move(density)};
}

std::string LevyMeasureSpec::kind_name() const {
  return std::visit(overloaded{[](const NoJumps&) { return std::string("none"); },
                               [](const SymmetricStable&) { return std::string("stable"); },
                               [](const CompoundPoisson& c) {
                                 return std::string(std::holds_alternative<GaussianJumps>(c.law)
                                                        ? "cp-gaussian"
                                                        : "cp-tabulated");
                               },
                               [](const TabulatedDensity&) { return std::string("tabulated"); }},
                    kind_);
}

bool LevyMeasureSpec::is_symmetric() const {
  return std::visit(overloaded{[](const NoJumps&) { return true; },
                               [](const SymmetricStable&) { return true; },
                               [](const CompoundPoisson& c) {
                                 if (const auto* g = std::get_if<GaussianJumps>(&c.law)) return g->mean == 0.0;
                                 return false;
                               },
                               [](const TabulatedDensity&) { return false; }},
                    kind_);
}

double LevyMeasureSpec::density(double x) const {
  return std::visit(
      overloaded{[](const NoJumps&) { return 0.0; },
                 [x](const SymmetricStable& s) {
                   if (x == 0.0) return std::numeric_limits<double>::infinity();
                   return s.scale * std::pow(std::abs(x), -1.0 - s.index);
                 },
                 [x](const CompoundPoisson& c) {
                   return c.rate * std::visit(overloaded{[x](const GaussianJumps& g) { return gaussian_density(g, x); },
                                                         [x](const TabulatedDensity& t) { return t(x); }},
                                              c.law);
                 },
                 [x](const TabulatedDensity& t) { return t(x); }},
      kind_);
}

double LevyMeasureSpec::moment_sup() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (const auto* s = std::get_if<SymmetricStable>(&kind_)) return s->index;
  return inf;
}

LevyMeasureSpec LevyMeasureSpec::scaled(double factor) const {
  if (!(factor > 0.0)) throw ValidationError("scale factor must be > 0");
  return std::visit(overloaded{[](const NoJumps&) { return LevyMeasureSpec{}; },
                               [factor](SymmetricStable s) {
                                 s.scale *= factor;
                                 return LevyMeasureSpec{s};
                               },
                               [factor](CompoundPoisson c) {
                                 c.rate *= factor;
                                 return LevyMeasureSpec{std::move(c)};
                               },
                               [factor](TabulatedDensity t) {
                                 for (double& v : t.value) v *= factor;
                                 return LevyMeasureSpec{std::move(t)};
                               }},
                    kind_);
}

// ---------------------------------------------------------------------------

double chi_scalar(double x) {
  if (x == 0.0) return 0.0;
  return std::min(1.0, std::abs(x)) * (x > 0.0 ? 1.0 : -1.0);
}

double compensator_drift(const LevyMeasureSpec& spec) {
  if (spec.is_symmetric()) return 0.0;
  if (const auto* c = std::get_if<CompoundPoisson>(&spec.kind())) {
    if (const auto* g = std::get_if<GaussianJumps>(&c->law)) return c->rate * gaussian_mean_chi(*g);
    return c->rate * table_sum(std::get<TabulatedDensity>(c->law), [](double x) { return chi_scalar(x); });
  }
  return table_sum(std::get<TabulatedDensity>(spec.kind()), [](double x) { return chi_scalar(x); });
}

double one_minus_sinc(double x) {
  if (std::abs(x) < 1.0) {
    // Σ_{k≥1} (-1)^{k+1} x^{2k} / (2k+1)!, cancellation-free below 1.
    const double x2 = x * x;
    double term = x2 / 6.0;
    double sum = term;
    for (int k = 2; k < 12; ++k) {
      term *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
      sum += term;
    }
    return sum;
  }
  return 1.0 - std::sin(x) / x;
}

double stable_integral_constant(double index) {
  if (!(index > 0.0 && index < 1.0)) throw ValidationError("stable index must lie in (0, 1)");
  static std::mutex mutex;
  static std::map<double, double> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(index); it != cache.end()) return it->second;
  }
  // ∫_0^1 (1 - cos y) y^{-1-α} dy + ∫_1^∞ y^{-1-α} dy - ∫_1^∞ cos(y) y^{-1-α} dy
  // Head by its power series Σ (-1)^{k+1} / ((2k)! (2k - α)).
  double head = 0.0;
  double factorial = 1.0;
  for (int k = 1; k <= 12; ++k) {
    factorial *= (2.0 * k - 1.0) * (2.0 * k);
    head += (k % 2 ? 1.0 : -1.0) / (factorial * (2.0 * k - index));
  }
  const double power_tail = 1.0 / index;
  const double cos_tail =
      quad::fourier_tail([index](double y) { return std::pow(y, -1.0 - index); }, 1.0, 1.0).real();
  const double value = 2.0 * (head + power_tail - cos_tail);
  std::lock_guard lock(mutex);
  cache.emplace(index, value);
  return value;
}

cplx levy_exponent(const LevyMeasureSpec& spec, double u) {
  if (u == 0.0) return {0.0, 0.0};
  return std::visit(
      overloaded{
          [](const NoJumps&) { return cplx{0.0, 0.0}; },
          [&](const SymmetricStable& s) { return cplx{-spec.stable_eta() * std::pow(std::abs(u), s.index), 0.0}; },
          [u](const CompoundPoisson& c) {
            return std::visit(
                overloaded{[&](const GaussianJumps& g) {
                             const cplx cf = std::exp(cplx{-0.5 * g.variance * u * u, g.mean * u});
                             return c.rate * (cf - 1.0) - kI * u * c.rate * gaussian_mean_chi(g);
                           },
                           [&](const TabulatedDensity& t) {
                             return c.rate * table_sum(t, [u](double x) {
                                      return std::exp(cplx{0.0, u * x}) - 1.0 - kI * u * chi_scalar(x);
                                    });
                           }},
                c.law);
          },
          [u](const TabulatedDensity& t) {
            return table_sum(t, [u](double x) { return std::exp(cplx{0.0, u * x}) - 1.0 - kI * u * chi_scalar(x); });
          }},
      spec.kind());
}

namespace {
bool effectively_imaginary(cplx z) { return std::abs(z.real()) <= 1e-14 * std::max(1.0, std::abs(z)); }
}  // namespace

cplx levy_exponent(const LevyMeasureSpec& spec, cplx z) {
  if (effectively_imaginary(z)) return levy_exponent(spec, z.imag());
  return std::visit(
      overloaded{
          [](const NoJumps&) { return cplx{0.0, 0.0}; },
          [z](const SymmetricStable&) -> cplx {
            throw NumericalError("stable jump integral diverges for Re z = " + std::to_string(z.real()));
          },
          [z](const CompoundPoisson& c) {
            return std::visit(overloaded{[&](const GaussianJumps& g) {
                                           const cplx mgf = std::exp(g.mean * z + 0.5 * g.variance * z * z);
                                           return c.rate * (mgf - 1.0) - z * c.rate * gaussian_mean_chi(g);
                                         },
                                         [&](const TabulatedDensity& t) {
                                           return c.rate * table_sum(t, [z](double x) {
                                                    return std::exp(z * x) - 1.0 - z * chi_scalar(x);
                                                  });
                                         }},
                              c.law);
          },
          [z](const TabulatedDensity& t) {
            return table_sum(t, [z](double x) { return std::exp(z * x) - 1.0 - z * chi_scalar(x); });
          }},
      spec.kind());
}

cplx levy_exponent_derivative(const LevyMeasureSpec& spec, cplx z) {
  return std::visit(
      overloaded{
          [](const NoJumps&) { return cplx{0.0, 0.0}; },
          [&](const SymmetricStable& s) -> cplx {
            if (!effectively_imaginary(z))
              throw NumericalError("stable jump integral diverges for Re z = " + std::to_string(z.real()));
            const double u = z.imag();
            if (u == 0.0) throw NumericalError("stable exponent is not differentiable at 0");
            const double dtheta = -spec.stable_eta() * s.index * std::pow(std::abs(u), s.index - 1.0) *
                                  (u > 0.0 ? 1.0 : -1.0);
            return -kI * dtheta;
          },
          [z](const CompoundPoisson& c) {
            return std::visit(overloaded{[&](const GaussianJumps& g) {
                                           const cplx mgf = std::exp(g.mean * z + 0.5 * g.variance * z * z);
                                           return c.rate * ((g.mean + g.variance * z) * mgf - gaussian_mean_chi(g));
                                         },
                                         [&](const TabulatedDensity& t) {
                                           return c.rate * table_sum(t, [z](double x) {
                                                    return x * std::exp(z * x) - chi_scalar(x);
                                                  });
                                         }},
                              c.law);
          },
          [z](const TabulatedDensity& t) {
            return table_sum(t, [z](double x) { return x * std::exp(z * x) - chi_scalar(x); });
          }},
      spec.kind());
}

cplx levy_exponent_by_quadrature(const LevyMeasureSpec& spec, double u) {
  if (spec.is_none() || u == 0.0) return {0.0, 0.0};
  auto right = [&spec](double x) { return x == 0.0 ? 0.0 : spec.density(x); };
  auto left = [&spec](double x) { return x == 0.0 ? 0.0 : spec.density(-x); };
  // Mirror the left half: ∫_0^∞ (e^{-iux} - 1 + iuχ(x)) ν(-x) dx.
  return half_line_exponent(right, u) + half_line_exponent(left, -u);
}

// ---------------------------------------------------------------------------

double TransformedDensity::mass() const {
  double total = 0.0;
  for (std::size_t i = 1; i < x_grid.size(); ++i)
    total += 0.5 * (x_grid[i] - x_grid[i - 1]) * (values[i] + values[i - 1]);
  return total;
}

double rho_from_nu(const LevyMeasureSpec& spec, double x) {
  if (x == 0.0 || spec.is_none()) return 0.0;
  return 2.0 * one_minus_sinc(x) * spec.density(x);
}

TransformedDensity rho_from_nu(const LevyMeasureSpec& spec, std::span<const double> x_grid) {
  TransformedDensity out;
  out.x_grid.assign(x_grid.begin(), x_grid.end());
  out.values.reserve(x_grid.size());
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    if (i > 0 && !(x_grid[i] > x_grid[i - 1])) throw ValidationError("x grid must be strictly increasing");
    out.values.push_back(rho_from_nu(spec, x_grid[i]));
  }
  return out;
}

double rho_from_nu_product(const LevyMeasureSpec& first, const LevyMeasureSpec& second, double x1, double x2) {
  if (x1 == 0.0 || x2 == 0.0) return 0.0;
  return 4.0 * one_minus_sinc(x1) * one_minus_sinc(x2) * first.density(x1) * second.density(x2);
}

cplx fourier_of_rho(const LevyMeasureSpec& spec, double u) {
  if (spec.is_none()) return {0.0, 0.0};
  auto table_route = [u](const TabulatedDensity& t, double rate) {
    return rate * table_sum(t, [u](double x) { return 2.0 * one_minus_sinc(x) * std::exp(cplx{0.0, u * x}); });
  };
  if (const auto* t = std::get_if<TabulatedDensity>(&spec.kind())) return table_route(*t, 1.0);
  if (const auto* c = std::get_if<CompoundPoisson>(&spec.kind()))
    if (const auto* t = std::get_if<TabulatedDensity>(&c->law)) return table_route(*t, c->rate);

  auto right = [&spec](double z) { return spec.density(z); };
  auto left = [&spec](double z) { return spec.density(-z); };
  return half_line_rho_fourier(right, u) + half_line_rho_fourier(left, -u);
}

}  // namespace ajl
