// Command-line front end: simulate, estimate, replicate-paper, oracle.
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "ajl/error.hpp"
#include "ajl/parallel.hpp"
#include "ajl/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kUnavailable = 3, kIo = 4 };

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int threads = 0;
  bool exact_oracle = false;
  std::string limit_mode;
};

ajl::RunConfig load(const Flags& f, bool required) {
  ajl::RunConfig c;
  if (!f.config.empty()) c = ajl::load_run_config(f.config);
  else if (required) throw ajl::ValidationError("--config is required for this command");
  if (f.seed) c.seed = *f.seed;
  return c;
}

ajl::CommandOptions options(const Flags& f, const ajl::RunConfig& c) {
  ajl::CommandOptions o;
  o.out_dir = f.out.empty() ? std::filesystem::path(c.output.directory) : std::filesystem::path(f.out);
  o.threads = ajl::resolve_threads(f.threads);
  o.exact_oracle = f.exact_oracle;
  if (!f.limit_mode.empty()) o.limit_mode = ajl::parse_limit_mode(f.limit_mode);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonparametric estimation of the transformed Levy density of affine processes"};
  app.require_subcommand(1);
  Flags f;
  const auto common = [&f](CLI::App* sub) {
    sub->add_option("--config", f.config, "INI run configuration");
    sub->add_option("--seed", f.seed, "override the configured seed");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--threads", f.threads, "worker threads (default: AJL_THREADS or 1)");
    sub->add_option("--limit-mode", f.limit_mode, "kernel or boundary")->check(CLI::IsMember({"kernel", "boundary"}));
  };

  auto* simulate = app.add_subcommand("simulate", "simulate an observation set");
  common(simulate);

  std::string observations;
  auto* estimate = app.add_subcommand("estimate", "estimate rho from an observation set");
  common(estimate);
  estimate->add_option("observations", observations, "observation CSV (default: <out>/observations.csv)");
  estimate->add_flag("--exact-oracle", f.exact_oracle, "use the analytic characteristic function");

  std::size_t seed_count = 10;
  auto* replicate = app.add_subcommand("replicate-paper", "run the Bates replication study");
  common(replicate);
  replicate->add_option("--seeds", seed_count, "number of seeds per alpha")->check(CLI::PositiveNumber);

  std::string what;
  auto* oracle = app.add_subcommand("oracle", "write a ground-truth curve");
  common(oracle);
  oracle->add_option("what", what, "cf, rho or exponent")->required()->check(CLI::IsMember({"cf", "rho", "exponent"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (simulate->parsed()) {
      const auto c = load(f, true);
      const auto res = ajl::cmd_simulate(c, options(f, c));
      std::cout << "wrote " << res.csv.string() << " (" << res.observations.size() << " records)\n";
    } else if (estimate->parsed()) {
      const auto c = load(f, true);
      const auto o = options(f, c);
      std::optional<std::filesystem::path> obs;
      if (!f.exact_oracle) obs = observations.empty() ? o.out_dir / "observations.csv" : std::filesystem::path(observations);
      const auto res = ajl::cmd_estimate(c, obs, o);
      std::cout << res.manifest["summary"].dump(2) << "\n";
    } else if (replicate->parsed()) {
      auto c = f.config.empty() ? ajl::paper_config(0.5) : load(f, true);
      if (f.seed) c.seed = *f.seed;
      const auto report = ajl::cmd_replicate_paper(c, seed_count, options(f, c));
      std::cout << report.table;
    } else if (oracle->parsed()) {
      const auto c = load(f, true);
      std::cout << "wrote " << ajl::cmd_oracle(c, what, options(f, c)).string() << "\n";
    }
  } catch (const ajl::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidation;
  } catch (const ajl::EstimatorUnavailable& e) {
    std::cerr << "estimator unavailable: " << e.what() << "\n";
    return kUnavailable;
  } catch (const ajl::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kUnavailable;
  } catch (const ajl::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
