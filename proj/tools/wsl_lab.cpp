#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "wsl/cli.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<unsigned> threads;
  std::string out;
  std::string svg;
  std::string tests;
};

void add_common(CLI::App& sub, Flags& f) {
  sub.add_option("--config", f.config, "JSON config file, or an artifact carrying a '# config:' header");
  sub.add_option("--seed", f.seed, "master seed");
  sub.add_option("--trials", f.trials, "trials per cell");
  sub.add_option("--threads", f.threads, "worker threads");
  sub.add_option("--out", f.out, "output path (default stdout)");
  sub.add_option("--svg", f.svg, "heatmap path (sweep)");
  sub.add_option("--tests", f.tests, "comma-separated tests");
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("wsl");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("WSL_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

wsl::cli::RunConfig resolve(const Flags& f) {
  wsl::cli::RunConfig cfg =
      f.config.empty() ? wsl::cli::default_config() : wsl::cli::load_config_file(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.trials) cfg.trials = *f.trials;
  if (f.threads) cfg.threads = *f.threads;
  if (!f.out.empty()) cfg.out = f.out;
  if (!f.svg.empty()) cfg.svg = f.svg;
  if (!f.tests.empty()) {
    cfg.tests = wsl::cli::parse_config(nlohmann::json{{"tests", f.tests}}.dump(), cfg).tests;
  }
  return wsl::cli::parse_config(cfg.to_json().dump(), cfg);
}

// Runs fn with the configured output stream (file or stdout).
int with_output(const wsl::cli::RunConfig& cfg, const std::function<int(std::ostream&)>& fn) {
  if (cfg.out.empty()) return fn(std::cout);
  std::ofstream file(cfg.out);
  if (!file) throw wsl::Error(wsl::ErrorCode::Config, "cannot write '" + cfg.out + "'");
  return fn(file);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Weakly supervised detection lab: rates, risk sweeps, oracle demos and numerical identity checks"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<std::string> suites;
  auto* rates = app.add_subcommand("rates", "rate table over the alpha grid");
  auto* sweep = app.add_subcommand("sweep", "phase-diagram risk sweep over (alpha, gamma)");
  auto* risk = app.add_subcommand("risk", "risk of each test at fixed points");
  auto* verify = app.add_subcommand("verify", "numerical checks: lemma1 (cross moment) lemma2 (hyperbolic bound) chisq moments tolerances");
  auto* demo = app.add_subcommand("oracle-demo", "adversarial oracle indistinguishability report");
  for (auto* sub : {rates, sweep, risk, verify, demo}) add_common(*sub, flags);
  verify->add_option("suites", suites, "suites to run (default all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : wsl::cli::kConfigError;
  }

  return wsl::cli::run_guarded(
      [&]() -> int {
        const wsl::cli::RunConfig cfg = resolve(flags);
        if (*rates) return with_output(cfg, [&](std::ostream& os) { return wsl::cli::cmd_rates(cfg, os); });
        if (*sweep) {
          return with_output(cfg, [&](std::ostream& os) {
            if (cfg.svg.empty()) return wsl::cli::cmd_sweep(cfg, os, nullptr);
            std::ofstream svg(cfg.svg);
            if (!svg) throw wsl::Error(wsl::ErrorCode::Config, "cannot write '" + cfg.svg + "'");
            return wsl::cli::cmd_sweep(cfg, os, &svg);
          });
        }
        if (*risk) return with_output(cfg, [&](std::ostream& os) { return wsl::cli::cmd_risk(cfg, os); });
        if (*verify) {
          return with_output(cfg, [&](std::ostream& os) { return wsl::cli::cmd_verify(cfg, suites, os); });
        }
        return with_output(cfg, [&](std::ostream& os) { return wsl::cli::cmd_oracle_demo(cfg, os, std::cout); });
      },
      std::cerr);
}
