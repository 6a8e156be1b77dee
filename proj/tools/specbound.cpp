#include <CLI11.hpp>

#include <iostream>
#include <thread>

#include "specbound/specbound.hpp"

namespace {

constexpr int kMatch = 0;
constexpr int kError = 1;
constexpr int kMismatch = 2;

void summarize(const specbound::RunReport& rep) {
  using specbound::to_string;
  std::cout << "scenario: " << rep.config.name << "\n";
  std::cout << "growth: " << rep.growth.value << " (" << (rep.growth.kind == specbound::GrowthKind::mu ? "mu" : "nu")
            << ")\n";
  if (rep.bound) {
    std::cout << "best bound: " << rep.bound->best_bound << " at r = " << rep.bound->best_r << "\n";
    std::cout << "verdict: " << to_string(rep.bound->verdict) << " (" << rep.bound->reason << ")\n";
  }
  if (rep.expected)
    std::cout << "expected: " << to_string(rep.expected->verdict) << " (" << rep.expected->rationale << ")\n";
  if (rep.oracle) {
    const auto& o = *rep.oracle;
    std::cout << "persson(R0=" << o.ladder.back().R0 << "): " << o.ladder.back().lambda
              << ", rayleigh(top rung): " << o.rungs.back().rayleigh << "\n";
  }
  if (rep.lyapunov && rep.lyapunov->certificate) std::cout << "lyapunov C0: " << rep.lyapunov->certificate->C0 << "\n";
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Upper bounds on the bottom of the essential spectrum of jump-type Dirichlet forms"};
  app.require_subcommand(1);

  std::string config;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::string out = "specbound_out";

  auto* run = app.add_subcommand("run", "compute the bound curve and verdict, then oracles if enabled");
  run->add_option("config", config, "scenario TOML")->required()->check(CLI::ExistingFile);
  run->add_option("--threads", threads, "worker threads (1 gives bitwise determinism)")->check(CLI::PositiveNumber);
  run->add_option("--out", out, "output directory");

  auto* check = app.add_subcommand("check", "validate a configuration");
  check->add_option("config", config, "scenario TOML")->required()->check(CLI::ExistingFile);

  auto* oracle = app.add_subcommand("oracle", "run the discrete oracles only");
  oracle->add_option("config", config, "scenario TOML")->required()->check(CLI::ExistingFile);
  oracle->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  oracle->add_option("--out", out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kError;
  }

  try {
    const auto cfg = specbound::load_config(config);
    if (*check) {
      std::cout << "ok: " << cfg.name << "\n";
      if (auto exp = specbound::expected_verdict(cfg))
        std::cout << "expected verdict: " << specbound::to_string(exp->verdict) << "\n";
      return kMatch;
    }
    const bool oracle_only = static_cast<bool>(*oracle);
    const auto rep = specbound::run_scenario(cfg, threads, oracle_only);
    const auto files = specbound::emit_report(rep, out);
    summarize(rep);
    for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
    if (oracle_only) {
      if (!rep.oracle) return kError;
      return rep.oracle->rayleigh_above_persson ? kMatch : kMismatch;
    }
    if (rep.match && !*rep.match) return kMismatch;
    return kMatch;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kError;
  }
}
