#include <iostream>

#include <CLI11.hpp>

#include "artifacts.hpp"
#include "commands.hpp"
#include "satcons/common.hpp"
#include "usage.hpp"

using namespace satcons;
using namespace satcons::cli;

namespace {

void AddCommon(CLI::App* cmd, CommonOptions& c) {
  cmd->add_option("--config", c.config, "network config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out-dir", c.out_dir, "per-run output directory")->capture_default_str();
  cmd->add_option("--sector-convention", c.convention, "consistent or as-printed")
      ->check(CLI::IsMember({"consistent", "as-printed"}))
      ->capture_default_str();
  cmd->add_option("--seed", c.seed, "random seed")->capture_default_str();
  cmd->add_flag("--quiet", c.quiet, "no summary on stdout");
}

void AddBudget(CLI::App* cmd, BudgetOptions& b) {
  cmd->add_option("--rho", b.rho, "per-agent disturbance energy bound");
  cmd->add_option("--n-rho", b.n_rho, "total disturbance energy bound N rho");
  cmd->add_option("--eta", b.eta, "level-set growth parameter");
  cmd->add_option("--gamma", b.gamma, "saturation level parameter in (0, 1]");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consensus certificates for saturated multi-agent networks with Markov-switched topologies"};
  app.set_version_flag("--version", std::string(Version()));
  app.require_subcommand(1);

  AnalyzeOptions analyze;
  auto* a = app.add_subcommand("analyze", "check the certificate LMIs at a given energy bound");
  AddCommon(a, analyze.common);
  AddBudget(a, analyze.budget);
  a->add_option("--gamma-grid", analyze.gamma_grid, "comma list scanned when neither --gamma nor --eta is given");
  a->add_flag("--from-origin", analyze.from_origin, "trajectories start at consensus");

  MaxToleranceOptions maxtol;
  auto* m = app.add_subcommand("max-tolerance", "largest certified disturbance energy N rho");
  AddCommon(m, maxtol.common);
  m->add_flag("--from-origin", maxtol.from_origin, "trajectories start at consensus");
  m->add_option("--umax-grid", maxtol.umax_grid, "comma list of saturation levels to sweep");
  m->add_option("--gamma-grid", maxtol.gamma_grid, "comma list of gamma values (level-set start)");
  m->add_option("--cache-dir", maxtol.cache_dir, "per-point cache for sweeps");

  SynthesizeOptions synth;
  auto* s = app.add_subcommand("synthesize", "design the feedback gain K");
  AddCommon(s, synth.common);
  AddBudget(s, synth.budget);

  SweepOptions sweep;
  auto* w = app.add_subcommand("sweep", "parameter sweeps and region slices");
  AddCommon(w, sweep.common);
  w->add_option("--eps-grid", sweep.eps_grid, "comma list of generator scale factors");
  w->add_option("--umax-grid", sweep.umax_grid, "comma list of saturation levels");
  w->add_option("--region-eps", sweep.region_eps, "comma list of scale factors exported as region slices");
  w->add_option("--driver", sweep.driver, "region, origin-tolerance or max-tolerance")
      ->check(CLI::IsMember({"region", "origin-tolerance", "max-tolerance"}));
  w->add_option("--gamma", sweep.gamma, "gamma of the region driver")->capture_default_str();
  w->add_option("--region-rho", sweep.region_rho, "fixed rho for the region driver");
  w->add_option("--slice", sweep.slice, "two 0-based disagreement coordinates")->expected(2)->capture_default_str();
  w->add_option("--cache-dir", sweep.cache_dir, "per-point cache");

  SimulateOptions simulate;
  auto* r = app.add_subcommand("simulate", "Monte-Carlo realizations against a certificate");
  AddCommon(r, simulate.common);
  r->add_option("--certificate", simulate.certificate, "certificate.json from analyze or max-tolerance")
      ->check(CLI::ExistingFile);
  r->add_option("--start", simulate.start, "boundary or origin")
      ->check(CLI::IsMember({"boundary", "origin"}))
      ->capture_default_str();
  r->add_option("--disturbance", simulate.disturbance, "zero, ramp or constant")
      ->check(CLI::IsMember({"zero", "ramp", "constant"}))
      ->capture_default_str();
  r->add_option("--agent", simulate.agents, "disturbed agents (1-based)");
  r->add_option("--amplitude", simulate.amplitude, "comma list, one value per disturbance channel");
  r->add_option("--budget", simulate.budget, "total disturbance energy (default: certified N rho)");
  r->add_option("--gamma", simulate.gamma, "gamma of the on-the-fly region certificate")->capture_default_str();
  r->add_option("--region-rho", simulate.region_rho, "fixed rho of the on-the-fly region certificate");
  r->add_option("--horizon", simulate.horizon, "final time")->capture_default_str();
  r->add_option("--step", simulate.step, "RK4 step")->capture_default_str();
  r->add_option("--realizations", simulate.realizations, "batch size")->capture_default_str();
  r->add_option("--export", simulate.export_count, "realizations exported as CSV")->capture_default_str();
  r->add_option("--store-every", simulate.store_every, "CSV row stride in steps")->capture_default_str();
  r->add_flag("--output-identity", simulate.output_identity, "measure the output energy of y = z");
  r->add_flag("--serial", simulate.serial, "run the batch without OpenMP");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*a) return RunAnalyze(analyze);
    if (*m) return RunMaxTolerance(maxtol);
    if (*s) return RunSynthesize(synth);
    if (*w) return RunSweep(sweep);
    if (*r) return RunSimulate(simulate);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
