#pragma once

#include <optional>
#include <string>
#include <vector>

namespace satcons::cli {

struct CommonOptions {
  std::string config;
  std::string out_dir = "satcons-run";
  std::string convention = "consistent";
  unsigned seed = 1;
  bool quiet = false;
};

// rho is the per-agent energy bound; n_rho = N rho is accepted instead.
struct BudgetOptions {
  std::optional<double> rho;
  std::optional<double> n_rho;
  std::optional<double> eta;
  std::optional<double> gamma;
};

struct AnalyzeOptions {
  CommonOptions common;
  BudgetOptions budget;
  std::string gamma_grid;  // comma list; default log grid when empty
  bool from_origin = false;
};

struct MaxToleranceOptions {
  CommonOptions common;
  bool from_origin = false;
  std::string umax_grid;
  std::string gamma_grid;
  std::string cache_dir;
};

struct SynthesizeOptions {
  CommonOptions common;
  BudgetOptions budget;
};

struct SweepOptions {
  CommonOptions common;
  std::string eps_grid;
  std::string umax_grid;
  std::string region_eps;
  std::string driver;  // region, origin-tolerance, max-tolerance
  double gamma = 0.8;
  std::optional<double> region_rho;
  std::vector<int> slice{0, 1};
  std::string cache_dir;
};

struct SimulateOptions {
  CommonOptions common;
  std::string certificate;
  std::string start = "boundary";  // boundary, origin
  std::string disturbance = "zero";  // zero, ramp, constant
  std::vector<int> agents;  // 1-based
  std::string amplitude;
  std::optional<double> budget;
  double gamma = 0.8;
  std::optional<double> region_rho;
  double horizon = 20.0;
  double step = 1e-3;
  int realizations = 100;
  int export_count = 2;
  int store_every = 10;
  bool output_identity = false;
  bool serial = false;
};

int RunAnalyze(const AnalyzeOptions& options);
int RunMaxTolerance(const MaxToleranceOptions& options);
int RunSynthesize(const SynthesizeOptions& options);
int RunSweep(const SweepOptions& options);
int RunSimulate(const SimulateOptions& options);

}  // namespace satcons::cli
