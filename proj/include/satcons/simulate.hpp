#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "satcons/disagreement.hpp"
#include "satcons/markov.hpp"
#include "satcons/regions.hpp"
#include "satcons/sysmodel.hpp"

namespace satcons::sim {

enum class DisturbanceKind { kZero, kConstant, kRamp, kSamples };
const char* ToString(DisturbanceKind kind);

// Per-agent disturbance w_i(t) on the listed agents (0-based), zero elsewhere
// and after `cutoff`.
//   kConstant: w_i(t) = amplitude
//   kRamp:     w_i(t) = amplitude * t
//   kSamples:  zero-order hold of `samples[k]` (stacked N q) on [times[k], times[k+1]),
//              the last sample held until `cutoff`.
struct DisturbanceSpec {
  DisturbanceKind kind = DisturbanceKind::kZero;
  std::vector<int> agents;
  Vector amplitude;
  double cutoff = std::numeric_limits<double>::infinity();
  std::vector<double> times;
  std::vector<Vector> samples;
  double budget = std::numeric_limits<double>::infinity();  // total network energy allowed

  // Stacked N q vector at time t.
  Vector Value(double t, int num_agents, int q) const;
  // Total energy sum_i int_0^inf |w_i|^2, in closed form.
  double Energy(int num_agents, int q) const;
};

// Chooses the cutoff so that the total energy equals `budget` (= N rho):
// ramp T = (3 E / (k |a|^2))^(1/3), constant T = E / (k |a|^2), k = #agents.
// kSamples requires times/samples set and only checks the budget.
DisturbanceSpec MakeDisturbance(DisturbanceKind kind, std::vector<int> agents, const Vector& amplitude,
                                double budget);
DisturbanceSpec MakeSampledDisturbance(std::vector<double> times, std::vector<Vector> samples, double cutoff,
                                       double budget, int num_agents, int q);

struct IntegrateOptions {
  double step = 1e-3;
  double horizon = 20.0;
  int store_every = 1;  // keep every k-th step; 0 keeps only the endpoints
  double divergence_threshold = 1e8;
};

struct Realization {
  markov::ModeTrajectory modes;
  std::vector<double> t;
  std::vector<int> mode;
  std::vector<Vector> x, z, u, sat_u, w;
  std::vector<double> energy;  // running int |w|^2
  double final_energy = 0.0;
  bool diverged = false;
  bool over_budget = false;
  double max_consistency_error = 0.0;  // max |z - (U (x) I) x| over every step
};

// Called after every completed step (and once at t = 0).
using Observer = std::function<void(double t, int mode, const Vector& x, const Vector& z)>;

// RK4 on the stacked saturated dynamics, segmented exactly at mode jumps and at
// the disturbance cutoff; z is integrated alongside from its own equation.
Realization Integrate(const NetworkModel& model, const DisagreementSystem& sys, const markov::ModeTrajectory& modes,
                      const DisturbanceSpec& disturbance, const Vector& x0, const IntegrateOptions& options,
                      const Observer& observer = nullptr);

// Realization as CSV: time, mode, x*, z*, u*, sat_u*, w*, energy.
std::string RealizationToCsv(const Realization& r, int num_agents, int m, int p, int q);

// Monte-Carlo batches. Realization k uses seed + k for its mode trajectory and
// its initial point, so serial and parallel runs agree exactly.
enum class StartKind { kRegionBoundary, kOrigin };
struct BatchSpec {
  StartKind start = StartKind::kRegionBoundary;
  DisturbanceSpec disturbance;
  int realizations = 100;
  unsigned seed = 1;
  IntegrateOptions integrate;
  Matrix output;  // C for output energy; empty skips it
  Vector polytope_weights;  // generator = Mix(weights); empty uses the barycentre
};

struct RealizationSummary {
  double initial_square = 0.0;  // |z(0)|^2
  double final_square = 0.0;    // |z(T)|^2
  double max_level = 0.0;       // max over time and modes of z' P_l z / outer_level
  long samples = 0;
  long violating_samples = 0;   // samples outside R(z, outer_level)
  double output_energy = 0.0;   // int |C z|^2 (trapezoid)
  double disturbance_energy = 0.0;
  bool diverged = false;
  bool over_budget = false;
  double max_consistency_error = 0.0;
  int jumps = 0;
};

struct BatchReport {
  std::vector<RealizationSummary> runs;
  int exited = 0;  // realizations with at least one violating sample
  long samples = 0;
  long violating_samples = 0;
  double fraction_inside = 1.0;
  double mean_initial_square = 0.0;
  double mean_final_square = 0.0;
  double final_square_stderr = 0.0;
  double mean_output_energy = 0.0;
  double output_energy_stderr = 0.0;
  double max_consistency_error = 0.0;
  int diverged = 0;
  int over_budget = 0;
};

// `family` is the certified unit family R(z,1); trajectories are tested
// against R(z, outer_level).
BatchReport RunBatchSerial(const NetworkModel& model, const regions::EllipsoidFamily& family, double outer_level,
                           const BatchSpec& spec);
BatchReport RunBatchParallel(const NetworkModel& model, const regions::EllipsoidFamily& family, double outer_level,
                             const BatchSpec& spec);

// Initial point and mode trajectory of realization k of a batch.
struct RealizationSetup {
  Vector z0;
  Vector x0;
  markov::ModeTrajectory modes;
};
RealizationSetup PrepareRealization(const NetworkModel& model, const regions::EllipsoidFamily& family,
                                    const BatchSpec& spec, int k);

// Initial disagreement for realization k: a point on the boundary of R(z,1).
Vector BoundaryStart(const regions::EllipsoidFamily& family, unsigned seed);

std::string BatchToJson(const BatchReport& report);

}  // namespace satcons::sim
