#include "satcons/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

namespace satcons::sim {

const char* ToString(DisturbanceKind kind) {
  switch (kind) {
    case DisturbanceKind::kZero: return "zero";
    case DisturbanceKind::kConstant: return "constant";
    case DisturbanceKind::kRamp: return "ramp";
    case DisturbanceKind::kSamples: return "samples";
  }
  return "unknown";
}

Vector DisturbanceSpec::Value(double t, int num_agents, int q) const {
  Vector w = Vector::Zero(num_agents * q);
  if (kind == DisturbanceKind::kZero || t >= cutoff || t < 0.0) return w;
  if (kind == DisturbanceKind::kSamples) {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return w;
    return samples[static_cast<std::size_t>(it - times.begin()) - 1];
  }
  const Vector value = kind == DisturbanceKind::kConstant ? amplitude : Vector(amplitude * t);
  for (int i : agents) w.segment(i * q, q) = value;
  return w;
}

double DisturbanceSpec::Energy(int num_agents, int q) const {
  const double k = static_cast<double>(agents.size());
  switch (kind) {
    case DisturbanceKind::kZero: return 0.0;
    case DisturbanceKind::kConstant:
      return std::isinf(cutoff) && amplitude.squaredNorm() > 0.0 ? std::numeric_limits<double>::infinity()
                                                                 : k * amplitude.squaredNorm() * cutoff;
    case DisturbanceKind::kRamp:
      return std::isinf(cutoff) && amplitude.squaredNorm() > 0.0
                 ? std::numeric_limits<double>::infinity()
                 : k * amplitude.squaredNorm() * cutoff * cutoff * cutoff / 3.0;
    case DisturbanceKind::kSamples: {
      double e = 0.0;
      for (std::size_t i = 0; i < times.size(); ++i) {
        const double end = i + 1 < times.size() ? std::min(times[i + 1], cutoff) : cutoff;
        if (end > times[i]) e += samples[i].squaredNorm() * (end - times[i]);
      }
      (void)num_agents;
      (void)q;
      return e;
    }
  }
  return 0.0;
}

DisturbanceSpec MakeDisturbance(DisturbanceKind kind, std::vector<int> agents, const Vector& amplitude,
                                double budget) {
  if (!(budget > 0.0)) throw ValidationError("disturbance budget must be positive");
  DisturbanceSpec spec;
  spec.kind = kind;
  spec.budget = budget;
  if (kind == DisturbanceKind::kZero) return spec;
  if (kind == DisturbanceKind::kSamples) throw ValidationError("use MakeSampledDisturbance for sampled inputs");
  if (agents.empty()) throw ValidationError("disturbance needs at least one target agent");
  for (int a : agents) {
    if (a < 0) throw ValidationError("agent indices are zero-based and nonnegative");
  }
  const double a2 = amplitude.squaredNorm();
  if (!(a2 > 0.0)) throw ValidationError("disturbance amplitude must be nonzero");
  spec.agents = std::move(agents);
  spec.amplitude = amplitude;
  const double k = static_cast<double>(spec.agents.size());
  spec.cutoff = kind == DisturbanceKind::kRamp ? std::cbrt(3.0 * budget / (k * a2)) : budget / (k * a2);
  return spec;
}

DisturbanceSpec MakeSampledDisturbance(std::vector<double> times, std::vector<Vector> samples, double cutoff,
                                       double budget, int num_agents, int q) {
  if (times.empty() || times.size() != samples.size()) throw ValidationError("sample times and values disagree");
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw ValidationError("sample times must increase");
  }
  for (const auto& s : samples) {
    if (s.size() != num_agents * q) throw ValidationError("sample has the wrong size");
  }
  DisturbanceSpec spec;
  spec.kind = DisturbanceKind::kSamples;
  spec.times = std::move(times);
  spec.samples = std::move(samples);
  spec.cutoff = cutoff;
  spec.budget = budget;
  if (spec.Energy(num_agents, q) > budget * (1.0 + 1e-12)) throw ValidationError("sampled disturbance exceeds budget");
  return spec;
}

namespace {

struct Stepper {
  const NetworkModel& model;
  const DisagreementSystem& sys;
  const DisturbanceSpec& dist;
  int n, q;

  void Step(int mode, double t, double h, Vector& x, Vector& z, double& energy) const {
    const Vector w0 = dist.Value(t, n, q);
    const Vector wm = dist.Value(t + 0.5 * h, n, q);
    // Left limit at the step end: segments never straddle a cutoff or sample time.
    const Vector w1 = dist.Value(std::nextafter(t + h, t), n, q);
    const Vector kx1 = StackedRhs(model, mode, x, w0);
    const Vector kz1 = DisagreementRhs(sys, mode, z, w0);
    const Vector kx2 = StackedRhs(model, mode, x + 0.5 * h * kx1, wm);
    const Vector kz2 = DisagreementRhs(sys, mode, z + 0.5 * h * kz1, wm);
    const Vector kx3 = StackedRhs(model, mode, x + 0.5 * h * kx2, wm);
    const Vector kz3 = DisagreementRhs(sys, mode, z + 0.5 * h * kz2, wm);
    const Vector kx4 = StackedRhs(model, mode, x + h * kx3, w1);
    const Vector kz4 = DisagreementRhs(sys, mode, z + h * kz3, w1);
    x += h / 6.0 * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4);
    z += h / 6.0 * (kz1 + 2.0 * kz2 + 2.0 * kz3 + kz4);
    energy += h / 6.0 * (w0.squaredNorm() + 4.0 * wm.squaredNorm() + w1.squaredNorm());
  }
};

}  // namespace

Realization Integrate(const NetworkModel& model, const DisagreementSystem& sys, const markov::ModeTrajectory& modes,
                      const DisturbanceSpec& disturbance, const Vector& x0, const IntegrateOptions& options,
                      const Observer& observer) {
  if (!(options.step > 0.0) || !(options.horizon > 0.0)) throw ValidationError("step and horizon must be positive");
  const int n = sys.num_agents;
  const int m = sys.m;
  const int q = sys.q;
  if (x0.size() != n * m) throw ValidationError("initial state has the wrong size");
  Realization r;
  r.modes = modes;
  Stepper stepper{model, sys, disturbance, n, q};
  Vector x = x0;
  Vector z = ToDisagreement(x, n, m);
  double energy = 0.0;
  const Matrix ui = Kron(sys.U, Matrix::Identity(m, m));

  auto record = [&](double t, int mode) {
    const Vector w = disturbance.Value(t, n, q);
    Vector u(n * sys.p);
    const Matrix& lap = model.modes[static_cast<std::size_t>(mode)].laplacian();
    u = Kron(lap, *model.gain) * x;
    r.t.push_back(t);
    r.mode.push_back(mode);
    r.x.push_back(x);
    r.z.push_back(z);
    r.u.push_back(u);
    r.sat_u.push_back(Saturate(u, sys.u_max));
    r.w.push_back(w);
    r.energy.push_back(energy);
  };

  // Break points: jumps and the disturbance cutoff.
  std::vector<double> breaks;
  for (std::size_t k = 1; k < modes.jump_times.size(); ++k) {
    if (modes.jump_times[k] < options.horizon) breaks.push_back(modes.jump_times[k]);
  }
  if (disturbance.cutoff > 0.0 && disturbance.cutoff < options.horizon) breaks.push_back(disturbance.cutoff);
  for (double t : disturbance.times) {
    if (t > 0.0 && t < options.horizon) breaks.push_back(t);
  }
  breaks.push_back(options.horizon);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  double t = 0.0;
  int mode = modes.ModeAt(0.0);
  record(t, mode);
  if (observer) observer(t, mode, x, z);
  long step_count = 0;
  for (double end : breaks) {
    mode = modes.ModeAt(t);
    while (t < end) {
      double h = std::min(options.step, end - t);
      // Avoid a sliver step at the end of a segment.
      if (end - (t + h) < 1e-12) h = end - t;
      stepper.Step(mode, t, h, x, z, energy);
      t = (end - (t + h) < 1e-12) ? end : t + h;
      ++step_count;
      r.max_consistency_error = std::max(r.max_consistency_error, (z - ui * x).norm());
      if (!x.allFinite() || x.norm() > options.divergence_threshold) {
        r.diverged = true;
        record(t, mode);
        r.final_energy = energy;
        r.over_budget = energy > disturbance.budget * (1.0 + 1e-9);
        return r;
      }
      if (observer) observer(t, mode, x, z);
      const bool last = t >= options.horizon;
      if (last || (options.store_every > 0 && step_count % options.store_every == 0)) record(t, mode);
    }
  }
  r.final_energy = energy;
  r.over_budget = energy > disturbance.budget * (1.0 + 1e-9);
  return r;
}

std::string RealizationToCsv(const Realization& r, int num_agents, int m, int p, int q) {
  std::ostringstream os;
  os.precision(10);
  os << "time,mode";
  for (int i = 0; i < num_agents; ++i) {
    for (int k = 0; k < m; ++k) os << ",x" << i + 1 << '_' << k + 1;
  }
  for (int i = 0; i + 1 < num_agents; ++i) {
    for (int k = 0; k < m; ++k) os << ",z" << i + 1 << '_' << k + 1;
  }
  for (int i = 0; i < num_agents; ++i) {
    for (int k = 0; k < p; ++k) os << ",u" << i + 1 << '_' << k + 1;
  }
  for (int i = 0; i < num_agents; ++i) {
    for (int k = 0; k < p; ++k) os << ",sat_u" << i + 1 << '_' << k + 1;
  }
  for (int i = 0; i < num_agents; ++i) {
    for (int k = 0; k < q; ++k) os << ",w" << i + 1 << '_' << k + 1;
  }
  os << ",energy\n";
  for (std::size_t s = 0; s < r.t.size(); ++s) {
    os << r.t[s] << ',' << r.mode[s] + 1;
    for (const Vector* v : {&r.x[s], &r.z[s], &r.u[s], &r.sat_u[s], &r.w[s]}) {
      for (Eigen::Index k = 0; k < v->size(); ++k) os << ',' << (*v)(k);
    }
    os << ',' << r.energy[s] << '\n';
  }
  return os.str();
}

Vector BoundaryStart(const regions::EllipsoidFamily& family, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, family.num_modes() - 1);
  const int l = pick(rng);
  Vector z = regions::BoundarySample(family.shapes()[l], family.level(), 1, static_cast<unsigned>(rng()))[0];
  // Radial projection onto the boundary of the intersection.
  return z * std::sqrt(family.level() / family.MaxQuadratic(z));
}

namespace {

RealizationSetup Setup(const NetworkModel& model, const Matrix& generator, const regions::EllipsoidFamily& family,
                       const BatchSpec& spec, int k) {
  const unsigned seed = spec.seed + static_cast<unsigned>(k);
  const int m = model.dynamics.m();
  RealizationSetup out;
  out.z0 = Vector::Zero(m * (model.num_agents() - 1));
  if (spec.start == StartKind::kRegionBoundary) out.z0 = BoundaryStart(family, seed * 2654435761u + 17u);
  out.x0 = FromDisagreement(out.z0, Vector::Zero(m), model.num_agents());
  out.modes = markov::SampleTrajectory(generator, model.initial_distribution, spec.integrate.horizon, seed);
  return out;
}

RealizationSummary RunOne(const NetworkModel& model, const DisagreementSystem& sys, const Matrix& generator,
                          const regions::EllipsoidFamily& family, double outer_level, const BatchSpec& spec, int k) {
  const RealizationSetup setup = Setup(model, generator, family, spec, k);
  const Vector& z0 = setup.z0;
  const Vector& x0 = setup.x0;
  const auto& modes = setup.modes;
  RealizationSummary s;
  s.initial_square = z0.squaredNorm();
  s.jumps = modes.num_segments() - 1;
  const bool with_output = spec.output.size() > 0;
  double prev_t = 0.0;
  double prev_y = with_output ? (spec.output * z0).squaredNorm() : 0.0;
  auto observer = [&](double t, int, const Vector&, const Vector& z) {
    const double level = family.MaxQuadratic(z) / outer_level;
    s.max_level = std::max(s.max_level, level);
    ++s.samples;
    if (level > 1.0 + 1e-9) ++s.violating_samples;
    if (with_output) {
      const double y = (spec.output * z).squaredNorm();
      s.output_energy += 0.5 * (t - prev_t) * (y + prev_y);
      prev_y = y;
    }
    prev_t = t;
  };
  IntegrateOptions io = spec.integrate;
  io.store_every = 0;
  const Realization r = Integrate(model, sys, modes, spec.disturbance, x0, io, observer);
  s.final_square = r.z.back().squaredNorm();
  s.disturbance_energy = r.final_energy;
  s.diverged = r.diverged;
  s.over_budget = r.over_budget;
  s.max_consistency_error = r.max_consistency_error;
  return s;
}

Matrix BatchGenerator(const NetworkModel& model, const BatchSpec& spec) {
  const int nv = model.polytope.num_vertices();
  Vector weights = spec.polytope_weights.size() ? spec.polytope_weights : Vector::Constant(nv, 1.0 / nv);
  return model.polytope.Mix(weights);
}

BatchReport Summarize(std::vector<RealizationSummary> runs) {
  BatchReport rep;
  rep.runs = std::move(runs);
  const double count = static_cast<double>(rep.runs.size());
  double sum_final2 = 0.0, sum_out2 = 0.0;
  for (const auto& s : rep.runs) {
    rep.samples += s.samples;
    rep.violating_samples += s.violating_samples;
    if (s.violating_samples > 0) ++rep.exited;
    if (s.diverged) ++rep.diverged;
    if (s.over_budget) ++rep.over_budget;
    rep.mean_initial_square += s.initial_square / count;
    rep.mean_final_square += s.final_square / count;
    rep.mean_output_energy += s.output_energy / count;
    sum_final2 += s.final_square * s.final_square;
    sum_out2 += s.output_energy * s.output_energy;
    rep.max_consistency_error = std::max(rep.max_consistency_error, s.max_consistency_error);
  }
  rep.fraction_inside = rep.samples ? 1.0 - static_cast<double>(rep.violating_samples) / rep.samples : 1.0;
  if (count > 1) {
    const double var_f = std::max(0.0, (sum_final2 - count * rep.mean_final_square * rep.mean_final_square) / (count - 1));
    const double var_o = std::max(0.0, (sum_out2 - count * rep.mean_output_energy * rep.mean_output_energy) / (count - 1));
    rep.final_square_stderr = std::sqrt(var_f / count);
    rep.output_energy_stderr = std::sqrt(var_o / count);
  }
  return rep;
}

}  // namespace

RealizationSetup PrepareRealization(const NetworkModel& model, const regions::EllipsoidFamily& family,
                                    const BatchSpec& spec, int k) {
  return Setup(model, BatchGenerator(model, spec), family, spec, k);
}

BatchReport RunBatchSerial(const NetworkModel& model, const regions::EllipsoidFamily& family, double outer_level,
                           const BatchSpec& spec) {
  const DisagreementSystem sys = BuildDisagreementSystem(model);
  const Matrix generator = BatchGenerator(model, spec);
  std::vector<RealizationSummary> runs(static_cast<std::size_t>(spec.realizations));
  for (int k = 0; k < spec.realizations; ++k) runs[k] = RunOne(model, sys, generator, family, outer_level, spec, k);
  return Summarize(std::move(runs));
}

BatchReport RunBatchParallel(const NetworkModel& model, const regions::EllipsoidFamily& family, double outer_level,
                             const BatchSpec& spec) {
  const DisagreementSystem sys = BuildDisagreementSystem(model);
  const Matrix generator = BatchGenerator(model, spec);
  std::vector<RealizationSummary> runs(static_cast<std::size_t>(spec.realizations));
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < spec.realizations; ++k) runs[k] = RunOne(model, sys, generator, family, outer_level, spec, k);
  return Summarize(std::move(runs));
}

std::string BatchToJson(const BatchReport& report) {
  nlohmann::json j;
  j["realizations"] = report.runs.size();
  j["exited"] = report.exited;
  j["samples"] = report.samples;
  j["violating_samples"] = report.violating_samples;
  j["fraction_inside"] = report.fraction_inside;
  j["mean_initial_square"] = report.mean_initial_square;
  j["mean_final_square"] = report.mean_final_square;
  j["final_square_stderr"] = report.final_square_stderr;
  j["mean_output_energy"] = report.mean_output_energy;
  j["output_energy_stderr"] = report.output_energy_stderr;
  j["max_consistency_error"] = report.max_consistency_error;
  j["diverged"] = report.diverged;
  j["over_budget"] = report.over_budget;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& s : report.runs) {
    runs.push_back({{"initial_square", s.initial_square},
                    {"final_square", s.final_square},
                    {"max_level", s.max_level},
                    {"violating_samples", s.violating_samples},
                    {"output_energy", s.output_energy},
                    {"disturbance_energy", s.disturbance_energy},
                    {"jumps", s.jumps}});
  }
  j["runs"] = runs;
  return j.dump(2);
}

}  // namespace satcons::sim
