// Acceptance report for the Example-1 network: one PASS/FAIL line per criterion.
//
//   acceptance [--expect-red 1,3,...]
//
// Exit status is 0 when the failing criteria are exactly the expected-red set.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "satcons/disagreement.hpp"
#include "satcons/lmi.hpp"
#include "satcons/markov.hpp"
#include "satcons/optimize.hpp"
#include "satcons/regions.hpp"
#include "satcons/simulate.hpp"
#include "support.hpp"

using namespace satcons;

namespace {

// Pinned tolerances.
constexpr double kHeadlineLo = 130.0, kHeadlineHi = 160.0;
constexpr double kRuntimeLimit = 60.0;  // seconds
constexpr double kMonotoneSlack = 1e-6;
constexpr double kFig4Lo = 0.3, kFig4Hi = 0.8;
constexpr double kFig4Excess = 0.05;
constexpr double kMeanSquareRatio = 1e-3;
constexpr double kSectorTol = 1e-12;
constexpr double kVerifyTol = 1e-7;
constexpr double kNonlinearRelTol = 1e-6;
constexpr double kCtmcRelTol = 0.02;
constexpr double kHeadlineEnergy = 145.0;  // energy budget behind the printed cutoffs
constexpr double kL2Budget = 100.0;

std::vector<std::string> failed;

void Line(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("criterion %2d %-4s %s: %s\n", id, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) failed.push_back(std::to_string(id));
}

void Info(const std::string& text) {
  std::printf("             info %s\n", text.c_str());
  std::fflush(stdout);
}

std::string Fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - since).count();
}

lmi::AssemblyOptions AsPrinted() {
  lmi::AssemblyOptions a;
  a.convention = lmi::SectorConvention::kAsPrinted;
  return a;
}

void Headline(const NetworkModel& model, const DisagreementSystem& sys) {
  const auto start = std::chrono::steady_clock::now();
  const opt::OriginResult r = opt::MaxToleranceFromOrigin(sys, model.polytope);
  const double secs = Seconds(start);
  const bool pass = r.certified && !r.ceiling_hit && r.n_rho >= kHeadlineLo && r.n_rho <= kHeadlineHi &&
                    secs < kRuntimeLimit;
  Line(1, "headline N rho", pass,
       Fmt("N rho = %.4f (band [%g, %g]), %.2f s", r.n_rho, kHeadlineLo, kHeadlineHi, secs));
  opt::OriginOptions printed;
  printed.assembly = AsPrinted();
  const opt::OriginResult p = opt::MaxToleranceFromOrigin(sys, model.polytope, printed);
  Info(Fmt("as-printed sector pairing: N rho = %.4f", p.n_rho));
}

void UmaxTrend(const NetworkModel& model) {
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(0.5 * k);
  const opt::SweepResult s =
      opt::Sweep(model, opt::SweepParameter::kUmax, grid, opt::SweepDriver::kOriginTolerance);
  bool pass = true;
  std::ostringstream values;
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    const auto& pt = s.points[k];
    pass = pass && pt.status == opt::ReportStatus::kFeasible && !pt.ceiling_hit;
    if (k > 0) pass = pass && pt.objective >= s.points[k - 1].objective - kMonotoneSlack;
    values << (k ? " " : "") << Fmt("%.4g", pt.objective);
  }
  Line(2, "u_max trend", pass, "N rho over u_max 0.5..5: " + values.str());
}

void EpsilonTrend(const NetworkModel& model) {
  const std::vector<double> grid = {0.1, 0.25, 0.4, 0.51, 0.7, 1.0, 2.0, 5.0, 15.0};
  const opt::SweepResult s = opt::Sweep(model, opt::SweepParameter::kEpsilon, grid, opt::SweepDriver::kRegion);
  double best = INFINITY, argmin = NAN, at025 = NAN, at15 = NAN;
  std::ostringstream values;
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    const auto& pt = s.points[k];
    const bool ok = pt.status == opt::ReportStatus::kFeasible;
    values << (k ? " " : "") << (ok ? Fmt("%.4g", pt.objective) : std::string("infeasible"));
    if (!ok) continue;
    if (pt.objective < best) {
      best = pt.objective;
      argmin = pt.value;
    }
    if (pt.value == 0.25) at025 = pt.objective;
    if (pt.value == 15.0) at15 = pt.objective;
  }
  const bool located = argmin >= kFig4Lo && argmin <= kFig4Hi;
  const bool sharp = at025 >= (1.0 + kFig4Excess) * best && at15 >= (1.0 + kFig4Excess) * best;
  Line(3, "epsilon trend", located && sharp,
       Fmt("argmin eps = %g, trace(0.25)/min = %.3f, trace(15)/min = %.3f", argmin, at025 / best, at15 / best) +
           "; traces: " + values.str());
}

void BoundaryConsistency(const NetworkModel& model, const DisagreementSystem& sys) {
  const double gamma = 0.8;
  const opt::RegionResult r = opt::MaximizeRegion(sys, model.polytope, gamma);
  if (!r.certified) {
    Line(4, "boundary Monte-Carlo", false, "no region certificate at gamma 0.8");
    return;
  }
  const regions::EllipsoidFamily family(r.P, 1.0);
  sim::BatchSpec spec;
  spec.start = sim::StartKind::kRegionBoundary;
  spec.realizations = 100;
  spec.seed = 1;
  spec.integrate.horizon = 20.0;
  spec.integrate.store_every = 0;
  const sim::BatchReport b = sim::RunBatchParallel(model, family, 1.0 / gamma, spec);
  const double ratio = b.mean_final_square / b.mean_initial_square;
  double max_level = 0.0;
  for (const auto& run : b.runs) max_level = std::max(max_level, run.max_level);
  Line(4, "boundary Monte-Carlo", b.exited == 0 && ratio < kMeanSquareRatio,
       Fmt("%g of 100 realizations exit R(z, 1/gamma) (max level %.3f), mean-square ratio at T = 20 is %.3g",
           b.exited, max_level, ratio));
}

void OriginBound(const NetworkModel& model, const DisagreementSystem& sys) {
  const opt::OriginResult r = opt::MaxToleranceFromOrigin(sys, model.polytope);
  if (!r.certified || r.ceiling_hit) {
    Line(5, "origin-start bound", false, "no origin certificate");
    return;
  }
  std::vector<Matrix> shapes;
  for (int l = 0; l < model.num_modes(); ++l) {
    Matrix P = r.report.values.at(lmi::YName(l)).inverse();
    shapes.push_back(0.5 * (P + P.transpose()));
  }
  const regions::EllipsoidFamily cert(shapes, 1.0);
  const double outer = 1.0 / r.gamma;
  auto batch = [&](sim::DisturbanceKind kind, int agent, double amp, double budget, double* cutoff) {
    sim::BatchSpec spec;
    spec.start = sim::StartKind::kOrigin;
    spec.realizations = 50;
    spec.seed = 7;
    spec.integrate.horizon = 20.0;
    spec.integrate.store_every = 0;
    spec.disturbance = sim::MakeDisturbance(kind, {agent}, Eigen::Vector2d(amp, amp), budget);
    *cutoff = spec.disturbance.cutoff;
    return sim::RunBatchParallel(model, cert, outer, spec);
  };
  double ramp_cut = 0.0, const_cut = 0.0, ramp_cut_c = 0.0, const_cut_c = 0.0;
  const auto ramp = batch(sim::DisturbanceKind::kRamp, 0, 1.0, kHeadlineEnergy, &ramp_cut);
  const auto constant = batch(sim::DisturbanceKind::kConstant, 1, 10.0, kHeadlineEnergy, &const_cut);
  const auto ramp_c = batch(sim::DisturbanceKind::kRamp, 0, 1.0, r.n_rho, &ramp_cut_c);
  const auto constant_c = batch(sim::DisturbanceKind::kConstant, 1, 10.0, r.n_rho, &const_cut_c);
  const int exits = ramp.exited + constant.exited + ramp_c.exited + constant_c.exited;
  double level = 0.0;
  for (const auto* b : {&ramp, &constant, &ramp_c, &constant_c}) {
    for (const auto& run : b->runs) level = std::max(level, run.max_level);
  }
  Line(5, "origin-start bound", exits == 0,
       Fmt("%g of 200 realizations exit R(z, N rho) with N rho = %.4f; max level %.3f", exits, r.n_rho, level) +
           Fmt("; cutoffs %.4f / %.4f at energy 145, %.4f / %.4f at the certified energy", ramp_cut, const_cut,
               ramp_cut_c, const_cut_c));
}

const lmi::AffineExpr& Block(const lmi::LmiProblem& prob, const std::string& label) {
  for (const auto& c : prob.constraints()) {
    if (c.label == label) return c.expr;
  }
  throw std::logic_error("missing constraint " + label);
}

double DeadZoneOracle(double u, double u_max) {
  if (u > u_max) return u - u_max;
  if (u < -u_max) return u + u_max;
  return 0.0;
}

void SectorSuite() {
  std::mt19937 rng(20240);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0, library_violations = 0;
  for (int sample = 0; sample < 10000; ++sample) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const double u_max = 0.1 + 5.0 * unit(rng);
    Vector u(n), aux(n);
    Matrix T = Matrix::Zero(n, n);
    for (int r = 0; r < n; ++r) {
      u(r) = 4.0 * u_max * (2.0 * unit(rng) - 1.0);
      aux(r) = u(r) + u_max * (2.0 * unit(rng) - 1.0);
      T(r, r) = 1e-3 + 10.0 * unit(rng);
    }
    double value = 0.0;
    for (int r = 0; r < n; ++r) {
      const double phi = DeadZoneOracle(u(r), u_max);
      value += phi * T(r, r) * (phi - aux(r));
    }
    violations += value > kSectorTol;
    library_violations += !CheckSectorCondition(u, aux, T, u_max);
  }
  Line(6, "sector condition", violations == 0 && library_violations == 0,
       Fmt("%g oracle and %g library violations in 1e4 samples", violations, library_violations));
}

void SchurOracle() {
  const double rho = 0.2, gamma = 0.5;
  int agree = 0, feasible = 0, point_checks = 0, point_disagree = 0, failures = 0;
  for (unsigned seed = 0; seed < 50; ++seed) {
    NetworkModel model = testing::RandomInstance(seed);
    DisagreementSystem sys = BuildDisagreementSystem(model);
    const lmi::LmiProblem prob = lmi::AssembleTheorem1(sys, model.polytope, rho, gamma);
    opt::SolveOptions so;
    so.verify_tol = kVerifyTol;
    const opt::SolveReport rep = opt::Solve(prob, so);
    if (rep.status == opt::ReportStatus::kNumericalFailure) {
      ++failures;
      continue;
    }
    const Matrix& pi = model.polytope.vertices()[0];
    auto nonlinear_ok = [&](const Vector& y) {
      std::vector<Matrix> Y, X;
      for (int l = 0; l < sys.num_modes(); ++l) {
        Y.push_back(prob.Value(lmi::YName(l), y));
        X.push_back(prob.Value(lmi::XName(l), y));
      }
      const Matrix S = prob.Value("S", y);
      bool ok = MinEigenvalue(S) > 0.0;
      for (const auto& Yl : Y) ok = ok && MinEigenvalue(Yl) > 0.0;
      if (!ok) return false;
      const testing::NonlinearPoint pt = testing::ToNonlinear(Y, X, S);
      for (int l = 0; l < sys.num_modes(); ++l) {
        const Matrix M = testing::DissipationMatrix(sys, pi, l, pt, rho, gamma, lmi::SectorConvention::kConsistent);
        ok = ok && MaxEigenvalue(M) <= kNonlinearRelTol * std::max(1.0, M.norm());
        for (int q = 0; q < sys.n_u; ++q) {
          ok = ok && testing::SaturationSlack(sys, l, q, pt, gamma) >=
                         -kNonlinearRelTol * std::max(1.0, sys.u_max * sys.u_max * gamma);
        }
      }
      return ok;
    };
    // Solver verdict versus the nonlinear conditions at the returned point.
    if (rep.feasible()) {
      ++feasible;
      agree += nonlinear_ok(testing::Pack(prob, rep.values));
    } else {
      ++agree;
    }
    // Pointwise: each main and saturation block against its Schur-reduced form.
    std::mt19937 rng(5000 + seed);
    std::normal_distribution<double> g;
    const Vector base = rep.feasible() ? testing::Pack(prob, rep.values) : Vector::Zero(prob.num_scalars());
    for (int trial = 0; trial < 10; ++trial) {
      const double scale = std::pow(10.0, -3.0 + 0.4 * trial) * std::max(1.0, base.cwiseAbs().maxCoeff());
      const Vector y = base + scale * Vector::NullaryExpr(prob.num_scalars(), [&]() { return g(rng); });
      std::vector<Matrix> Y, X;
      for (int l = 0; l < sys.num_modes(); ++l) {
        Y.push_back(prob.Value(lmi::YName(l), y));
        X.push_back(prob.Value(lmi::XName(l), y));
      }
      const Matrix S = prob.Value("S", y);
      bool definite = MinEigenvalue(S) > 0.0;
      for (const auto& Yl : Y) definite = definite && MinEigenvalue(Yl) > 0.0;
      if (!definite) continue;
      const testing::NonlinearPoint pt = testing::ToNonlinear(Y, X, S);
      for (int l = 0; l < sys.num_modes(); ++l) {
        const Matrix block = Block(prob, "main mode " + std::to_string(l + 1) + " vertex 1").Evaluate(y);
        const Matrix M = testing::DissipationMatrix(sys, pi, l, pt, rho, gamma, lmi::SectorConvention::kConsistent);
        const double a = MaxEigenvalue(block) / block.norm(), b = MaxEigenvalue(M) / M.norm();
        if (std::abs(a) > 1e-9 && std::abs(b) > 1e-9) {
          ++point_checks;
          point_disagree += (a > 0) != (b > 0);
        }
        for (int q = 0; q < sys.n_u; ++q) {
          const Matrix sat =
              Block(prob, "saturation mode " + std::to_string(l + 1) + " row " + std::to_string(q + 1)).Evaluate(y);
          const double c = MinEigenvalue(sat) / sat.norm(), d = testing::SaturationSlack(sys, l, q, pt, gamma);
          if (std::abs(c) > 1e-9 && std::abs(d) > 1e-9) {
            ++point_checks;
            point_disagree += (c > 0) != (d > 0);
          }
        }
      }
    }
  }
  Line(7, "Schur/eigenvalue oracle", agree == 50 && failures == 0 && point_disagree == 0,
       Fmt("%g of 50 instances agree (%g feasible, %g numerical failures); ", agree, feasible, failures) +
           Fmt("%g pointwise disagreements in %g block comparisons", point_disagree, point_checks));
}

void CtmcStatistics(const NetworkModel& model) {
  const Matrix& q = model.polytope.vertices()[0];
  const int s = model.num_modes();
  const auto t = markov::SampleTrajectory(q, Vector::Constant(s, 1.0 / s), 6.0e4, 31337);
  Vector holding = Vector::Zero(s), visits = Vector::Zero(s);
  Matrix counts = Matrix::Zero(s, s);
  const int jumps = std::min(t.num_segments() - 1, 100000);
  for (int k = 0; k < jumps; ++k) {
    holding(t.modes[k]) += t.SegmentEnd(k) - t.jump_times[k];
    visits(t.modes[k]) += 1;
    counts(t.modes[k], t.modes[k + 1]) += 1;
  }
  double worst = 0.0;
  std::ostringstream means;
  for (int i = 0; i < s; ++i) {
    const double mean = holding(i) / visits(i), expect = -1.0 / q(i, i);
    worst = std::max(worst, std::abs(mean / expect - 1.0));
    means << (i ? " " : "") << Fmt("%.4f", mean);
    for (int j = 0; j < s; ++j) {
      if (i == j) continue;
      worst = std::max(worst, std::abs(counts(i, j) / visits(i) / (q(i, j) / -q(i, i)) - 1.0));
    }
  }
  Line(8, "CTMC statistics", jumps == 100000 && worst <= kCtmcRelTol,
       Fmt("%g jumps, worst relative error %.4f; mean holding times ", jumps, worst) + means.str());
}

bool AnalyzeAnyGamma(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double rho,
                     const lmi::AssemblyOptions& assembly, double* at_gamma) {
  for (double gamma : opt::DefaultGammaGrid()) {
    if (opt::Solve(lmi::AssembleTheorem1(sys, polytope, rho, gamma, assembly)).feasible()) {
      *at_gamma = gamma;
      return true;
    }
  }
  return false;
}

void Synthesis(const NetworkModel& model, const DisagreementSystem& sys) {
  const int n = model.num_agents();
  const double rho = 30.0 / n, gamma = 0.5;
  NetworkModel open = model;
  open.gain.reset();
  const DisagreementSystem open_sys = BuildOpenLoopSystem(open);
  const opt::SynthesisResult syn = opt::SynthesizeGain(open_sys, open.polytope, rho, gamma);
  bool round_trip = false;
  if (syn.feasible) {
    const DisagreementSystem closed = BuildDisagreementSystem(open.WithGain(syn.K));
    round_trip = opt::Solve(lmi::AssembleTheorem1(closed, open.polytope, rho, gamma)).feasible();
  }
  double g = 0.0;
  const bool printed_k = AnalyzeAnyGamma(sys, model.polytope, 100.0 / n, {}, &g);
  std::string why = syn.feasible ? "synthesized gain " + std::string(round_trip ? "re-analyzes feasible"
                                                                                : "fails re-analysis")
                                 : "synthesis " + std::string(opt::ToString(syn.report.status)) +
                                       (syn.obstruction.empty() ? "" : " (" + syn.obstruction + ")");
  Line(9, "synthesis round trip", round_trip && printed_k,
       why + "; printed K at N rho = 100 " + (printed_k ? Fmt("feasible at gamma %.4g", g) : "infeasible"));
  double gp = 0.0;
  const bool printed_form = AnalyzeAnyGamma(sys, model.polytope, 100.0 / n, AsPrinted(), &gp);
  Info(std::string("as-printed sector pairing: printed K at N rho = 100 ") +
       (printed_form ? Fmt("feasible at gamma %.4g", gp) : "infeasible"));
}

void L2Consistency(const NetworkModel& model, const DisagreementSystem& sys) {
  const int n = model.num_agents();
  const Matrix C = Matrix::Identity(sys.n_z, sys.n_z);
  const opt::L2Result l2 = opt::EstimateL2Gain(sys, model.polytope, kL2Budget / n, C);
  if (!l2.certified) {
    Line(10, "L2 consistency", false, "no L2 certificate at N rho = 100");
    return;
  }
  std::vector<Matrix> shapes;
  for (int l = 0; l < model.num_modes(); ++l) {
    Matrix P = l2.report.values.at(lmi::YName(l)).inverse();
    shapes.push_back(0.5 * (P + P.transpose()));
  }
  const regions::EllipsoidFamily family(shapes, 1.0);
  const double bound = l2.varrho * l2.varrho * kL2Budget;
  double worst = 0.0, energy = 0.0;
  int runs = 0;
  for (auto kind : {sim::DisturbanceKind::kRamp, sim::DisturbanceKind::kConstant}) {
    for (int agent = 0; agent < n; ++agent) {
      sim::BatchSpec spec;
      spec.start = sim::StartKind::kOrigin;
      spec.realizations = agent == 0 ? 18 : 16;
      spec.seed = 100 + 10 * agent;
      spec.integrate.horizon = 30.0;
      spec.integrate.store_every = 0;
      spec.output = C;
      const double amp = kind == sim::DisturbanceKind::kRamp ? 1.0 : 10.0;
      spec.disturbance = sim::MakeDisturbance(kind, {agent}, Eigen::Vector2d(amp, amp), kL2Budget);
      const sim::BatchReport b = sim::RunBatchParallel(model, family, 1.0, spec);
      for (const auto& r : b.runs) {
        worst = std::max(worst, r.output_energy);
        energy = std::max(energy, r.disturbance_energy);
        ++runs;
      }
    }
  }
  Line(10, "L2 consistency", runs == 100 && worst <= bound,
       Fmt("varrho = %.4f, max output energy %.4g over %g realizations <= varrho^2 N rho = %.4g", l2.varrho, worst,
           runs, bound) +
           Fmt(" (max disturbance energy %.4g)", energy));
}

std::set<std::string> ParseRed(int argc, char** argv) {
  std::set<std::string> red;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::strcmp(argv[i], "--expect-red") != 0) continue;
    std::stringstream ss(argv[i + 1]);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) red.insert(item);
    }
  }
  return red;
}

}  // namespace

int main(int argc, char** argv) {
  const std::set<std::string> expected_red = ParseRed(argc, argv);
  const NetworkModel model = testing::Example1();
  const DisagreementSystem sys = BuildDisagreementSystem(model);

  Headline(model, sys);
  UmaxTrend(model);
  EpsilonTrend(model);
  BoundaryConsistency(model, sys);
  OriginBound(model, sys);
  SectorSuite();
  SchurOracle();
  CtmcStatistics(model);
  Synthesis(model, sys);
  L2Consistency(model, sys);

  const std::set<std::string> red(failed.begin(), failed.end());
  std::printf("summary: %zu of 10 criteria pass\n", 10 - red.size());
  if (red == expected_red) return 0;
  for (const auto& id : red) {
    if (!expected_red.count(id)) std::printf("unexpected failure: criterion %s\n", id.c_str());
  }
  for (const auto& id : expected_red) {
    if (!red.count(id)) std::printf("expected-red criterion %s now passes; update the expected list\n", id.c_str());
  }
  return 1;
}
