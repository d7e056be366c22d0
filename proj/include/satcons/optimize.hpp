#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "satcons/lmi.hpp"
#include "satcons/sdp.hpp"
#include "satcons/sysmodel.hpp"

namespace satcons::opt {

enum class ReportStatus { kFeasible, kInfeasible, kNumericalFailure };
const char* ToString(ReportStatus status);

struct ConstraintMargin {
  std::string label;
  // Largest eigenvalue of the violation side: for "F >= m I" this is
  // -(min eig F - m), for "F <= -m I" it is max eig F + m. Satisfied when <= tol.
  double violation = 0.0;
};

struct SolveReport {
  ReportStatus status = ReportStatus::kNumericalFailure;
  sdp::Status solver_status = sdp::Status::kNumericalError;
  std::map<std::string, Matrix> values;
  std::vector<ConstraintMargin> margins;
  double max_violation = 0.0;
  double objective = 0.0;
  int iterations = 0;
  double seconds = 0.0;

  bool feasible() const { return status == ReportStatus::kFeasible; }
};

struct SolveOptions {
  sdp::Settings solver;
  double verify_tol = 1e-7;
  // Relative back-off used to re-certify a minimizer strictly inside the
  // feasible set (also the resolution reported for every driver).
  double relative_tol = 1e-3;
};

// Solves and independently re-verifies every constraint by eigenvalues.
SolveReport Solve(const lmi::LmiProblem& problem, const SolveOptions& options = {});

// Origin-start tolerance: minimizes gamma subject to the start-from-consensus
// family, then re-certifies at gamma (1 + relative_tol). n_rho = 1 / gamma.
struct OriginResult {
  bool certified = false;
  double gamma = 0.0;
  double n_rho = 0.0;
  bool ceiling_hit = false;  // gamma reached gamma_floor: tolerance effectively unbounded
  double minimized_gamma = 0.0;
  SolveReport report;  // the certifying solve (or the failed attempt)
};
struct OriginOptions {
  SolveOptions solve;
  lmi::AssemblyOptions assembly;
  double gamma_floor = 1e-6;
};
OriginResult MaxToleranceFromOrigin(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                    const OriginOptions& options = {});

// Feasibility of the start-from-consensus family at a fixed gamma.
SolveReport CheckOrigin(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double gamma,
                        const OriginOptions& options = {});

// Start-in-level-set tolerance: for each gamma of the grid, maximizes rho
// (minimizes tau = 1/rho), re-certifies at rho / (1 + relative_tol) and keeps the
// best. eta follows from gamma = 1 / (1 + N rho eta).
struct TolerancePoint {
  double gamma = 0.0;
  bool certified = false;
  double rho = 0.0;
  double eta = 0.0;
  bool ceiling_hit = false;
  ReportStatus status = ReportStatus::kNumericalFailure;
};
struct ToleranceResult {
  bool any_certified = false;
  TolerancePoint best;
  std::vector<TolerancePoint> grid;
  SolveReport best_report;
};
struct ToleranceOptions {
  SolveOptions solve;
  lmi::AssemblyOptions assembly;
  double rho_ceiling = 1e6;
  bool parallel = true;  // grid points in parallel
};
std::vector<double> DefaultGammaGrid(int points = 40, double lo = 1e-3, double hi = 0.99);
TolerancePoint MaxRhoAtGamma(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double gamma,
                             const ToleranceOptions& options, SolveReport* report = nullptr);
ToleranceResult MaxDisturbanceTolerance(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                        const std::vector<double>& gamma_grid, const ToleranceOptions& options = {});

// L2 gain at energy bound rho: minimizes varrho^2, re-certifies at
// varrho^2 (1 + relative_tol).
struct L2Result {
  bool certified = false;
  double varrho = 0.0;
  bool floor_hit = false;
  SolveReport report;
};
struct L2DriverOptions {
  SolveOptions solve;
  lmi::L2Options assembly;
  double varrho_sq_floor = 1e-8;
};
L2Result EstimateL2Gain(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double rho,
                        const Matrix& C, const L2DriverOptions& options = {});
SolveReport CheckL2(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double rho,
                    const Matrix& C, double varrho, const L2DriverOptions& options = {});

// Region maximization at fixed gamma: rho is pushed to rho_fraction of its
// maximum, then trace(Z) is minimized subject to containment.
struct RegionResult {
  bool certified = false;
  double gamma = 0.0;
  double rho = 0.0;
  double trace = 0.0;
  Matrix Z;
  std::vector<Matrix> P;  // P_l = Y_l^{-1}
  SolveReport report;
};
struct RegionOptions {
  SolveOptions solve;
  lmi::AssemblyOptions assembly;
  // Fraction of the maximal rho used for the trace minimization. With
  // fixed_rho set, that value is used directly.
  double rho_fraction = 1.0 / 1.001;
  std::optional<double> fixed_rho;
  double rho_ceiling = 1e6;
};
RegionResult MaximizeRegion(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double gamma,
                            const RegionOptions& options = {});

// Gain synthesis at fixed (rho, gamma).
// A mode whose input coupling U L_l W (x) B vanishes leaves He(A F) <= 0 in
// the shared-F family, so an A with an eigenvalue in the open right half plane
// makes the family infeasible. That case is reported without a solve.
struct SynthesisResult {
  bool feasible = false;
  Matrix K;
  SolveReport report;
  std::string obstruction;  // nonempty when infeasibility is proven structurally
};
// Empty when no structural obstruction applies.
std::string SynthesisObstruction(const DisagreementSystem& open_loop, const Matrix& A, const Matrix& B);
SynthesisResult SynthesizeGain(const DisagreementSystem& open_loop, const markov::GeneratorPolytope& polytope,
                               double rho, double gamma, const SolveOptions& options = {},
                               const lmi::AssemblyOptions& assembly = {});

// Monotonicity spot checks: values on the "easier" side of a certified value
// must also be feasible when solved directly.
struct SoundnessCheck {
  double certified_value = 0.0;
  double probe_value = 0.0;
  bool feasible = false;
};
std::vector<SoundnessCheck> SpotCheckOrigin(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                            double certified_gamma, unsigned seed, int count = 5,
                                            const OriginOptions& options = {});
std::vector<SoundnessCheck> SpotCheckRho(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                         double gamma, double certified_rho, unsigned seed, int count = 5,
                                         const ToleranceOptions& options = {});
std::vector<SoundnessCheck> SpotCheckL2(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                        double rho, const Matrix& C, double certified_varrho, unsigned seed,
                                        int count = 5, const L2DriverOptions& options = {});

// Parameter sweeps.
enum class SweepParameter { kUmax, kEpsilon };
enum class SweepDriver { kOriginTolerance, kMaxTolerance, kRegion };
const char* ToString(SweepParameter parameter);
const char* ToString(SweepDriver driver);

struct SweepPoint {
  double value = 0.0;
  double objective = 0.0;  // n_rho, N * rho or trace(Z)
  ReportStatus status = ReportStatus::kNumericalFailure;
  bool ceiling_hit = false;
  bool from_cache = false;
  double seconds = 0.0;
};
struct SweepResult {
  SweepParameter parameter = SweepParameter::kUmax;
  SweepDriver driver = SweepDriver::kOriginTolerance;
  std::string objective_name;
  std::vector<SweepPoint> points;
};
struct SweepOptions {
  SolveOptions solve;
  lmi::AssemblyOptions assembly;
  double region_gamma = 0.8;
  std::optional<double> region_fixed_rho;  // kRegion: skip the rho maximization
  std::vector<double> gamma_grid;  // kMaxTolerance; default grid if empty
  std::string cache_dir;           // empty: no caching
  bool parallel = true;
};
// Throws ValidationError unless the grid is nonempty and strictly increasing.
SweepResult Sweep(const NetworkModel& model, SweepParameter parameter, const std::vector<double>& grid,
                  SweepDriver driver, const SweepOptions& options = {});

// Serialization.
std::string ReportToJson(const SolveReport& report);
std::string SweepToCsv(const SweepResult& result);
std::string SweepToJson(const SweepResult& result);
std::string MarginsToCsv(const SolveReport& report);

}  // namespace satcons::opt
