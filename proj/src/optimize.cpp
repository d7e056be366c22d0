#include "satcons/optimize.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <json.hpp>

namespace satcons::opt {

namespace {

using nlohmann::json;

lmi::AffineExpr ScalarAtLeast(const lmi::LmiProblem& prob, const std::string& name, double floor) {
  return prob.Expr(name) - lmi::AffineExpr::Constant(Matrix::Constant(1, 1, floor));
}

json MatrixJson(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

std::string Hex(std::size_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016zx", v);
  return buf;
}

}  // namespace

const char* ToString(ReportStatus status) {
  switch (status) {
    case ReportStatus::kFeasible: return "feasible";
    case ReportStatus::kInfeasible: return "infeasible";
    case ReportStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

SolveReport Solve(const lmi::LmiProblem& problem, const SolveOptions& options) {
  const sdp::Solution sol = sdp::Solve(problem.ToConic(), options.solver);
  SolveReport report;
  report.solver_status = sol.status;
  report.iterations = sol.iterations;
  report.seconds = sol.seconds;
  if (sol.status == sdp::Status::kPrimalInfeasible) {
    report.status = ReportStatus::kInfeasible;
    return report;
  }
  if (sol.status != sdp::Status::kOptimal && sol.status != sdp::Status::kOptimalInaccurate) {
    report.status = ReportStatus::kNumericalFailure;
    return report;
  }
  for (const auto& var : problem.variables()) report.values[var.name] = problem.Value(var.name, sol.x);
  if (problem.objective()) report.objective = problem.objective()->Evaluate(sol.x)(0, 0);
  report.max_violation = -std::numeric_limits<double>::infinity();
  for (const auto& con : problem.constraints()) {
    Matrix F = con.expr.Evaluate(sol.x);
    if (con.sense == lmi::Sense::kNegativeSemidefinite) F = -F;
    F.diagonal().array() -= con.margin;
    const double violation = -MinEigenvalue(F);
    report.margins.push_back({con.label, violation});
    report.max_violation = std::max(report.max_violation, violation);
  }
  report.status = report.max_violation <= options.verify_tol ? ReportStatus::kFeasible
                                                             : ReportStatus::kNumericalFailure;
  return report;
}

SolveReport CheckOrigin(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double gamma,
                        const OriginOptions& options) {
  return Solve(lmi::AssembleOriginVariant(sys, polytope, gamma, options.assembly), options.solve);
}

OriginResult MaxToleranceFromOrigin(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                    const OriginOptions& options) {
  OriginResult out;
  lmi::LmiProblem prob = lmi::AssembleOriginVariant(sys, polytope, std::nullopt, options.assembly);
  prob.AddConstraint("gamma floor", ScalarAtLeast(prob, "gamma", options.gamma_floor),
                     lmi::Sense::kPositiveSemidefinite);
  SolveReport minimized = Solve(prob, options.solve);
  if (minimized.status == ReportStatus::kInfeasible ||
      (minimized.status == ReportStatus::kNumericalFailure && minimized.values.empty())) {
    out.report = minimized;
    return out;
  }
  out.minimized_gamma = std::max(minimized.objective, options.gamma_floor);
  out.ceiling_hit = out.minimized_gamma <=
                    options.gamma_floor * (1.0 + options.solve.relative_tol) + options.solve.solver.absolute_gap_tol;
  double gamma = out.minimized_gamma * (1.0 + options.solve.relative_tol);
  for (int attempt = 0; attempt < 3; ++attempt) {
    out.report = CheckOrigin(sys, polytope, gamma, options);
    if (out.report.feasible()) {
      out.certified = true;
      out.gamma = gamma;
      out.n_rho = 1.0 / gamma;
      return out;
    }
    gamma *= 1.0 + 10.0 * options.solve.relative_tol;
  }
  return out;
}

std::vector<double> DefaultGammaGrid(int points, double lo, double hi) {
  std::vector<double> grid;
  if (points == 1) return {hi};
  for (int k = 0; k < points; ++k) {
    grid.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (points - 1)));
  }
  return grid;
}

TolerancePoint MaxRhoAtGamma(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double gamma,
                             const ToleranceOptions& options, SolveReport* report) {
  TolerancePoint point;
  point.gamma = gamma;
  lmi::LmiProblem prob = lmi::AssembleTheorem1FreeRho(sys, polytope, gamma, options.assembly);
  prob.AddConstraint("tau floor", ScalarAtLeast(prob, "tau", 1.0 / options.rho_ceiling),
                     lmi::Sense::kPositiveSemidefinite);
  SolveReport minimized = Solve(prob, options.solve);
  point.status = minimized.status;
  if (minimized.values.empty()) {
    if (report) *report = minimized;
    return point;
  }
  const double tau = std::max(minimized.objective, 1.0 / options.rho_ceiling);
  point.ceiling_hit = tau <= (1.0 + options.solve.relative_tol) / options.rho_ceiling;
  double rho = 1.0 / (tau * (1.0 + options.solve.relative_tol));
  SolveReport certify;
  for (int attempt = 0; attempt < 3; ++attempt) {
    certify = Solve(lmi::AssembleTheorem1(sys, polytope, rho, gamma, options.assembly), options.solve);
    if (certify.feasible()) {
      point.certified = true;
      point.rho = rho;
      point.eta = (1.0 / gamma - 1.0) / (sys.num_agents * rho);
      break;
    }
    rho /= 1.0 + 10.0 * options.solve.relative_tol;
  }
  point.status = certify.status;
  if (report) *report = certify;
  return point;
}

ToleranceResult MaxDisturbanceTolerance(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                        const std::vector<double>& gamma_grid, const ToleranceOptions& options) {
  if (gamma_grid.empty()) throw ValidationError("gamma grid is empty");
  for (double g : gamma_grid) {
    if (!(g > 0.0 && g < 1.0)) throw ValidationError("gamma grid must lie in (0, 1)");
  }
  ToleranceResult result;
  result.grid.resize(gamma_grid.size());
  std::vector<SolveReport> reports(gamma_grid.size());
  ToleranceOptions inner = options;
  if (options.parallel) inner.solve.solver.parallel_kernels = false;
  const int n = static_cast<int>(gamma_grid.size());
#pragma omp parallel for schedule(dynamic) if (options.parallel)
  for (int k = 0; k < n; ++k) {
    result.grid[k] = MaxRhoAtGamma(sys, polytope, gamma_grid[k], inner, &reports[k]);
  }
  for (int k = 0; k < n; ++k) {
    if (!result.grid[k].certified) continue;
    if (!result.any_certified || result.grid[k].rho > result.best.rho) {
      result.any_certified = true;
      result.best = result.grid[k];
      result.best_report = reports[k];
    }
  }
  return result;
}

SolveReport CheckL2(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double rho,
                    const Matrix& C, double varrho, const L2DriverOptions& options) {
  return Solve(lmi::AssembleL2(sys, polytope, rho, C, varrho, options.assembly), options.solve);
}

L2Result EstimateL2Gain(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double rho,
                        const Matrix& C, const L2DriverOptions& options) {
  L2Result out;
  lmi::LmiProblem prob = lmi::AssembleL2(sys, polytope, rho, C, std::nullopt, options.assembly);
  prob.AddConstraint("varrho floor", ScalarAtLeast(prob, "varrho_sq", options.varrho_sq_floor),
                     lmi::Sense::kPositiveSemidefinite);
  SolveReport minimized = Solve(prob, options.solve);
  if (minimized.values.empty()) {
    out.report = minimized;
    return out;
  }
  const double v2 = std::max(minimized.objective, options.varrho_sq_floor);
  out.floor_hit =
      v2 <= options.varrho_sq_floor * (1.0 + options.solve.relative_tol) + options.solve.solver.absolute_gap_tol;
  double varrho_sq = v2 * (1.0 + options.solve.relative_tol);
  for (int attempt = 0; attempt < 3; ++attempt) {
    out.report = CheckL2(sys, polytope, rho, C, std::sqrt(varrho_sq), options);
    if (out.report.feasible()) {
      out.certified = true;
      out.varrho = std::sqrt(varrho_sq);
      return out;
    }
    varrho_sq *= 1.0 + 10.0 * options.solve.relative_tol;
  }
  return out;
}

RegionResult MaximizeRegion(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double gamma,
                            const RegionOptions& options) {
  RegionResult out;
  out.gamma = gamma;
  double rho = 0.0;
  if (options.fixed_rho) {
    rho = *options.fixed_rho;
  } else {
    ToleranceOptions tol;
    tol.solve = options.solve;
    tol.assembly = options.assembly;
    tol.assembly.containment = false;
    tol.rho_ceiling = options.rho_ceiling;
    TolerancePoint best = MaxRhoAtGamma(sys, polytope, gamma, tol, &out.report);
    if (!best.certified) return out;
    rho = best.rho * options.rho_fraction * (1.0 + options.solve.relative_tol);
    rho = std::min(rho, best.rho);
  }
  lmi::AssemblyOptions assembly = options.assembly;
  assembly.containment = true;
  lmi::LmiProblem prob = lmi::AssembleTheorem1(sys, polytope, rho, gamma, assembly);
  prob.SetObjective(lmi::Trace(prob.Expr("Z")));
  out.report = Solve(prob, options.solve);
  out.rho = rho;
  if (!out.report.feasible()) return out;
  out.certified = true;
  out.Z = out.report.values.at("Z");
  out.trace = out.Z.trace();
  for (int l = 0; l < sys.num_modes(); ++l) {
    const Matrix& Y = out.report.values.at(lmi::YName(l));
    out.P.push_back(Y.ldlt().solve(Matrix::Identity(Y.rows(), Y.cols())));
  }
  return out;
}

std::string SynthesisObstruction(const DisagreementSystem& open_loop, const Matrix& A, const Matrix& B) {
  const double abscissa = Eigen::EigenSolver<Matrix>(A, false).eigenvalues().real().maxCoeff();
  if (abscissa <= 0.0) return {};
  for (int l = 0; l < open_loop.num_modes(); ++l) {
    const Matrix coupling = Kron(open_loop.U * open_loop.laplacians[l] * open_loop.W, B);
    if (coupling.cwiseAbs().maxCoeff() == 0.0) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "mode %d has no input coupling and A has spectral abscissa %.6g > 0", l + 1,
                    abscissa);
      return buf;
    }
  }
  return {};
}

SynthesisResult SynthesizeGain(const DisagreementSystem& open_loop, const markov::GeneratorPolytope& polytope,
                               double rho, double gamma, const SolveOptions& options,
                               const lmi::AssemblyOptions& assembly) {
  SynthesisResult out;
  const int m = open_loop.m;
  const Matrix A = open_loop.block_drift.topLeftCorner(m, m);
  const Matrix B = open_loop.sat_input_map.topLeftCorner(m, open_loop.p);
  out.obstruction = SynthesisObstruction(open_loop, A, B);
  if (!out.obstruction.empty()) {
    out.report.status = ReportStatus::kInfeasible;
    out.report.solver_status = sdp::Status::kPrimalInfeasible;
    return out;
  }
  lmi::LmiProblem prob = lmi::AssembleSynthesis(open_loop, polytope, rho, gamma, assembly);
  out.report = Solve(prob, options);
  if (!out.report.feasible()) return out;
  const Matrix& F = out.report.values.at("F");
  const Matrix& kbar = out.report.values.at("Kbar");
  out.K = F.transpose().ldlt().solve(kbar.transpose()).transpose();
  out.feasible = true;
  return out;
}

std::vector<SoundnessCheck> SpotCheckOrigin(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                            double certified_gamma, unsigned seed, int count,
                                            const OriginOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> stretch(0.0, 1.0);
  std::vector<SoundnessCheck> out;
  for (int k = 0; k < count; ++k) {
    const double probe = certified_gamma * (1.0 + stretch(rng));
    out.push_back({certified_gamma, probe, CheckOrigin(sys, polytope, probe, options).feasible()});
  }
  return out;
}

std::vector<SoundnessCheck> SpotCheckRho(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                         double gamma, double certified_rho, unsigned seed, int count,
                                         const ToleranceOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> shrink(0.05, 1.0);
  std::vector<SoundnessCheck> out;
  for (int k = 0; k < count; ++k) {
    const double probe = certified_rho * shrink(rng);
    const bool ok =
        Solve(lmi::AssembleTheorem1(sys, polytope, probe, gamma, options.assembly), options.solve).feasible();
    out.push_back({certified_rho, probe, ok});
  }
  return out;
}

std::vector<SoundnessCheck> SpotCheckL2(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                        double rho, const Matrix& C, double certified_varrho, unsigned seed,
                                        int count, const L2DriverOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> stretch(0.0, 1.0);
  std::vector<SoundnessCheck> out;
  for (int k = 0; k < count; ++k) {
    const double probe = certified_varrho * (1.0 + stretch(rng));
    out.push_back({certified_varrho, probe, CheckL2(sys, polytope, rho, C, probe, options).feasible()});
  }
  return out;
}

const char* ToString(SweepParameter parameter) {
  return parameter == SweepParameter::kUmax ? "u_max" : "epsilon";
}

const char* ToString(SweepDriver driver) {
  switch (driver) {
    case SweepDriver::kOriginTolerance: return "origin-tolerance";
    case SweepDriver::kMaxTolerance: return "max-tolerance";
    case SweepDriver::kRegion: return "region";
  }
  return "unknown";
}

namespace {

std::string ObjectiveName(SweepDriver driver) {
  switch (driver) {
    case SweepDriver::kOriginTolerance: return "n_rho";
    case SweepDriver::kMaxTolerance: return "n_rho";
    case SweepDriver::kRegion: return "trace_z";
  }
  return "objective";
}

ReportStatus ParseReportStatus(const std::string& s) {
  if (s == "feasible") return ReportStatus::kFeasible;
  if (s == "infeasible") return ReportStatus::kInfeasible;
  return ReportStatus::kNumericalFailure;
}

SweepPoint RunPoint(const NetworkModel& base, SweepParameter parameter, double value, SweepDriver driver,
                    const SweepOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  NetworkModel model = parameter == SweepParameter::kUmax ? base.WithUmax(value)
                                                          : base.WithPolytope(base.polytope.Scaled(value));
  const DisagreementSystem sys = BuildDisagreementSystem(model);
  SweepPoint point;
  point.value = value;
  switch (driver) {
    case SweepDriver::kOriginTolerance: {
      OriginOptions o;
      o.solve = options.solve;
      o.assembly = options.assembly;
      OriginResult r = MaxToleranceFromOrigin(sys, model.polytope, o);
      point.status = r.certified ? ReportStatus::kFeasible : r.report.status;
      point.objective = r.certified ? r.n_rho : 0.0;
      point.ceiling_hit = r.ceiling_hit;
      break;
    }
    case SweepDriver::kMaxTolerance: {
      ToleranceOptions o;
      o.solve = options.solve;
      o.assembly = options.assembly;
      o.parallel = false;
      const auto grid = options.gamma_grid.empty() ? DefaultGammaGrid() : options.gamma_grid;
      ToleranceResult r = MaxDisturbanceTolerance(sys, model.polytope, grid, o);
      point.status = r.any_certified ? ReportStatus::kFeasible : ReportStatus::kInfeasible;
      point.objective = r.any_certified ? sys.num_agents * r.best.rho : 0.0;
      point.ceiling_hit = r.any_certified && r.best.ceiling_hit;
      break;
    }
    case SweepDriver::kRegion: {
      RegionOptions o;
      o.solve = options.solve;
      o.assembly = options.assembly;
      o.fixed_rho = options.region_fixed_rho;
      RegionResult r = MaximizeRegion(sys, model.polytope, options.region_gamma, o);
      point.status = r.certified ? ReportStatus::kFeasible : r.report.status;
      point.objective = r.certified ? r.trace : 0.0;
      break;
    }
  }
  point.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return point;
}

std::string CachePath(const SweepOptions& options, const std::string& fingerprint, SweepParameter parameter,
                      SweepDriver driver, double value) {
  char name[160];
  std::snprintf(name, sizeof name, "%s-%s-%.12g-%s.json", ToString(driver), ToString(parameter), value,
                fingerprint.c_str());
  return (std::filesystem::path(options.cache_dir) / name).string();
}

std::string Fingerprint(const NetworkModel& model, const SweepOptions& options) {
  std::ostringstream key;
  key << SerializeModel(model) << '|' << lmi::ToString(options.assembly.convention) << '|'
      << options.assembly.definiteness_margin << '|' << options.region_gamma << '|'
      << options.solve.relative_tol << '|' << options.region_fixed_rho.value_or(-1.0);
  for (double g : options.gamma_grid) key << ',' << g;
  return Hex(std::hash<std::string>{}(key.str()));
}

std::optional<SweepPoint> LoadCached(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    json j = json::parse(in);
    SweepPoint p;
    p.value = j.at("value").get<double>();
    p.objective = j.at("objective").get<double>();
    p.status = ParseReportStatus(j.at("status").get<std::string>());
    p.ceiling_hit = j.at("ceiling_hit").get<bool>();
    p.seconds = j.at("seconds").get<double>();
    p.from_cache = true;
    return p;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

void StoreCached(const std::string& path, const SweepPoint& p) {
  json j = {{"value", p.value},
            {"objective", p.objective},
            {"status", ToString(p.status)},
            {"ceiling_hit", p.ceiling_hit},
            {"seconds", p.seconds}};
  const std::string tmp = path + ".tmp" + std::to_string(omp_get_thread_num());
  {
    std::ofstream out(tmp);
    out << j.dump(2) << '\n';
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
}

}  // namespace

SweepResult Sweep(const NetworkModel& model, SweepParameter parameter, const std::vector<double>& grid,
                  SweepDriver driver, const SweepOptions& options) {
  if (grid.empty()) throw ValidationError("sweep grid is empty");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (!(grid[k] > grid[k - 1])) throw ValidationError("sweep grid must be strictly increasing");
  }
  for (double v : grid) {
    if (!(v > 0.0)) throw ValidationError("sweep values must be positive");
  }
  SweepResult result;
  result.parameter = parameter;
  result.driver = driver;
  result.objective_name = ObjectiveName(driver);
  result.points.resize(grid.size());
  SweepOptions inner = options;
  if (options.parallel) inner.solve.solver.parallel_kernels = false;
  std::string fingerprint;
  if (!options.cache_dir.empty()) {
    std::filesystem::create_directories(options.cache_dir);
    fingerprint = Fingerprint(model, options);
  }
  const int n = static_cast<int>(grid.size());
#pragma omp parallel for schedule(dynamic) if (options.parallel)
  for (int k = 0; k < n; ++k) {
    std::string path;
    if (!options.cache_dir.empty()) {
      path = CachePath(options, fingerprint, parameter, driver, grid[k]);
      if (auto cached = LoadCached(path)) {
        result.points[k] = *cached;
        continue;
      }
    }
    try {
      result.points[k] = RunPoint(model, parameter, grid[k], driver, inner);
    } catch (const std::exception&) {
      result.points[k].value = grid[k];
      result.points[k].status = ReportStatus::kNumericalFailure;
    }
    if (!path.empty()) StoreCached(path, result.points[k]);
  }
  return result;
}

std::string ReportToJson(const SolveReport& report) {
  json j;
  j["status"] = ToString(report.status);
  j["solver_status"] = sdp::ToString(report.solver_status);
  j["objective"] = report.objective;
  j["max_violation"] = report.max_violation;
  j["iterations"] = report.iterations;
  j["seconds"] = report.seconds;
  json values = json::object();
  for (const auto& [name, m] : report.values) values[name] = MatrixJson(m);
  j["values"] = values;
  json margins = json::array();
  for (const auto& m : report.margins) margins.push_back({{"constraint", m.label}, {"violation", m.violation}});
  j["margins"] = margins;
  return j.dump(2);
}

std::string SweepToCsv(const SweepResult& result) {
  std::ostringstream os;
  os.precision(10);
  os << ToString(result.parameter) << ',' << result.objective_name << ",status,ceiling_hit,seconds\n";
  for (const auto& p : result.points) {
    os << p.value << ',' << p.objective << ',' << ToString(p.status) << ',' << (p.ceiling_hit ? 1 : 0) << ','
       << p.seconds << '\n';
  }
  return os.str();
}

std::string SweepToJson(const SweepResult& result) {
  json j;
  j["parameter"] = ToString(result.parameter);
  j["driver"] = ToString(result.driver);
  j["objective"] = result.objective_name;
  json points = json::array();
  for (const auto& p : result.points) {
    points.push_back({{"value", p.value},
                      {"objective", p.objective},
                      {"status", ToString(p.status)},
                      {"ceiling_hit", p.ceiling_hit},
                      {"from_cache", p.from_cache},
                      {"seconds", p.seconds}});
  }
  j["points"] = points;
  return j.dump(2);
}

std::string MarginsToCsv(const SolveReport& report) {
  std::ostringstream os;
  os.precision(10);
  os << "constraint,violation\n";
  for (const auto& m : report.margins) os << '"' << m.label << "\"," << m.violation << '\n';
  return os.str();
}

}  // namespace satcons::opt
