#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "artifacts.hpp"
#include "satcons/disagreement.hpp"
#include "satcons/lmi.hpp"
#include "satcons/optimize.hpp"
#include "satcons/regions.hpp"
#include "satcons/simulate.hpp"
#include "satcons/sysmodel.hpp"
#include "usage.hpp"

namespace satcons::cli {

namespace {

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json Optional(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Shared state of one command invocation.
class Run {
 public:
  Run(const CommonOptions& common, std::string command)
      : common_(common), dir_(common.out_dir), model_(LoadModelFile(common.config)) {
    manifest_.command = std::move(command);
    manifest_.config = common.config;
    manifest_.seed = common.seed;
    manifest_.parameters["sector_convention"] = common.convention;
    manifest_.parameters["out_dir"] = common.out_dir;
    assembly_.convention = lmi::ParseSectorConvention(common.convention);
    manifest_.warnings = model_.warnings;
  }

  NetworkModel& model() { return model_; }
  const NetworkModel& model() const { return model_; }
  const RunDirectory& dir() const { return dir_; }
  RunManifest& manifest() { return manifest_; }
  const lmi::AssemblyOptions& assembly() const { return assembly_; }
  int num_agents() const { return model_.num_agents(); }
  int num_modes() const { return model_.num_modes(); }

  void Plan(const std::string& output) { manifest_.outputs.push_back(dir_.Path(output)); }
  void Warn(const std::string& message) {
    manifest_.warnings.push_back(message);
    std::cerr << "warning: " << message << '\n';
  }
  void Say(const std::string& line) const {
    if (!common_.quiet) std::cout << line << '\n';
  }

  // Written before any computation.
  void Begin() { dir_.WriteJson("manifest.json", manifest_.ToJson()); }
  int Finish(int code, const std::string& status) {
    json doc = manifest_.ToJson();
    doc["result"] = {{"exit_code", code}, {"status", status}};
    dir_.WriteJson("manifest.json", doc);
    return code;
  }

 private:
  CommonOptions common_;
  RunDirectory dir_;
  NetworkModel model_;
  RunManifest manifest_;
  lmi::AssemblyOptions assembly_;
};

std::optional<double> ResolveRho(const BudgetOptions& b, int num_agents) {
  if (b.rho && b.n_rho) throw UsageError("give either --rho or --n-rho, not both");
  if (b.rho) return *b.rho;
  if (b.n_rho) return *b.n_rho / num_agents;
  return std::nullopt;
}

void PutBudget(json& params, const BudgetOptions& b) {
  params["rho"] = Optional(b.rho);
  params["n_rho"] = Optional(b.n_rho);
  params["eta"] = Optional(b.eta);
  params["gamma"] = Optional(b.gamma);
}

std::vector<double> GridOrDefault(const std::string& text) {
  return text.empty() ? opt::DefaultGammaGrid() : ParseList(text);
}

Certificate MakeCertificate(const std::string& family, const Run& run, double gamma, double rho, double eta,
                            double outer_level, const opt::SolveReport& report) {
  Certificate c;
  c.family = family;
  c.convention = lmi::ToString(run.assembly().convention);
  c.num_agents = run.num_agents();
  c.gamma = gamma;
  c.rho = rho;
  c.eta = eta;
  c.outer_level = outer_level;
  c.shapes = ShapesFromReport(report, run.num_modes());
  c.report = json::parse(opt::ReportToJson(report));
  return c;
}

int SweepExitCode(const opt::SweepResult& r) {
  bool infeasible = false;
  for (const auto& p : r.points) {
    if (p.status == opt::ReportStatus::kFeasible) return kExitOk;
    if (p.status == opt::ReportStatus::kInfeasible) infeasible = true;
  }
  return infeasible ? kExitInfeasible : kExitNumerical;
}

void WriteReport(Run& run, const opt::SolveReport& report) {
  run.dir().Write("report.json", opt::ReportToJson(report) + "\n");
  run.dir().Write("margins.csv", opt::MarginsToCsv(report));
}

}  // namespace

int RunAnalyze(const AnalyzeOptions& o) {
  Run run(o.common, "analyze");
  const int n = run.num_agents();
  const auto rho = ResolveRho(o.budget, n);
  if (!rho) throw UsageError("--rho or --n-rho is required");
  if (*rho < 0.0) throw UsageError("rho must be nonnegative");
  if (o.budget.eta && *o.budget.eta <= 0.0) throw UsageError("eta must be positive");
  if (o.budget.gamma && (*o.budget.gamma <= 0.0 || *o.budget.gamma > 1.0)) throw UsageError("gamma must be in (0, 1]");
  const bool scan = !o.from_origin && !o.budget.gamma && !o.budget.eta;
  const std::vector<double> grid = scan ? GridOrDefault(o.gamma_grid) : std::vector<double>{};

  auto& params = run.manifest().parameters;
  PutBudget(params, o.budget);
  params["resolved_rho"] = *rho;
  params["from_origin"] = o.from_origin;
  params["gamma_grid"] = grid;
  for (const char* f : {"report.json", "margins.csv", "certificate.json"}) run.Plan(f);
  if (scan) run.Plan("gamma_scan.csv");
  run.Begin();

  const DisagreementSystem sys = BuildDisagreementSystem(run.model());
  const auto& poly = run.model().polytope;
  opt::SolveOptions solve;
  std::string family;
  double gamma = 0.0, eta = 0.0;
  opt::SolveReport report;

  if (o.from_origin) {
    family = "origin";
    eta = o.budget.eta.value_or(1.0);
    gamma = o.budget.gamma ? *o.budget.gamma : lmi::GammaFromOrigin(n, *rho, eta);
    opt::OriginOptions oo;
    oo.assembly = run.assembly();
    report = opt::CheckOrigin(sys, poly, gamma, oo);
  } else {
    family = "theorem1";
    if (!scan) {
      gamma = o.budget.gamma ? *o.budget.gamma : lmi::GammaFromStart(n, *rho, *o.budget.eta);
      report = opt::Solve(lmi::AssembleTheorem1(sys, poly, *rho, gamma, run.assembly()), solve);
    } else {
      // Largest certified gamma gives the tightest outer level 1 / gamma.
      std::ostringstream csv;
      csv << "gamma,status,max_violation\n";
      bool found = false, any_infeasible = false;
      opt::SolveReport last;
      for (double g : grid) {
        opt::SolveReport r = opt::Solve(lmi::AssembleTheorem1(sys, poly, *rho, g, run.assembly()), solve);
        csv << Num(g) << ',' << opt::ToString(r.status) << ',' << Num(r.max_violation) << '\n';
        if (r.feasible() && (!found || g > gamma)) {
          found = true;
          gamma = g;
          report = r;
        }
        if (r.status == opt::ReportStatus::kInfeasible) any_infeasible = true;
        last = r;
      }
      run.dir().Write("gamma_scan.csv", csv.str());
      if (!found) {
        report = last;
        if (any_infeasible) report.status = opt::ReportStatus::kInfeasible;
      }
    }
    if (gamma > 0.0 && *rho > 0.0) eta = (1.0 / gamma - 1.0) / (n * *rho);
  }

  WriteReport(run, report);
  run.Say("family " + family);
  run.Say("status " + std::string(opt::ToString(report.status)));
  run.Say("n_rho " + Num(n * *rho));
  if (report.feasible()) {
    const Certificate cert = MakeCertificate(family, run, gamma, *rho, eta, 1.0 / gamma, report);
    run.dir().WriteJson("certificate.json", cert.ToJson());
    run.Say("gamma " + Num(gamma));
    run.Say("outer_level " + Num(cert.outer_level));
  }
  return run.Finish(ExitCodeFor(report.status), opt::ToString(report.status));
}

int RunMaxTolerance(const MaxToleranceOptions& o) {
  Run run(o.common, "max-tolerance");
  const int n = run.num_agents();
  auto& params = run.manifest().parameters;
  params["from_origin"] = o.from_origin;
  params["umax_grid"] = o.umax_grid.empty() ? std::vector<double>{} : ParseList(o.umax_grid);
  params["gamma_grid"] = o.from_origin ? std::vector<double>{} : GridOrDefault(o.gamma_grid);
  params["cache_dir"] = o.cache_dir;

  if (!o.umax_grid.empty()) {
    run.Plan("umax_sweep.csv");
    run.Plan("umax_sweep.json");
    run.Begin();
    opt::SweepOptions so;
    so.assembly = run.assembly();
    so.cache_dir = o.cache_dir;
    if (!o.from_origin) so.gamma_grid = GridOrDefault(o.gamma_grid);
    const auto driver = o.from_origin ? opt::SweepDriver::kOriginTolerance : opt::SweepDriver::kMaxTolerance;
    const opt::SweepResult r = opt::Sweep(run.model(), opt::SweepParameter::kUmax, ParseList(o.umax_grid), driver, so);
    const std::string csv = opt::SweepToCsv(r);
    run.dir().Write("umax_sweep.csv", csv);
    run.dir().Write("umax_sweep.json", opt::SweepToJson(r) + "\n");
    for (const auto& p : r.points) {
      run.Say("u_max " + Num(p.value) + " n_rho " + Num(p.objective) + " " + opt::ToString(p.status) +
              (p.ceiling_hit ? " (ceiling hit)" : ""));
    }
    const int code = SweepExitCode(r);
    return run.Finish(code, code == kExitOk ? "feasible" : "no certified point");
  }

  run.Plan("tolerance.json");
  run.Plan("certificate.json");
  run.Plan("margins.csv");
  run.Begin();
  const DisagreementSystem sys = BuildDisagreementSystem(run.model());
  const auto& poly = run.model().polytope;

  if (o.from_origin) {
    opt::OriginOptions oo;
    oo.assembly = run.assembly();
    const opt::OriginResult r = opt::MaxToleranceFromOrigin(sys, poly, oo);
    json doc = {{"family", "origin"},
                {"certified", r.certified},
                {"n_rho", r.n_rho},
                {"gamma", r.gamma},
                {"minimized_gamma", r.minimized_gamma},
                {"ceiling_hit", r.ceiling_hit},
                {"ceiling", 1.0 / oo.gamma_floor},
                {"report", json::parse(opt::ReportToJson(r.report))}};
    run.dir().WriteJson("tolerance.json", doc);
    run.dir().Write("margins.csv", opt::MarginsToCsv(r.report));
    if (!r.certified) {
      run.Say("status " + std::string(opt::ToString(r.report.status)));
      return run.Finish(ExitCodeFor(r.report.status), opt::ToString(r.report.status));
    }
    if (r.ceiling_hit) {
      run.Say("n_rho unbounded (ceiling hit at " + Num(1.0 / oo.gamma_floor) + ")");
      return run.Finish(kExitOk, "ceiling hit");
    }
    const Certificate cert = MakeCertificate("origin", run, r.gamma, r.n_rho / n, 1.0, 1.0 / r.gamma, r.report);
    run.dir().WriteJson("certificate.json", cert.ToJson());
    run.Say("n_rho " + Num(r.n_rho));
    return run.Finish(kExitOk, "feasible");
  }

  opt::ToleranceOptions to;
  to.assembly = run.assembly();
  const opt::ToleranceResult r = opt::MaxDisturbanceTolerance(sys, poly, GridOrDefault(o.gamma_grid), to);
  json grid = json::array();
  bool any_infeasible = false;
  for (const auto& p : r.grid) {
    grid.push_back({{"gamma", p.gamma},
                    {"certified", p.certified},
                    {"n_rho", n * p.rho},
                    {"eta", p.eta},
                    {"ceiling_hit", p.ceiling_hit},
                    {"status", opt::ToString(p.status)}});
    if (p.status == opt::ReportStatus::kInfeasible) any_infeasible = true;
  }
  json doc = {{"family", "theorem1"},
              {"certified", r.any_certified},
              {"n_rho", r.any_certified ? n * r.best.rho : 0.0},
              {"gamma", r.best.gamma},
              {"eta", r.best.eta},
              {"ceiling_hit", r.any_certified && r.best.ceiling_hit},
              {"grid", grid}};
  run.dir().WriteJson("tolerance.json", doc);
  if (!r.any_certified) {
    run.Say("status infeasible");
    const int code = any_infeasible ? kExitInfeasible : kExitNumerical;
    return run.Finish(code, code == kExitInfeasible ? "infeasible" : "numerical-failure");
  }
  run.dir().Write("margins.csv", opt::MarginsToCsv(r.best_report));
  if (r.best.ceiling_hit) {
    run.Say("n_rho unbounded (ceiling hit at " + Num(n * to.rho_ceiling) + ")");
    return run.Finish(kExitOk, "ceiling hit");
  }
  const Certificate cert =
      MakeCertificate("theorem1", run, r.best.gamma, r.best.rho, r.best.eta, 1.0 / r.best.gamma, r.best_report);
  run.dir().WriteJson("certificate.json", cert.ToJson());
  run.Say("n_rho " + Num(n * r.best.rho));
  run.Say("gamma " + Num(r.best.gamma));
  return run.Finish(kExitOk, "feasible");
}

int RunSynthesize(const SynthesizeOptions& o) {
  Run run(o.common, "synthesize");
  const int n = run.num_agents();
  const auto rho = ResolveRho(o.budget, n);
  if (!rho) throw UsageError("--rho or --n-rho is required");
  if (!o.budget.gamma && !o.budget.eta) throw UsageError("--gamma or --eta is required");
  const double gamma = o.budget.gamma ? *o.budget.gamma : lmi::GammaFromStart(n, *rho, *o.budget.eta);
  if (gamma <= 0.0 || gamma > 1.0) throw UsageError("gamma must be in (0, 1]");
  auto& params = run.manifest().parameters;
  PutBudget(params, o.budget);
  params["resolved_rho"] = *rho;
  params["resolved_gamma"] = gamma;
  if (run.model().gain) run.Warn("config already contains a gain K; it is replaced by the synthesized gain");
  for (const char* f : {"synthesis.json", "gain.json", "closed_loop.json", "report.json", "margins.csv",
                        "certificate.json"}) {
    run.Plan(f);
  }
  run.Begin();

  const auto& poly = run.model().polytope;
  const opt::SynthesisResult syn =
      opt::SynthesizeGain(BuildOpenLoopSystem(run.model()), poly, *rho, gamma, {}, run.assembly());
  json synthesis = json::parse(opt::ReportToJson(syn.report));
  synthesis["obstruction"] = syn.obstruction;
  run.dir().WriteJson("synthesis.json", synthesis);
  if (!syn.feasible) {
    run.Say("status " + std::string(opt::ToString(syn.report.status)));
    if (!syn.obstruction.empty()) run.Say("obstruction " + syn.obstruction);
    return run.Finish(ExitCodeFor(syn.report.status), opt::ToString(syn.report.status));
  }
  const double eta = (1.0 / gamma - 1.0) / (n * *rho);
  run.dir().WriteJson("gain.json", {{"K", MatrixToJson(syn.K)}, {"rho", *rho}, {"gamma", gamma}, {"eta", eta}});
  const NetworkModel closed = run.model().WithGain(syn.K);
  run.dir().Write("closed_loop.json", SerializeModel(closed) + "\n");

  const opt::SolveReport re =
      opt::Solve(lmi::AssembleTheorem1(BuildDisagreementSystem(closed), closed.polytope, *rho, gamma, run.assembly()));
  WriteReport(run, re);
  std::ostringstream k;
  k << syn.K.format(Eigen::IOFormat(6, 0, " ", "; ", "", "", "[", "]"));
  run.Say("K " + k.str());
  run.Say("reanalysis " + std::string(opt::ToString(re.status)));
  if (!re.feasible()) {
    // The synthesized point is itself an analysis certificate, so this is a solver failure.
    return run.Finish(kExitNumerical, "reanalysis failed");
  }
  const Certificate cert = MakeCertificate("theorem1", run, gamma, *rho, eta, 1.0 / gamma, re);
  run.dir().WriteJson("certificate.json", cert.ToJson());
  return run.Finish(kExitOk, "feasible");
}

int RunSweep(const SweepOptions& o) {
  Run run(o.common, "sweep");
  if (!o.eps_grid.empty() && !o.umax_grid.empty()) throw UsageError("give either --eps-grid or --umax-grid");
  if (o.eps_grid.empty() && o.umax_grid.empty() && o.region_eps.empty()) {
    throw UsageError("one of --eps-grid, --umax-grid or --region-eps is required");
  }
  if (o.gamma <= 0.0 || o.gamma >= 1.0) throw UsageError("--gamma must be in (0, 1)");
  const bool eps = !o.eps_grid.empty();
  opt::SweepDriver driver = eps ? opt::SweepDriver::kRegion : opt::SweepDriver::kOriginTolerance;
  if (!o.driver.empty()) {
    if (o.driver == "region") driver = opt::SweepDriver::kRegion;
    else if (o.driver == "origin-tolerance") driver = opt::SweepDriver::kOriginTolerance;
    else if (o.driver == "max-tolerance") driver = opt::SweepDriver::kMaxTolerance;
    else throw UsageError("unknown driver '" + o.driver + "'");
  }
  const std::vector<double> grid = ParseList(eps ? o.eps_grid : o.umax_grid);
  const std::vector<double> region_eps = ParseList(o.region_eps);
  const int nz = run.model().dynamics.m() * (run.num_agents() - 1);
  if (o.slice.size() != 2 || o.slice[0] == o.slice[1] || o.slice[0] < 0 || o.slice[1] < 0 || o.slice[0] >= nz ||
      o.slice[1] >= nz) {
    throw UsageError("--slice needs two distinct coordinates in [0, " + std::to_string(nz) + ")");
  }
  auto& params = run.manifest().parameters;
  params["parameter"] = grid.empty() ? json(nullptr) : json(eps ? "epsilon" : "u_max");
  params["grid"] = grid;
  params["driver"] = opt::ToString(driver);
  params["gamma"] = o.gamma;
  params["region_rho"] = Optional(o.region_rho);
  params["region_eps"] = region_eps;
  params["slice"] = o.slice;
  params["cache_dir"] = o.cache_dir;
  if (!grid.empty()) {
    run.Plan("sweep.csv");
    run.Plan("sweep.json");
  }
  if (!region_eps.empty()) run.Plan("regions.json");
  run.Begin();

  int code = kExitOk;
  if (!grid.empty()) {
    opt::SweepOptions so;
    so.assembly = run.assembly();
    so.region_gamma = o.gamma;
    so.region_fixed_rho = o.region_rho;
    so.cache_dir = o.cache_dir;
    const auto parameter = eps ? opt::SweepParameter::kEpsilon : opt::SweepParameter::kUmax;
    const opt::SweepResult r = opt::Sweep(run.model(), parameter, grid, driver, so);
    run.dir().Write("sweep.csv", opt::SweepToCsv(r));
    run.dir().Write("sweep.json", opt::SweepToJson(r) + "\n");
    for (const auto& p : r.points) {
      run.Say(std::string(opt::ToString(parameter)) + " " + Num(p.value) + " " + r.objective_name + " " +
              Num(p.objective) + " " + opt::ToString(p.status));
    }
    code = SweepExitCode(r);
  }

  if (!region_eps.empty()) {
    opt::RegionOptions ro;
    ro.assembly = run.assembly();
    ro.fixed_rho = o.region_rho;
    json entries = json::array();
    bool any = false;
    for (double e : region_eps) {
      if (e <= 0.0) throw UsageError("--region-eps values must be positive");
      const NetworkModel scaled = run.model().WithPolytope(run.model().polytope.Scaled(e));
      const opt::RegionResult r = opt::MaximizeRegion(BuildDisagreementSystem(scaled), scaled.polytope, o.gamma, ro);
      json entry = {{"epsilon", e},
                    {"certified", r.certified},
                    {"status", opt::ToString(r.report.status)},
                    {"gamma", o.gamma},
                    {"rho", r.rho},
                    {"trace", r.trace}};
      if (r.certified) {
        any = true;
        const regions::EllipsoidFamily family(r.P, 1.0);
        entry["region"] = json::parse(regions::ExportJson(family, o.slice[0], o.slice[1], &r.Z));
      }
      run.Say("region epsilon " + Num(e) + " trace " + Num(r.trace) + " " + opt::ToString(r.report.status));
      entries.push_back(entry);
    }
    run.dir().WriteJson("regions.json", {{"gamma", o.gamma}, {"slice", o.slice}, {"entries", entries}});
    if (grid.empty()) code = any ? kExitOk : kExitInfeasible;
  }
  return run.Finish(code, code == kExitOk ? "feasible" : "no certified point");
}

int RunSimulate(const SimulateOptions& o) {
  Run run(o.common, "simulate");
  const NetworkModel& model = run.model();
  const int n = run.num_agents(), q = model.dynamics.q();
  if (o.start != "boundary" && o.start != "origin") throw UsageError("--start must be boundary or origin");
  sim::DisturbanceKind kind;
  if (o.disturbance == "zero") kind = sim::DisturbanceKind::kZero;
  else if (o.disturbance == "ramp") kind = sim::DisturbanceKind::kRamp;
  else if (o.disturbance == "constant") kind = sim::DisturbanceKind::kConstant;
  else throw UsageError("--disturbance must be zero, ramp or constant");
  if (o.realizations < 1) throw UsageError("--realizations must be positive");
  if (o.step <= 0.0 || o.horizon <= 0.0) throw UsageError("--step and --horizon must be positive");
  std::vector<int> agents = o.agents.empty() ? std::vector<int>{1} : o.agents;
  for (int& a : agents) {
    if (a < 1 || a > n) throw UsageError("--agent must be in [1, " + std::to_string(n) + "]");
    a -= 1;
  }
  Vector amplitude = Vector::Ones(q);
  if (!o.amplitude.empty()) {
    const auto values = ParseList(o.amplitude);
    if (static_cast<int>(values.size()) != q) throw UsageError("--amplitude needs " + std::to_string(q) + " values");
    amplitude = Eigen::Map<const Vector>(values.data(), q);
  }

  auto& params = run.manifest().parameters;
  params["certificate"] = o.certificate;
  params["start"] = o.start;
  params["disturbance"] = o.disturbance;
  params["agents"] = o.agents.empty() ? std::vector<int>{1} : o.agents;
  params["amplitude"] = std::vector<double>(amplitude.data(), amplitude.data() + q);
  params["budget"] = Optional(o.budget);
  params["gamma"] = o.gamma;
  params["region_rho"] = Optional(o.region_rho);
  params["horizon"] = o.horizon;
  params["step"] = o.step;
  params["realizations"] = o.realizations;
  params["export_count"] = o.export_count;
  params["store_every"] = o.store_every;
  params["output_identity"] = o.output_identity;
  params["serial"] = o.serial;
  if (o.certificate.empty()) run.Plan("certificate.json");
  run.Plan("batch.json");
  const int exports = std::min(o.export_count, o.realizations);
  for (int k = 1; k <= exports; ++k) {
    run.Plan("realization_" + std::to_string(k) + ".csv");
    run.Plan("modes_" + std::to_string(k) + ".csv");
  }
  run.Begin();

  const DisagreementSystem sys = BuildDisagreementSystem(model);
  Certificate cert;
  if (!o.certificate.empty()) {
    std::ifstream in(o.certificate);
    if (!in) throw ConfigError("<certificate>", "cannot open " + o.certificate);
    try {
      cert = Certificate::FromJson(json::parse(in));
    } catch (const json::exception& e) {
      throw ConfigError("<certificate>", e.what());
    }
  } else if (o.start == "origin") {
    opt::OriginOptions oo;
    oo.assembly = run.assembly();
    const opt::OriginResult r = opt::MaxToleranceFromOrigin(sys, model.polytope, oo);
    if (!r.certified || r.ceiling_hit) {
      run.Say("no bounded origin certificate: " + std::string(opt::ToString(r.report.status)));
      const int code = r.certified ? kExitInfeasible : ExitCodeFor(r.report.status);
      return run.Finish(code, "no certificate");
    }
    cert = MakeCertificate("origin", run, r.gamma, r.n_rho / n, 1.0, 1.0 / r.gamma, r.report);
  } else {
    opt::RegionOptions ro;
    ro.assembly = run.assembly();
    ro.fixed_rho = o.region_rho;
    const opt::RegionResult r = opt::MaximizeRegion(sys, model.polytope, o.gamma, ro);
    if (!r.certified) {
      run.Say("no region certificate: " + std::string(opt::ToString(r.report.status)));
      return run.Finish(ExitCodeFor(r.report.status), "no certificate");
    }
    cert = MakeCertificate("region", run, r.gamma, r.rho, (1.0 / r.gamma - 1.0) / (n * r.rho), 1.0 / r.gamma,
                           r.report);
    cert.Z = r.Z;
  }
  if (cert.num_agents != n || cert.shapes.size() != static_cast<std::size_t>(model.num_modes()) ||
      cert.shapes[0].rows() != sys.n_z) {
    throw ConfigError("<certificate>", "certificate does not match the config dimensions");
  }
  if (o.certificate.empty()) run.dir().WriteJson("certificate.json", cert.ToJson());

  const regions::EllipsoidFamily family(cert.shapes, 1.0);
  sim::BatchSpec spec;
  spec.start = o.start == "origin" ? sim::StartKind::kOrigin : sim::StartKind::kRegionBoundary;
  spec.realizations = o.realizations;
  spec.seed = o.common.seed;
  spec.integrate.step = o.step;
  spec.integrate.horizon = o.horizon;
  if (o.output_identity) spec.output = Matrix::Identity(sys.n_z, sys.n_z);
  const double budget = o.budget.value_or(cert.n_rho());
  if (kind != sim::DisturbanceKind::kZero) spec.disturbance = sim::MakeDisturbance(kind, agents, amplitude, budget);

  const sim::BatchReport batch = o.serial ? sim::RunBatchSerial(model, family, cert.outer_level, spec)
                                          : sim::RunBatchParallel(model, family, cert.outer_level, spec);
  json disturbance = {{"kind", sim::ToString(spec.disturbance.kind)},
                      {"agents", params["agents"]},
                      {"amplitude", params["amplitude"]},
                      {"budget", kind == sim::DisturbanceKind::kZero ? 0.0 : budget},
                      {"cutoff", std::isfinite(spec.disturbance.cutoff) ? json(spec.disturbance.cutoff) : json(nullptr)},
                      {"energy", spec.disturbance.Energy(n, q)}};
  const bool has_ratio = batch.mean_initial_square > 0.0;
  const json ms_ratio = has_ratio ? json(batch.mean_final_square / batch.mean_initial_square) : json(nullptr);
  json doc = {{"certificate", {{"family", cert.family}, {"n_rho", cert.n_rho()}, {"gamma", cert.gamma},
                               {"outer_level", cert.outer_level}}},
              {"start", o.start},
              {"disturbance", disturbance},
              {"horizon", o.horizon},
              {"step", o.step},
              {"mean_square_ratio", ms_ratio},
              {"batch", json::parse(sim::BatchToJson(batch))}};
  run.dir().WriteJson("batch.json", doc);

  for (int k = 0; k < exports; ++k) {
    const sim::RealizationSetup setup = sim::PrepareRealization(model, family, spec, k);
    sim::IntegrateOptions io = spec.integrate;
    io.store_every = o.store_every;
    const sim::Realization r = sim::Integrate(model, sys, setup.modes, spec.disturbance, setup.x0, io);
    const std::string id = std::to_string(k + 1);
    run.dir().Write("realization_" + id + ".csv",
                    sim::RealizationToCsv(r, n, model.dynamics.m(), model.dynamics.p(), q));
    run.dir().Write("modes_" + id + ".csv", markov::TrajectoryToCsv(setup.modes));
  }

  run.Say("realizations " + std::to_string(o.realizations));
  run.Say("exited " + std::to_string(batch.exited));
  run.Say("violating_samples " + std::to_string(batch.violating_samples));
  if (has_ratio) run.Say("mean_square_ratio " + Num(ms_ratio.get<double>()));
  if (o.output_identity) run.Say("mean_output_energy " + Num(batch.mean_output_energy));
  return run.Finish(kExitOk, batch.exited == 0 ? "invariant" : "exits observed");
}

}  // namespace satcons::cli
