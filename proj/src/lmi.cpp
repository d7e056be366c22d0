#include "satcons/lmi.hpp"

#include <cmath>

namespace satcons::lmi {

namespace {

using Lower = std::vector<std::vector<std::optional<AffineExpr>>>;

AffineExpr He(const AffineExpr& e) { return e + e.Transpose(); }

AffineExpr Identity(int n) { return AffineExpr::Constant(Matrix::Identity(n, n)); }

void CheckPolytope(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope) {
  if (polytope.num_vertices() == 0) throw ValidationError("generator polytope has no vertices");
  if (polytope.num_modes() != sys.num_modes()) {
    throw ValidationError("polytope has " + std::to_string(polytope.num_modes()) + " modes, system has " +
                          std::to_string(sys.num_modes()));
  }
}

void CheckGamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in (0, 1)");
}

// An arrowhead block matrix: first row/column holds `corner`, every further
// diagonal block only couples to the first column.
struct Arrow {
  AffineExpr corner;
  std::vector<std::pair<AffineExpr, AffineExpr>> arms;  // (coupling row, diagonal)

  AffineExpr Build() const {
    Lower lower;
    lower.push_back({corner});
    for (std::size_t k = 0; k < arms.size(); ++k) {
      std::vector<std::optional<AffineExpr>> row(k + 2);
      row[0] = arms[k].first;
      row[k + 1] = arms[k].second;
      lower.push_back(std::move(row));
    }
    return AffineExpr::SymmetricBlocks(lower);
  }
};

// Shared variables and per-mode pieces of every analysis family.
struct Family {
  std::vector<AffineExpr> Y;
  std::vector<AffineExpr> X;
  AffineExpr S;
  std::vector<std::string> y_names;
};

Family DeclareVariables(LmiProblem& prob, const DisagreementSystem& sys, const AssemblyOptions& options,
                        bool shared_structured_y) {
  Family fam;
  fam.S = prob.Expr(prob.AddDiagonal("S", sys.n_u));
  prob.AddConstraint("S > 0", fam.S, Sense::kPositiveSemidefinite, options.definiteness_margin);
  if (shared_structured_y) {
    AffineExpr F = prob.Expr(prob.AddSymmetric("F", sys.m));
    prob.AddConstraint("F > 0", F, Sense::kPositiveSemidefinite, options.definiteness_margin);
    AffineExpr ybar = Kron(Matrix::Identity(sys.num_agents - 1, sys.num_agents - 1), F);
    fam.Y.assign(sys.num_modes(), ybar);
  }
  for (int l = 0; l < sys.num_modes(); ++l) {
    if (!shared_structured_y) {
      fam.Y.push_back(prob.Expr(prob.AddSymmetric(YName(l), sys.n_z)));
      fam.y_names.push_back(YName(l));
      prob.AddConstraint(YName(l) + " > 0", fam.Y.back(), Sense::kPositiveSemidefinite,
                         options.definiteness_margin);
    }
    fam.X.push_back(prob.Expr(prob.AddFull(XName(l), sys.n_u, sys.n_z)));
  }
  return fam;
}

AffineExpr SectorRow(const DisagreementSystem& sys, const Family& fam, int l, SectorConvention convention) {
  AffineExpr sb = fam.S * Matrix(sys.sat_input_map.transpose());
  return convention == SectorConvention::kConsistent ? sb + fam.X[l] : sb - fam.X[l];
}

// R_l' as a coupling row and -Q_l as its diagonal block. Zero rates keep their
// (zero) blocks.
std::pair<AffineExpr, AffineExpr> CouplingArm(const DisagreementSystem& sys, const Family& fam, const Matrix& pi,
                                              int l) {
  const int s = sys.num_modes();
  const int nz = sys.n_z;
  std::vector<std::vector<AffineExpr>> r_rows;
  std::vector<std::vector<AffineExpr>> q_grid;
  for (int j = 0; j < s; ++j) {
    if (j == l) continue;
    r_rows.push_back({std::sqrt(pi(l, j)) * fam.Y[l]});
    std::vector<AffineExpr> q_row;
    for (int jj = 0; jj < s; ++jj) {
      if (jj == l) continue;
      q_row.push_back(jj == j ? -fam.Y[j] : AffineExpr(nz, nz));
    }
    q_grid.push_back(std::move(q_row));
  }
  return {AffineExpr::Blocks(r_rows), AffineExpr::Blocks(q_grid)};
}

void AddSaturationRows(LmiProblem& prob, const DisagreementSystem& sys, int l, const AffineExpr& Y,
                       const AffineExpr& gain_rows, const AffineExpr& X, const AffineExpr& corner) {
  for (int q = 0; q < sys.n_u; ++q) {
    AffineExpr row = gain_rows.Row(q) - X.Row(q);
    AffineExpr block = AffineExpr::SymmetricBlocks({{Y}, {row, corner}});
    prob.AddConstraint("saturation mode " + std::to_string(l + 1) + " row " + std::to_string(q + 1), block,
                       Sense::kPositiveSemidefinite);
  }
}

AffineExpr ScalarConst(double v) { return AffineExpr::Constant(Matrix::Constant(1, 1, v)); }

void RequireGain(const DisagreementSystem& sys) {
  if (static_cast<int>(sys.feedback_rows.size()) != sys.num_modes()) {
    throw ValidationError("system has no feedback gain; use the synthesis family");
  }
}

// Everything shared by the start-in-level-set family: one arrowhead block per
// (mode, vertex). `disturbance_arm` builds the disturbance row and diagonal.
template <typename DisturbanceArm>
void AddMainBlocks(LmiProblem& prob, const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                   const Family& fam, const std::vector<AffineExpr>& lambda_base, const AssemblyOptions& options,
                   DisturbanceArm disturbance_arm, const AffineExpr* constant_lambda_term = nullptr,
                   const std::optional<std::pair<Matrix, AffineExpr>>& output_arm = std::nullopt) {
  const int s = sys.num_modes();
  for (int i = 0; i < polytope.num_vertices(); ++i) {
    const Matrix& pi = polytope.vertices()[i];
    for (int l = 0; l < s; ++l) {
      Arrow arrow;
      arrow.corner = lambda_base[l] + pi(l, l) * fam.Y[l];
      if (constant_lambda_term) arrow.corner = arrow.corner + *constant_lambda_term;
      arrow.arms.emplace_back(SectorRow(sys, fam, l, options.convention), -2.0 * fam.S);
      if (auto arm = disturbance_arm()) arrow.arms.push_back(*arm);
      if (s > 1) arrow.arms.push_back(CouplingArm(sys, fam, pi, l));
      if (output_arm) arrow.arms.emplace_back(output_arm->first * fam.Y[l], output_arm->second);
      prob.AddConstraint("main mode " + std::to_string(l + 1) + " vertex " + std::to_string(i + 1),
                         arrow.Build(), Sense::kNegativeSemidefinite, options.constraint_margin);
    }
  }
}

std::vector<AffineExpr> ClosedLoopLambda(const DisagreementSystem& sys, const Family& fam) {
  std::vector<AffineExpr> out;
  for (int l = 0; l < sys.num_modes(); ++l) out.push_back(He(sys.drift[l] * fam.Y[l]));
  return out;
}

void FinishAnalysis(LmiProblem& prob, const DisagreementSystem& sys, const Family& fam, const AffineExpr& corner,
                    const AssemblyOptions& options) {
  for (int l = 0; l < sys.num_modes(); ++l) {
    AddSaturationRows(prob, sys, l, fam.Y[l], sys.feedback_rows[l] * fam.Y[l], fam.X[l], corner);
  }
  if (options.containment) AddContainment(prob, fam.y_names);
}

}  // namespace

const char* ToString(SectorConvention convention) {
  return convention == SectorConvention::kConsistent ? "consistent" : "as-printed";
}

SectorConvention ParseSectorConvention(const std::string& text) {
  if (text == "consistent") return SectorConvention::kConsistent;
  if (text == "as-printed") return SectorConvention::kAsPrinted;
  throw ValidationError("unknown sector convention '" + text + "' (expected consistent or as-printed)");
}

double GammaFromStart(int num_agents, double rho, double eta) { return 1.0 / (1.0 + num_agents * rho * eta); }

double GammaFromOrigin(int num_agents, double rho, double eta) { return 1.0 / (num_agents * rho * eta); }

std::string YName(int mode) { return "Y" + std::to_string(mode + 1); }
std::string XName(int mode) { return "X" + std::to_string(mode + 1); }

LmiProblem AssembleTheorem1(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double rho,
                            double gamma, const AssemblyOptions& options) {
  RequireGain(sys);
  CheckPolytope(sys, polytope);
  CheckGamma(gamma);
  if (!(rho >= 0.0)) throw ValidationError("rho must be nonnegative");
  LmiProblem prob;
  Family fam = DeclareVariables(prob, sys, options, false);
  const int nw = static_cast<int>(sys.disturbance_map.cols());
  const double corner = (1.0 - gamma) / (sys.num_agents * gamma);
  auto arm = [&]() -> std::optional<std::pair<AffineExpr, AffineExpr>> {
    return std::make_pair(AffineExpr::Constant(std::sqrt(rho) * sys.disturbance_map.transpose()),
                          AffineExpr::Constant(-corner * Matrix::Identity(nw, nw)));
  };
  AddMainBlocks(prob, sys, polytope, fam, ClosedLoopLambda(sys, fam), options, arm);
  FinishAnalysis(prob, sys, fam, ScalarConst(sys.u_max * sys.u_max * gamma), options);
  return prob;
}

LmiProblem AssembleTheorem1FreeRho(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                   double gamma, const AssemblyOptions& options) {
  RequireGain(sys);
  CheckPolytope(sys, polytope);
  CheckGamma(gamma);
  LmiProblem prob;
  Family fam = DeclareVariables(prob, sys, options, false);
  AffineExpr tau = prob.Expr(prob.AddScalar("tau"));
  const int nw = static_cast<int>(sys.disturbance_map.cols());
  const double corner = (1.0 - gamma) / (sys.num_agents * gamma);
  auto arm = [&]() -> std::optional<std::pair<AffineExpr, AffineExpr>> {
    AffineExpr diag(nw, nw);
    for (const auto& [k, c] : tau.terms()) diag.AddTerm(k, -corner * c(0, 0) * Matrix::Identity(nw, nw));
    return std::make_pair(AffineExpr::Constant(sys.disturbance_map.transpose()), diag);
  };
  AddMainBlocks(prob, sys, polytope, fam, ClosedLoopLambda(sys, fam), options, arm);
  FinishAnalysis(prob, sys, fam, ScalarConst(sys.u_max * sys.u_max * gamma), options);
  prob.SetObjective(tau);
  return prob;
}

LmiProblem AssembleOriginVariant(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                 std::optional<double> gamma, const AssemblyOptions& options) {
  RequireGain(sys);
  CheckPolytope(sys, polytope);
  if (gamma && !(*gamma > 0.0)) throw ValidationError("gamma must be positive");
  LmiProblem prob;
  Family fam = DeclareVariables(prob, sys, options, false);
  AffineExpr corner;
  if (gamma) {
    corner = ScalarConst(sys.u_max * sys.u_max * *gamma);
  } else {
    AffineExpr g = prob.Expr(prob.AddScalar("gamma"));
    corner = (sys.u_max * sys.u_max) * g;
    prob.SetObjective(g);
  }
  const AffineExpr dd = AffineExpr::Constant(sys.disturbance_map * sys.disturbance_map.transpose());
  auto none = []() -> std::optional<std::pair<AffineExpr, AffineExpr>> { return std::nullopt; };
  AddMainBlocks(prob, sys, polytope, fam, ClosedLoopLambda(sys, fam), options, none, &dd);
  FinishAnalysis(prob, sys, fam, corner, options);
  return prob;
}

LmiProblem AssembleL2(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double rho,
                      const Matrix& C, std::optional<double> varrho, const L2Options& options) {
  RequireGain(sys);
  CheckPolytope(sys, polytope);
  if (!(rho > 0.0)) throw ValidationError("rho must be positive");
  if (C.cols() != sys.n_z) throw ValidationError("output matrix must have " + std::to_string(sys.n_z) + " columns");
  const int ny = static_cast<int>(C.rows());
  LmiProblem prob;
  Family fam = DeclareVariables(prob, sys, options.base, false);
  AffineExpr out_corner;
  if (varrho) {
    if (!(*varrho > 0.0)) throw ValidationError("varrho must be positive");
    out_corner = AffineExpr::Constant(-(*varrho) * (*varrho) * Matrix::Identity(ny, ny));
  } else {
    AffineExpr v = prob.Expr(prob.AddScalar("varrho_sq"));
    out_corner = AffineExpr(ny, ny);
    for (const auto& [k, c] : v.terms()) out_corner.AddTerm(k, -c(0, 0) * Matrix::Identity(ny, ny));
    prob.SetObjective(v);
  }
  const double gamma = 1.0 / (sys.num_agents * rho);
  const AffineExpr dd = AffineExpr::Constant(sys.disturbance_map * sys.disturbance_map.transpose());
  auto none = []() -> std::optional<std::pair<AffineExpr, AffineExpr>> { return std::nullopt; };
  AddMainBlocks(prob, sys, polytope, fam, ClosedLoopLambda(sys, fam), options.base, none, &dd,
                std::make_pair(C, out_corner));
  const AffineExpr corner = ScalarConst(sys.u_max * sys.u_max * gamma);
  for (int l = 0; l < sys.num_modes(); ++l) {
    AffineExpr gain_rows = options.gain_rows_times_y ? sys.feedback_rows[l] * fam.Y[l]
                                                     : AffineExpr::Constant(sys.feedback_rows[l]);
    AddSaturationRows(prob, sys, l, fam.Y[l], gain_rows, fam.X[l], corner);
  }
  if (options.base.containment) AddContainment(prob, fam.y_names);
  return prob;
}

LmiProblem AssembleSynthesis(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double rho,
                             double gamma, const AssemblyOptions& options) {
  CheckPolytope(sys, polytope);
  CheckGamma(gamma);
  if (!(rho > 0.0)) throw ValidationError("rho must be positive");
  LmiProblem prob;
  Family fam = DeclareVariables(prob, sys, options, true);
  AffineExpr kbar = prob.Expr(prob.AddFull("Kbar", sys.p, sys.m));
  Matrix B = sys.sat_input_map.block(0, 0, sys.m, sys.p);
  std::vector<AffineExpr> lambda;
  std::vector<AffineExpr> gain_rows;
  const Matrix& W = sys.W;
  for (int l = 0; l < sys.num_modes(); ++l) {
    const Matrix& L = sys.laplacians[l];
    AffineExpr coupling = Kron(Matrix(sys.U * L * W), B * kbar);
    lambda.push_back(He(sys.block_drift * fam.Y[l] - coupling));
    gain_rows.push_back(Kron(Matrix(L * W), kbar));
  }
  const int nw = static_cast<int>(sys.disturbance_map.cols());
  const double corner = (1.0 - gamma) / (sys.num_agents * gamma);
  auto arm = [&]() -> std::optional<std::pair<AffineExpr, AffineExpr>> {
    return std::make_pair(AffineExpr::Constant(std::sqrt(rho) * sys.disturbance_map.transpose()),
                          AffineExpr::Constant(-corner * Matrix::Identity(nw, nw)));
  };
  AddMainBlocks(prob, sys, polytope, fam, lambda, options, arm);
  const AffineExpr sat_corner = ScalarConst(sys.u_max * sys.u_max * gamma);
  for (int l = 0; l < sys.num_modes(); ++l) {
    AddSaturationRows(prob, sys, l, fam.Y[l], gain_rows[l], fam.X[l], sat_corner);
  }
  if (options.containment) {
    prob.AddSymmetric("Z", sys.n_z);
    AffineExpr Z = prob.Expr("Z");
    AffineExpr I = Identity(sys.n_z);
    prob.AddConstraint("containment shared", AffineExpr::SymmetricBlocks({{Z}, {I, fam.Y[0]}}),
                       Sense::kPositiveSemidefinite);
  }
  return prob;
}

Matrix RecoverGain(const LmiProblem& problem, const Vector& scalars) {
  Matrix F = problem.Value("F", scalars);
  Matrix kbar = problem.Value("Kbar", scalars);
  return F.transpose().ldlt().solve(kbar.transpose()).transpose();
}

void AddContainment(LmiProblem& problem, const std::vector<std::string>& y_names, const std::string& z_name) {
  if (y_names.empty()) throw ValidationError("containment needs at least one Y");
  const int n = problem.Variable(y_names[0]).rows;
  AffineExpr Z = problem.Expr(problem.AddSymmetric(z_name, n));
  AffineExpr I = Identity(n);
  for (const auto& name : y_names) {
    problem.AddConstraint("containment " + name, AffineExpr::SymmetricBlocks({{Z}, {I, problem.Expr(name)}}),
                          Sense::kPositiveSemidefinite);
  }
}

AffineExpr Trace(const AffineExpr& square) {
  AffineExpr out = ScalarConst(square.constant().trace());
  for (const auto& [k, c] : square.terms()) {
    if (c.trace() != 0.0) out.AddTerm(k, Matrix::Constant(1, 1, c.trace()));
  }
  return out;
}

Matrix SchurReduce(const Matrix& M, int first_block_size, bool pivot_first) {
  const int n = static_cast<int>(M.rows());
  if (M.cols() != n || first_block_size <= 0 || first_block_size >= n) {
    throw ValidationError("Schur reduction needs a square matrix split into two nonempty blocks");
  }
  const int n2 = n - first_block_size;
  const Matrix M11 = M.topLeftCorner(first_block_size, first_block_size);
  const Matrix M12 = M.topRightCorner(first_block_size, n2);
  const Matrix M22 = M.bottomRightCorner(n2, n2);
  const Matrix& pivot = pivot_first ? M11 : M22;
  Eigen::FullPivLU<Matrix> lu(pivot);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) throw ValidationError("singular Schur pivot");
  if (pivot_first) return M22 - M12.transpose() * lu.solve(M12);
  return M11 - M12 * lu.solve(Matrix(M12.transpose()));
}

double VariableCountFormula(int num_agents, int m, int p, int num_modes) {
  const double N = num_agents;
  const double np = N * p;
  const double nz = m * (N - 1);
  return num_modes / 2.0 * (np * np + nz * nz + 2 * N * N * p * m + np + nz - 2 * N * p * m);
}

double SynthesisVariableCountFormula(int num_agents, int m, int p, int num_modes) {
  const double N = num_agents;
  const double np = N * p;
  return num_modes / 2.0 * (np * np + 2 * N * N * p * m + static_cast<double>(m * m + m) / num_modes - 2 * N * p * m);
}

}  // namespace satcons::lmi
