#pragma once

#include <optional>
#include <string>

#include "satcons/affine.hpp"
#include "satcons/disagreement.hpp"
#include "satcons/markov.hpp"

namespace satcons::lmi {

// How the dead-zone sector bound is paired with the X_l rows.
//   kConsistent: S (U (x) B)' + X_l, matching Phi' T (Phi - aux) <= 0.
//   kAsPrinted:  S (U (x) B)' - X_l.
enum class SectorConvention { kConsistent, kAsPrinted };

const char* ToString(SectorConvention convention);
SectorConvention ParseSectorConvention(const std::string& text);

struct AssemblyOptions {
  SectorConvention convention = SectorConvention::kConsistent;
  double definiteness_margin = 1e-6;  // Y_l, S, F >= margin I
  double constraint_margin = 0.0;     // main blocks <= -margin I
  // Adds Z and [[Z, I], [I, Y_l]] >= 0 for every mode.
  bool containment = false;
};

// gamma = 1 / (1 + N rho eta)  (trajectories starting in the unit level set)
double GammaFromStart(int num_agents, double rho, double eta);
// gamma = 1 / (N rho eta)      (trajectories starting at consensus)
double GammaFromOrigin(int num_agents, double rho, double eta);

// Analysis LMIs for a fixed energy bound rho and level gamma. The disturbance
// row is sqrt(rho) (U (x) D)' against -(1 - gamma) / (N gamma) I.
LmiProblem AssembleTheorem1(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                            double rho, double gamma, const AssemblyOptions& options = {});

// Same family with tau = 1 / rho as a scalar variable and objective min tau.
LmiProblem AssembleTheorem1FreeRho(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                   double gamma, const AssemblyOptions& options = {});

// Start-from-consensus variant: Lambda + (U (x) D)(U (x) D)' with gamma = 1/(N rho).
// With no gamma given, gamma is a scalar variable and the objective is min gamma.
LmiProblem AssembleOriginVariant(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                                 std::optional<double> gamma, const AssemblyOptions& options = {});

// L2-gain family with output y = C z. With no varrho given, "varrho_sq" is a
// scalar variable and the objective is min varrho^2. The saturation rows use
// (L_l W (x) K)_(q) - X_l(q) unless gain_rows_times_y is set.
struct L2Options {
  AssemblyOptions base;
  bool gain_rows_times_y = false;
};
LmiProblem AssembleL2(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope, double rho,
                      const Matrix& C, std::optional<double> varrho, const L2Options& options = {});

// Gain synthesis with Y_l = I (x) F shared by all modes and Kbar = K F.
// `sys` comes from BuildOpenLoopSystem. Recover K with RecoverGain.
LmiProblem AssembleSynthesis(const DisagreementSystem& sys, const markov::GeneratorPolytope& polytope,
                             double rho, double gamma, const AssemblyOptions& options = {});
Matrix RecoverGain(const LmiProblem& problem, const Vector& scalars);

// Adds a symmetric variable Z and [[Z, I], [I, Y_l]] >= 0 for each listed Y.
void AddContainment(LmiProblem& problem, const std::vector<std::string>& y_names, const std::string& z_name = "Z");
AffineExpr Trace(const AffineExpr& square);

// Names used by the assemblers.
std::string YName(int mode);
std::string XName(int mode);

// Schur complement of a symmetric 2x2 block matrix. pivot_first selects the
// (1,1) block as pivot: returns M22 - M12' M11^{-1} M12; otherwise
// M11 - M12 M22^{-1} M12'. Throws ValidationError on a singular pivot.
Matrix SchurReduce(const Matrix& M, int first_block_size, bool pivot_first = false);

// Decision-variable counts from the complexity remark, for s modes.
double VariableCountFormula(int num_agents, int m, int p, int num_modes);
double SynthesisVariableCountFormula(int num_agents, int m, int p, int num_modes);

}  // namespace satcons::lmi
