#pragma once

#include <vector>

#include "satcons/common.hpp"
#include "satcons/sysmodel.hpp"

namespace satcons {

// U = [1_{N-1}  -I_{N-1}]
Matrix PivotSelector(int num_agents);
// W = [0_{N-1}  -I_{N-1}]'
Matrix ReconstructionSelector(int num_agents);

// Reduced dynamics in pivot-relative coordinates z_i = x_1 - x_{i+1}:
//   z' = drift_l z + sat_input_map * DeadZone(feedback_rows_l z) + disturbance_map w
// with all Kronecker products expanded.
struct DisagreementSystem {
  int num_agents = 0;
  int m = 0;
  int p = 0;
  int q = 0;
  int n_z = 0;  // m (N - 1)
  int n_u = 0;  // N p
  double u_max = 0.0;
  Matrix U;
  Matrix W;
  Matrix block_drift;      // I_{N-1} (x) A
  Matrix sat_input_map;    // U (x) B
  Matrix disturbance_map;  // U (x) D
  std::vector<Matrix> laplacians;
  std::vector<Matrix> drift;          // I (x) A - U L_l W (x) B K
  std::vector<Matrix> feedback_rows;  // L_l W (x) K

  int num_modes() const { return static_cast<int>(drift.size()); }
};

// Throws ValidationError if the model has no gain.
DisagreementSystem BuildDisagreementSystem(const NetworkModel& model);

// Same matrices for a model without a gain: only the K-independent blocks are
// filled (drift = I (x) A, feedback_rows empty).
DisagreementSystem BuildOpenLoopSystem(const NetworkModel& model);

// z = (U (x) I_m) x
Vector ToDisagreement(const Vector& x, int num_agents, int m);
// x = 1_N (x) x1 + (W (x) I_m) z
Vector FromDisagreement(const Vector& z, const Vector& x1, int num_agents);

Vector Saturate(const Vector& u, double u_max);
// Phi(u) = u - sat(u)
Vector DeadZone(const Vector& u, double u_max);

// Membership of u in the polyhedron |u_r - aux_r| <= u_max.
bool InSectorSet(const Vector& u, const Vector& aux, double u_max);

// Value of Phi(u)' T (Phi(u) - aux). Non-positive whenever InSectorSet holds.
// Throws ValidationError unless T is diagonal with positive entries.
double SectorConditionValue(const Vector& u, const Vector& aux, const Matrix& T, double u_max);
bool CheckSectorCondition(const Vector& u, const Vector& aux, const Matrix& T, double u_max);

// Right-hand sides used by the simulator and by the representation tests.
// Stacked agent form: x' = (I (x) A) x - (I (x) B) sat((L (x) K) x) + (I (x) D) w.
Vector StackedRhs(const NetworkModel& model, int mode, const Vector& x, const Vector& w);
// Disagreement form with sat applied directly.
Vector DisagreementRhs(const DisagreementSystem& sys, int mode, const Vector& z, const Vector& w);
// Disagreement form rewritten with the dead zone (linear drift + correction).
Vector DisagreementRhsDeadZone(const DisagreementSystem& sys, int mode, const Vector& z,
                               const Vector& w);

}  // namespace satcons
