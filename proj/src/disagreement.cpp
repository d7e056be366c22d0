#include "satcons/disagreement.hpp"

#include <algorithm>
#include <cmath>

namespace satcons {

Matrix PivotSelector(int num_agents) {
  Matrix u = Matrix::Zero(num_agents - 1, num_agents);
  u.col(0).setOnes();
  u.rightCols(num_agents - 1) = -Matrix::Identity(num_agents - 1, num_agents - 1);
  return u;
}

Matrix ReconstructionSelector(int num_agents) {
  Matrix w = Matrix::Zero(num_agents, num_agents - 1);
  w.bottomRows(num_agents - 1) = -Matrix::Identity(num_agents - 1, num_agents - 1);
  return w;
}

namespace {

DisagreementSystem BuildShared(const NetworkModel& model) {
  const auto& dyn = model.dynamics;
  DisagreementSystem sys;
  sys.num_agents = model.num_agents();
  sys.m = dyn.m();
  sys.p = dyn.p();
  sys.q = dyn.q();
  sys.n_z = sys.m * (sys.num_agents - 1);
  sys.n_u = sys.num_agents * sys.p;
  sys.u_max = dyn.u_max;
  sys.U = PivotSelector(sys.num_agents);
  sys.W = ReconstructionSelector(sys.num_agents);
  const Matrix ones = Vector::Ones(sys.num_agents);
  if ((sys.U * ones).cwiseAbs().maxCoeff() != 0.0 ||
      !(sys.U * sys.W).isApprox(Matrix::Identity(sys.num_agents - 1, sys.num_agents - 1), 0.0)) {
    throw ValidationError("selector identities U 1 = 0, U W = I violated");
  }
  sys.block_drift = Kron(Matrix::Identity(sys.num_agents - 1, sys.num_agents - 1), dyn.A);
  sys.sat_input_map = Kron(sys.U, dyn.B);
  sys.disturbance_map = Kron(sys.U, dyn.D);
  for (const auto& mode : model.modes) {
    if ((mode.laplacian() * ones).cwiseAbs().maxCoeff() > 1e-12) {
      throw ValidationError("Laplacian rows must sum to zero");
    }
    sys.laplacians.push_back(mode.laplacian());
  }
  return sys;
}

}  // namespace

DisagreementSystem BuildDisagreementSystem(const NetworkModel& model) {
  if (!model.gain) throw ValidationError("model has no gain K; run synthesis first");
  DisagreementSystem sys = BuildShared(model);
  const Matrix& k = *model.gain;
  const Matrix bk = model.dynamics.B * k;
  for (const auto& lap : sys.laplacians) {
    sys.drift.push_back(sys.block_drift - Kron(sys.U * lap * sys.W, bk));
    sys.feedback_rows.push_back(Kron(lap * sys.W, k));
  }
  return sys;
}

DisagreementSystem BuildOpenLoopSystem(const NetworkModel& model) {
  DisagreementSystem sys = BuildShared(model);
  for (std::size_t l = 0; l < sys.laplacians.size(); ++l) sys.drift.push_back(sys.block_drift);
  return sys;
}

Vector ToDisagreement(const Vector& x, int num_agents, int m) {
  if (x.size() != num_agents * m) throw ValidationError("stacked state has the wrong length");
  Vector z(m * (num_agents - 1));
  for (int i = 0; i + 1 < num_agents; ++i) {
    z.segment(i * m, m) = x.head(m) - x.segment((i + 1) * m, m);
  }
  return z;
}

Vector FromDisagreement(const Vector& z, const Vector& x1, int num_agents) {
  const auto m = x1.size();
  if (z.size() != m * (num_agents - 1)) throw ValidationError("disagreement vector has the wrong length");
  Vector x(m * num_agents);
  x.head(m) = x1;
  for (int i = 0; i + 1 < num_agents; ++i) x.segment((i + 1) * m, m) = x1 - z.segment(i * m, m);
  return x;
}

Vector Saturate(const Vector& u, double u_max) {
  return u.unaryExpr([u_max](double v) { return std::clamp(v, -u_max, u_max); });
}

Vector DeadZone(const Vector& u, double u_max) { return u - Saturate(u, u_max); }

bool InSectorSet(const Vector& u, const Vector& aux, double u_max) {
  if (u.size() != aux.size()) throw ValidationError("u and aux differ in length");
  return ((u - aux).cwiseAbs().array() <= u_max).all();
}

double SectorConditionValue(const Vector& u, const Vector& aux, const Matrix& T, double u_max) {
  if (T.rows() != u.size() || T.cols() != u.size()) throw ValidationError("T has the wrong size");
  if (!T.isDiagonal(0.0) || (T.diagonal().array() <= 0.0).any()) {
    throw ValidationError("T must be diagonal with positive entries");
  }
  const Vector phi = DeadZone(u, u_max);
  return phi.dot(T.diagonal().cwiseProduct(phi - aux));
}

bool CheckSectorCondition(const Vector& u, const Vector& aux, const Matrix& T, double u_max) {
  return SectorConditionValue(u, aux, T, u_max) <= 0.0;
}

Vector StackedRhs(const NetworkModel& model, int mode, const Vector& x, const Vector& w) {
  const auto& dyn = model.dynamics;
  const int n = model.num_agents();
  const int m = dyn.m();
  const int p = dyn.p();
  const Matrix& lap = model.modes[static_cast<std::size_t>(mode)].laplacian();
  const Matrix& k = *model.gain;
  Vector dx(n * m);
  for (int i = 0; i < n; ++i) {
    Vector ui = Vector::Zero(p);
    for (int j = 0; j < n; ++j) {
      if (lap(i, j) != 0.0) ui += lap(i, j) * (k * x.segment(j * m, m));
    }
    // u_i = -sum_j a_ij K (x_i - x_j) = -(L (x) K) x restricted to agent i
    dx.segment(i * m, m) = dyn.A * x.segment(i * m, m) - dyn.B * Saturate(ui, dyn.u_max) +
                           dyn.D * w.segment(i * dyn.q(), dyn.q());
  }
  return dx;
}

Vector DisagreementRhs(const DisagreementSystem& sys, int mode, const Vector& z, const Vector& w) {
  const auto l = static_cast<std::size_t>(mode);
  return sys.block_drift * z - sys.sat_input_map * Saturate(sys.feedback_rows[l] * z, sys.u_max) +
         sys.disturbance_map * w;
}

Vector DisagreementRhsDeadZone(const DisagreementSystem& sys, int mode, const Vector& z,
                               const Vector& w) {
  const auto l = static_cast<std::size_t>(mode);
  return sys.drift[l] * z + sys.sat_input_map * DeadZone(sys.feedback_rows[l] * z, sys.u_max) +
         sys.disturbance_map * w;
}

}  // namespace satcons
