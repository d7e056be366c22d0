#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <cmath>
#include <map>
#include <string>
#include <random>
#include <vector>

#include "satcons/disagreement.hpp"
#include "satcons/lmi.hpp"
#include "satcons/sysmodel.hpp"

namespace satcons::testing {

// Random small network: N in {2,3}, m, p, q in {1,2}, s in {1,2,3}.
inline NetworkModel RandomInstance(unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<unsigned>(hi - lo + 1)); };
  const int N = pick(2, 3), m = pick(1, 2), p = pick(1, 2), q = pick(1, 2), s = pick(1, 3);
  NetworkModel model;
  model.dynamics.A = Matrix::NullaryExpr(m, m, [&]() { return 0.7 * g(rng); }) - 1.0 * Matrix::Identity(m, m);
  model.dynamics.B = Matrix::NullaryExpr(m, p, [&]() { return g(rng); });
  model.dynamics.D = Matrix::NullaryExpr(m, q, [&]() { return 0.5 * g(rng); });
  model.dynamics.u_max = 0.5 + 2.0 * unit(rng);
  model.gain = Matrix(Matrix::NullaryExpr(p, m, [&]() { return 0.3 * g(rng); }));
  for (int l = 0; l < s; ++l) {
    Matrix a = Matrix::Zero(N, N);
    for (int i = 0; i < N; ++i) {
      for (int j = 0; j < N; ++j) {
        if (i != j && unit(rng) < 0.5) a(i, j) = 1.0;
      }
    }
    model.modes.emplace_back(a);
  }
  Matrix pi = Matrix::Zero(s, s);
  for (int i = 0; i < s; ++i) {
    for (int j = 0; j < s; ++j) {
      if (i != j) pi(i, j) = 3.0 * unit(rng);
    }
    pi(i, i) = -pi.row(i).sum();
  }
  model.polytope = markov::GeneratorPolytope({pi});
  model.initial_distribution = Vector::Constant(s, 1.0 / s);
  model.Validate();
  return model;
}

// Inverse of LmiProblem::Value: projects each value onto the (orthogonal)
// coefficient matrices of its variable.
inline Vector Pack(const lmi::LmiProblem& prob, const std::map<std::string, Matrix>& values) {
  Vector y = Vector::Zero(prob.num_scalars());
  for (const auto& [name, value] : values) {
    const lmi::AffineExpr expr = prob.Expr(name);
    for (const auto& [k, c] : expr.terms()) y(k) = (c.array() * value.array()).sum() / c.squaredNorm();
  }
  return y;
}

// Values of the analysis variables in the original coordinates:
// P_l = Y_l^{-1}, T = S^{-1}, G_l = X_l P_l.
struct NonlinearPoint {
  std::vector<Matrix> P;
  std::vector<Matrix> G;
  Matrix T;
};

inline NonlinearPoint ToNonlinear(const std::vector<Matrix>& Y, const std::vector<Matrix>& X, const Matrix& S) {
  NonlinearPoint pt;
  pt.T = S.inverse();
  for (std::size_t l = 0; l < Y.size(); ++l) {
    pt.P.push_back(Y[l].inverse());
    pt.G.push_back(X[l] * pt.P.back());
  }
  return pt;
}

// Dissipation matrix in (z, Phi, w) for mode l and generator pi; it must be
// negative semidefinite. Built directly from the reduced dynamics
//   z' = A_l z + B_u Phi + E w
// with the sector term -2 Phi' T (Phi -/+ G z). `rho < 0` selects the
// start-from-consensus form, where E E' enters the Lyapunov corner instead.
inline Matrix DissipationMatrix(const DisagreementSystem& sys, const Matrix& pi, int l, const NonlinearPoint& pt,
                                double rho, double gamma, lmi::SectorConvention convention) {
  const Matrix& P = pt.P[l];
  const Matrix& A = sys.drift[l];
  const Matrix& Bu = sys.sat_input_map;
  const Matrix& E = sys.disturbance_map;
  const int nz = sys.n_z, nu = sys.n_u, nw = static_cast<int>(E.cols());
  Matrix corner = P * A + A.transpose() * P;
  for (int j = 0; j < sys.num_modes(); ++j) corner += pi(l, j) * pt.P[j];
  const double sign = convention == lmi::SectorConvention::kConsistent ? 1.0 : -1.0;
  Matrix cross = P * Bu + sign * pt.G[l].transpose() * pt.T;
  if (rho < 0.0) {
    corner += P * E * E.transpose() * P;
    Matrix M(nz + nu, nz + nu);
    M << corner, cross, cross.transpose(), -2.0 * pt.T;
    return M;
  }
  const double c = (1.0 - gamma) / (sys.num_agents * gamma);
  Matrix M = Matrix::Zero(nz + nu + nw, nz + nu + nw);
  M.topLeftCorner(nz, nz) = corner;
  M.block(0, nz, nz, nu) = cross;
  M.block(nz, 0, nu, nz) = cross.transpose();
  M.block(nz, nz, nu, nu) = -2.0 * pt.T;
  M.block(0, nz + nu, nz, nw) = std::sqrt(rho) * P * E;
  M.block(nz + nu, 0, nw, nz) = std::sqrt(rho) * E.transpose() * P;
  M.bottomRightCorner(nw, nw) = -c * Matrix::Identity(nw, nw);
  return M;
}

// Row q of the level-set/saturation condition in scalar form:
// u_max^2 gamma - (K_q - G_q) P^{-1} (K_q - G_q)' >= 0 with K_q the q-th
// row of the feedback map.
inline double SaturationSlack(const DisagreementSystem& sys, int l, int q, const NonlinearPoint& pt, double gamma) {
  Vector row = (sys.feedback_rows[l].row(q) - pt.G[l].row(q)).transpose();
  return sys.u_max * sys.u_max * gamma - row.dot(pt.P[l].ldlt().solve(row));
}

}  // namespace satcons::testing
