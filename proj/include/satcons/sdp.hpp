#pragma once

#include <string>
#include <utility>
#include <vector>

#include "satcons/common.hpp"

// Small dense primal-dual interior-point solver for block-diagonal linear
// matrix inequalities:
//
//   minimize    cost' x
//   subject to  F_b(x) = constant_b + sum_i x_i coefficient_{b,i}  >= 0   (PSD)
//
// The iteration runs on the homogeneous self-dual embedding with
// Nesterov-Todd scaling and a Mehrotra predictor-corrector, so infeasible
// problems terminate with a certificate instead of stalling.
namespace satcons::sdp {

struct Block {
  Matrix constant;                                // dim x dim, symmetric
  std::vector<std::pair<int, Matrix>> coefficients;  // (variable index, symmetric dim x dim)
  int dim() const { return static_cast<int>(constant.rows()); }
};

struct Problem {
  int num_vars = 0;
  Vector cost;  // empty means feasibility problem
  std::vector<Block> blocks;
};

enum class Status {
  kOptimal,
  kOptimalInaccurate,  // best iterate met the tolerances loosened by reduced_accuracy_factor
  kPrimalInfeasible,  // no x makes every block PSD
  kDualInfeasible,    // objective unbounded below
  kMaxIterations,
  kNumericalError,
};

const char* ToString(Status status);

struct Settings {
  int max_iterations = 120;
  double feasibility_tol = 1e-8;
  double absolute_gap_tol = 1e-8;
  double relative_gap_tol = 1e-6;
  double reduced_accuracy_factor = 100.0;
  double step_fraction = 0.99;
  bool parallel_kernels = true;
  bool verbose = false;
};

struct Solution {
  Status status = Status::kNumericalError;
  Vector x;
  std::vector<Matrix> dual;  // one PSD multiplier per block
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  double seconds = 0.0;
};

Solution Solve(const Problem& problem, const Settings& settings = {});

// Evaluates F_b(x) for every block.
std::vector<Matrix> EvaluateBlocks(const Problem& problem, const Vector& x);

// Normal-equation matrix H_ij = sum_b <C_bi, Q_b C_bj Q_b> of the reduced
// Newton system. `scaling_inverse[b]` is Q_b. The serial version is the
// reference the OpenMP kernel is tested against.
Matrix AssembleNormalMatrixSerial(const Problem& problem, const std::vector<Matrix>& scaling_inverse);
Matrix AssembleNormalMatrixParallel(const Problem& problem, const std::vector<Matrix>& scaling_inverse);

}  // namespace satcons::sdp
