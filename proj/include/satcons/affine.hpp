#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "satcons/common.hpp"
#include "satcons/sdp.hpp"

namespace satcons::lmi {

enum class VariableKind { kSymmetric, kDiagonal, kFull, kScalar };

const char* ToString(VariableKind kind);

// A matrix-valued decision variable. Only its free parameters are exposed to
// the solver: n(n+1)/2 for symmetric, n for diagonal, r*c for full.
struct DecisionVariable {
  std::string name;
  VariableKind kind = VariableKind::kScalar;
  int rows = 1;
  int cols = 1;
  int offset = 0;  // index of the first scalar parameter
  int num_scalars = 1;
};

// constant + sum_k y_k * terms[k], with y the solver's scalar vector.
class AffineExpr {
 public:
  AffineExpr() = default;
  AffineExpr(int rows, int cols);
  static AffineExpr Constant(const Matrix& value);

  int rows() const { return static_cast<int>(constant_.rows()); }
  int cols() const { return static_cast<int>(constant_.cols()); }
  const Matrix& constant() const { return constant_; }
  const std::map<int, Matrix>& terms() const { return terms_; }

  void AddTerm(int scalar, const Matrix& coefficient);

  AffineExpr operator+(const AffineExpr& other) const;
  AffineExpr operator-(const AffineExpr& other) const;
  AffineExpr operator-() const;
  AffineExpr Transpose() const;
  AffineExpr Row(int r) const;
  Matrix Evaluate(const Vector& values) const;

  friend AffineExpr operator*(double scale, const AffineExpr& e);
  friend AffineExpr operator*(const Matrix& left, const AffineExpr& e);
  friend AffineExpr operator*(const AffineExpr& e, const Matrix& right);
  friend AffineExpr Kron(const Matrix& left, const AffineExpr& e);

  // Dense block layout. Every row of `grid` must agree on heights, every
  // column on widths.
  static AffineExpr Blocks(const std::vector<std::vector<AffineExpr>>& grid);

  // Symmetric block matrix from its lower triangle (including the diagonal).
  // `lower[i]` has i + 1 entries; std::nullopt marks a zero block whose size
  // is inferred from the diagonal. Upper blocks are exact transposes.
  static AffineExpr SymmetricBlocks(const std::vector<std::vector<std::optional<AffineExpr>>>& lower);

 private:
  Matrix constant_;
  std::map<int, Matrix> terms_;
};

// Sense of one matrix inequality. kNegativeSemidefinite means expr <= -margin I.
enum class Sense { kPositiveSemidefinite, kNegativeSemidefinite };

struct Constraint {
  std::string label;
  AffineExpr expr;
  Sense sense = Sense::kPositiveSemidefinite;
  double margin = 0.0;
};

// Container for a family of LMIs. Objective (if any) is minimized.
class LmiProblem {
 public:
  const DecisionVariable& AddSymmetric(const std::string& name, int n);
  const DecisionVariable& AddDiagonal(const std::string& name, int n);
  const DecisionVariable& AddFull(const std::string& name, int rows, int cols);
  const DecisionVariable& AddScalar(const std::string& name);

  const DecisionVariable& Variable(const std::string& name) const;
  bool HasVariable(const std::string& name) const;
  const std::vector<DecisionVariable>& variables() const { return variables_; }
  int num_scalars() const { return num_scalars_; }

  AffineExpr Expr(const DecisionVariable& var) const;
  AffineExpr Expr(const std::string& name) const { return Expr(Variable(name)); }

  void AddConstraint(std::string label, AffineExpr expr, Sense sense, double margin = 0.0);
  const std::vector<Constraint>& constraints() const { return constraints_; }

  void SetObjective(AffineExpr scalar_expr);
  const std::optional<AffineExpr>& objective() const { return objective_; }

  // Maps every constraint to a PSD block (negating NSD ones).
  sdp::Problem ToConic() const;

  // Value of a variable from the solver's scalar vector.
  Matrix Value(const std::string& name, const Vector& scalars) const;

  // Human-readable block structure and variable map.
  std::string DebugDump() const;

 private:
  const DecisionVariable& Register(DecisionVariable var);

  std::vector<DecisionVariable> variables_;
  std::vector<Constraint> constraints_;
  std::optional<AffineExpr> objective_;
  int num_scalars_ = 0;
};

}  // namespace satcons::lmi
