#include "satcons/affine.hpp"

#include <sstream>

namespace satcons::lmi {

const char* ToString(VariableKind kind) {
  switch (kind) {
    case VariableKind::kSymmetric: return "symmetric";
    case VariableKind::kDiagonal: return "diagonal";
    case VariableKind::kFull: return "full";
    case VariableKind::kScalar: return "scalar";
  }
  return "unknown";
}

AffineExpr::AffineExpr(int rows, int cols) : constant_(Matrix::Zero(rows, cols)) {}

AffineExpr AffineExpr::Constant(const Matrix& value) {
  AffineExpr e;
  e.constant_ = value;
  return e;
}

void AffineExpr::AddTerm(int scalar, const Matrix& coefficient) {
  if (coefficient.rows() != rows() || coefficient.cols() != cols()) {
    throw ValidationError("affine term has the wrong shape");
  }
  auto it = terms_.find(scalar);
  if (it == terms_.end()) terms_.emplace(scalar, coefficient);
  else it->second += coefficient;
}

AffineExpr AffineExpr::operator+(const AffineExpr& other) const {
  if (other.rows() != rows() || other.cols() != cols()) throw ValidationError("shape mismatch in sum");
  AffineExpr out = *this;
  out.constant_ += other.constant_;
  for (const auto& [k, c] : other.terms_) out.AddTerm(k, c);
  return out;
}

AffineExpr AffineExpr::operator-() const { return -1.0 * *this; }

AffineExpr AffineExpr::operator-(const AffineExpr& other) const { return *this + (-other); }

AffineExpr AffineExpr::Transpose() const {
  AffineExpr out = Constant(constant_.transpose());
  for (const auto& [k, c] : terms_) out.terms_.emplace(k, c.transpose());
  return out;
}

AffineExpr AffineExpr::Row(int r) const {
  AffineExpr out = Constant(constant_.row(r));
  for (const auto& [k, c] : terms_) out.terms_.emplace(k, c.row(r));
  return out;
}

Matrix AffineExpr::Evaluate(const Vector& values) const {
  Matrix out = constant_;
  for (const auto& [k, c] : terms_) out += values(k) * c;
  return out;
}

AffineExpr operator*(double scale, const AffineExpr& e) {
  AffineExpr out = AffineExpr::Constant(scale * e.constant_);
  for (const auto& [k, c] : e.terms_) out.terms_.emplace(k, scale * c);
  return out;
}

AffineExpr operator*(const Matrix& left, const AffineExpr& e) {
  if (left.cols() != e.rows()) throw ValidationError("shape mismatch in left product");
  AffineExpr out = AffineExpr::Constant(left * e.constant_);
  for (const auto& [k, c] : e.terms_) out.terms_.emplace(k, left * c);
  return out;
}

AffineExpr operator*(const AffineExpr& e, const Matrix& right) {
  if (e.cols() != right.rows()) throw ValidationError("shape mismatch in right product");
  AffineExpr out = AffineExpr::Constant(e.constant_ * right);
  for (const auto& [k, c] : e.terms_) out.terms_.emplace(k, c * right);
  return out;
}

AffineExpr Kron(const Matrix& left, const AffineExpr& e) {
  AffineExpr out = AffineExpr::Constant(satcons::Kron(left, e.constant_));
  for (const auto& [k, c] : e.terms_) out.terms_.emplace(k, satcons::Kron(left, c));
  return out;
}

AffineExpr AffineExpr::Blocks(const std::vector<std::vector<AffineExpr>>& grid) {
  if (grid.empty() || grid[0].empty()) throw ValidationError("empty block grid");
  std::vector<int> heights, widths;
  for (const auto& row : grid) heights.push_back(row.at(0).rows());
  for (const auto& cell : grid[0]) widths.push_back(cell.cols());
  int total_rows = 0, total_cols = 0;
  for (int h : heights) total_rows += h;
  for (int w : widths) total_cols += w;
  AffineExpr out(total_rows, total_cols);
  int r0 = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i].size() != widths.size()) throw ValidationError("ragged block grid");
    int c0 = 0;
    for (std::size_t j = 0; j < grid[i].size(); ++j) {
      const AffineExpr& cell = grid[i][j];
      if (cell.rows() != heights[i] || cell.cols() != widths[j]) {
        throw ValidationError("block (" + std::to_string(i) + "," + std::to_string(j) + ") has the wrong shape");
      }
      out.constant_.block(r0, c0, cell.rows(), cell.cols()) = cell.constant_;
      for (const auto& [k, c] : cell.terms_) {
        auto it = out.terms_.find(k);
        if (it == out.terms_.end()) it = out.terms_.emplace(k, Matrix::Zero(total_rows, total_cols)).first;
        it->second.block(r0, c0, c.rows(), c.cols()) += c;
      }
      c0 += widths[j];
    }
    r0 += heights[i];
  }
  return out;
}

AffineExpr AffineExpr::SymmetricBlocks(const std::vector<std::vector<std::optional<AffineExpr>>>& lower) {
  const std::size_t n = lower.size();
  std::vector<int> sizes(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (lower[i].size() != i + 1 || !lower[i][i]) throw ValidationError("lower triangle needs diagonal blocks");
    sizes[i] = lower[i][i]->rows();
  }
  std::vector<std::vector<AffineExpr>> grid(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j <= i) {
        grid[i].push_back(lower[i][j] ? *lower[i][j] : AffineExpr(sizes[i], sizes[j]));
      } else {
        grid[i].push_back(lower[j][i] ? lower[j][i]->Transpose() : AffineExpr(sizes[i], sizes[j]));
      }
    }
  }
  return Blocks(grid);
}

const DecisionVariable& LmiProblem::Register(DecisionVariable var) {
  if (HasVariable(var.name)) throw ValidationError("duplicate variable " + var.name);
  var.offset = num_scalars_;
  num_scalars_ += var.num_scalars;
  variables_.push_back(std::move(var));
  return variables_.back();
}

const DecisionVariable& LmiProblem::AddSymmetric(const std::string& name, int n) {
  return Register({name, VariableKind::kSymmetric, n, n, 0, n * (n + 1) / 2});
}

const DecisionVariable& LmiProblem::AddDiagonal(const std::string& name, int n) {
  return Register({name, VariableKind::kDiagonal, n, n, 0, n});
}

const DecisionVariable& LmiProblem::AddFull(const std::string& name, int rows, int cols) {
  return Register({name, VariableKind::kFull, rows, cols, 0, rows * cols});
}

const DecisionVariable& LmiProblem::AddScalar(const std::string& name) {
  return Register({name, VariableKind::kScalar, 1, 1, 0, 1});
}

bool LmiProblem::HasVariable(const std::string& name) const {
  for (const auto& v : variables_) {
    if (v.name == name) return true;
  }
  return false;
}

const DecisionVariable& LmiProblem::Variable(const std::string& name) const {
  for (const auto& v : variables_) {
    if (v.name == name) return v;
  }
  throw ValidationError("unknown variable " + name);
}

AffineExpr LmiProblem::Expr(const DecisionVariable& var) const {
  AffineExpr e(var.rows, var.cols);
  int k = var.offset;
  switch (var.kind) {
    case VariableKind::kSymmetric:
      for (int j = 0; j < var.cols; ++j) {
        for (int i = j; i < var.rows; ++i) {
          Matrix basis = Matrix::Zero(var.rows, var.cols);
          basis(i, j) = 1.0;
          basis(j, i) = 1.0;
          e.AddTerm(k++, basis);
        }
      }
      break;
    case VariableKind::kDiagonal:
      for (int i = 0; i < var.rows; ++i) {
        Matrix basis = Matrix::Zero(var.rows, var.cols);
        basis(i, i) = 1.0;
        e.AddTerm(k++, basis);
      }
      break;
    case VariableKind::kFull:
      for (int j = 0; j < var.cols; ++j) {
        for (int i = 0; i < var.rows; ++i) {
          Matrix basis = Matrix::Zero(var.rows, var.cols);
          basis(i, j) = 1.0;
          e.AddTerm(k++, basis);
        }
      }
      break;
    case VariableKind::kScalar:
      e.AddTerm(k, Matrix::Ones(1, 1));
      break;
  }
  return e;
}

Matrix LmiProblem::Value(const std::string& name, const Vector& scalars) const {
  return Expr(Variable(name)).Evaluate(scalars);
}

void LmiProblem::AddConstraint(std::string label, AffineExpr expr, Sense sense, double margin) {
  if (expr.rows() != expr.cols()) throw ValidationError("constraint " + label + " is not square");
  constraints_.push_back({std::move(label), std::move(expr), sense, margin});
}

void LmiProblem::SetObjective(AffineExpr scalar_expr) {
  if (scalar_expr.rows() != 1 || scalar_expr.cols() != 1) throw ValidationError("objective must be scalar");
  objective_ = std::move(scalar_expr);
}

sdp::Problem LmiProblem::ToConic() const {
  sdp::Problem prob;
  prob.num_vars = num_scalars_;
  if (objective_) {
    prob.cost = Vector::Zero(num_scalars_);
    for (const auto& [k, c] : objective_->terms()) prob.cost(k) = c(0, 0);
  }
  for (const auto& con : constraints_) {
    sdp::Block block;
    const double sign = con.sense == Sense::kPositiveSemidefinite ? 1.0 : -1.0;
    const auto n = con.expr.rows();
    block.constant = sign * con.expr.constant() - con.margin * Matrix::Identity(n, n);
    for (const auto& [k, c] : con.expr.terms()) {
      if (c.cwiseAbs().maxCoeff() == 0.0) continue;
      block.coefficients.emplace_back(k, sign * c);
    }
    prob.blocks.push_back(std::move(block));
  }
  return prob;
}

std::string LmiProblem::DebugDump() const {
  std::ostringstream os;
  os << "variables (" << num_scalars_ << " scalars):\n";
  for (const auto& v : variables_) {
    os << "  " << v.name << " : " << ToString(v.kind) << " " << v.rows << "x" << v.cols << " -> ["
       << v.offset << ", " << v.offset + v.num_scalars << ")\n";
  }
  os << "constraints (" << constraints_.size() << "):\n";
  for (const auto& c : constraints_) {
    os << "  " << c.label << " : " << c.expr.rows() << "x" << c.expr.cols() << " "
       << (c.sense == Sense::kPositiveSemidefinite ? ">=" : "<=") << " "
       << (c.sense == Sense::kPositiveSemidefinite ? c.margin : -c.margin) << " I, " << c.expr.terms().size()
       << " active scalars\n";
  }
  if (objective_) os << "objective: minimize linear functional over " << objective_->terms().size() << " scalars\n";
  return os.str();
}

}  // namespace satcons::lmi
