#include "satcons/sdp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

namespace satcons::sdp {

const char* ToString(Status status) {
  switch (status) {
    case Status::kOptimal: return "optimal";
    case Status::kOptimalInaccurate: return "optimal-inaccurate";
    case Status::kPrimalInfeasible: return "primal-infeasible";
    case Status::kDualInfeasible: return "dual-infeasible";
    case Status::kMaxIterations: return "max-iterations";
    case Status::kNumericalError: return "numerical-error";
  }
  return "unknown";
}

std::vector<Matrix> EvaluateBlocks(const Problem& problem, const Vector& x) {
  std::vector<Matrix> out;
  out.reserve(problem.blocks.size());
  for (const auto& block : problem.blocks) {
    Matrix f = block.constant;
    for (const auto& [var, coef] : block.coefficients) f += x(var) * coef;
    out.push_back(std::move(f));
  }
  return out;
}

namespace {

using Blocks = std::vector<Matrix>;

double Inner(const Blocks& a, const Blocks& b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += a[k].cwiseProduct(b[k]).sum();
  return sum;
}

double Norm(const Blocks& a) { return std::sqrt(Inner(a, a)); }

void Symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

// Nesterov-Todd scaling of one block: R' Z R = R^{-1} S R^{-T} = diag(lambda).
struct Scaling {
  Matrix r;
  Matrix r_inv;
  Matrix q;    // (R R')^{-1}
  Matrix rrt;  // R R'
  Vector lambda;
};

bool ComputeScaling(const Matrix& s, const Matrix& z, Scaling& out) {
  Eigen::LLT<Matrix> llt_s(s);
  Eigen::LLT<Matrix> llt_z(z);
  if (llt_s.info() != Eigen::Success || llt_z.info() != Eigen::Success) return false;
  const Matrix ls = llt_s.matrixL();
  const Matrix lz = llt_z.matrixL();
  Eigen::JacobiSVD<Matrix> svd(lz.transpose() * ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.lambda = svd.singularValues();
  if ((out.lambda.array() <= 0.0).any() || !out.lambda.allFinite()) return false;
  const Vector inv_sqrt = out.lambda.cwiseSqrt().cwiseInverse();
  out.r = ls * svd.matrixV() * inv_sqrt.asDiagonal();
  const Matrix ls_inv = ls.triangularView<Eigen::Lower>().solve(Matrix::Identity(s.rows(), s.cols()));
  out.r_inv = out.lambda.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * ls_inv;
  out.q = out.r_inv.transpose() * out.r_inv;
  Symmetrize(out.q);
  out.rrt = out.r * out.r.transpose();
  Symmetrize(out.rrt);
  return true;
}

// Largest alpha in [0, inf) with diag(lambda) + alpha * d PSD.
double MaxStep(const Vector& lambda, const Matrix& d) {
  const Vector inv_sqrt = lambda.cwiseSqrt().cwiseInverse();
  Matrix scaled = inv_sqrt.asDiagonal() * d * inv_sqrt.asDiagonal();
  Symmetrize(scaled);
  const double min_eig = MinEigenvalue(scaled);
  return min_eig >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / min_eig;
}

double MaxStepScalar(double value, double delta) {
  return delta >= 0.0 ? std::numeric_limits<double>::infinity() : -value / delta;
}

class Engine {
 public:
  Engine(const Problem& problem, const Settings& settings)
      : prob_(problem), settings_(settings), n_(problem.num_vars) {
    cost_ = problem.cost.size() == n_ ? problem.cost : Vector::Zero(n_);
    for (const auto& block : problem.blocks) h_.push_back(block.constant);
    Vector column_sq = Vector::Zero(n_);
    for (const auto& block : problem.blocks) {
      for (const auto& [var, coef] : block.coefficients) column_sq(var) += coef.squaredNorm();
    }
    g_norm_ = n_ > 0 ? std::sqrt(column_sq.maxCoeff()) : 0.0;
  }

  Solution Run();

 private:
  Blocks ApplyG(const Vector& v) const {
    Blocks out;
    out.reserve(prob_.blocks.size());
    for (const auto& block : prob_.blocks) {
      Matrix acc = Matrix::Zero(block.dim(), block.dim());
      for (const auto& [var, coef] : block.coefficients) acc -= v(var) * coef;
      out.push_back(std::move(acc));
    }
    return out;
  }

  Vector ApplyGt(const Blocks& m) const {
    Vector out = Vector::Zero(n_);
    for (std::size_t b = 0; b < prob_.blocks.size(); ++b) {
      for (const auto& [var, coef] : prob_.blocks[b].coefficients) out(var) -= coef.cwiseProduct(m[b]).sum();
    }
    return out;
  }

  // Solves [0 G'; G -W'W] [dx; dz] = [r1; r2] through the normal equations,
  // followed by a few rounds of iterative refinement.
  void SolveReduced(const Vector& r1, const Blocks& r2, Vector& dx, Blocks& dz) const {
    SolveNormal(r1, r2, dx, dz);
    const double scale = std::max(1.0, std::max(r1.norm(), Norm(r2)));
    for (int round = 0; round < 3; ++round) {
      Vector e1 = r1 - ApplyGt(dz);
      Blocks gdx = ApplyG(dx);
      Blocks e2(r2.size());
      for (std::size_t b = 0; b < r2.size(); ++b) {
        e2[b] = r2[b] - gdx[b] + scaling_[b].rrt * dz[b] * scaling_[b].rrt;
      }
      const double err = std::max(e1.norm(), Norm(e2));
      if (err <= 1e-14 * scale) break;
      Vector cx;
      Blocks cz;
      SolveNormal(e1, e2, cx, cz);
      dx += cx;
      for (std::size_t b = 0; b < r2.size(); ++b) dz[b] += cz[b];
    }
  }

  void SolveNormal(const Vector& r1, const Blocks& r2, Vector& dx, Blocks& dz) const {
    Blocks scaled_r2(r2.size());
    for (std::size_t b = 0; b < r2.size(); ++b) scaled_r2[b] = scaling_[b].q * r2[b] * scaling_[b].q;
    dx = normal_llt_.solve(r1 + ApplyGt(scaled_r2));
    Blocks gdx = ApplyG(dx);
    dz.resize(r2.size());
    for (std::size_t b = 0; b < r2.size(); ++b) {
      dz[b] = scaling_[b].q * (gdx[b] - r2[b]) * scaling_[b].q;
      Symmetrize(dz[b]);
    }
  }

  struct Direction {
    Vector dx;
    Blocks dz, ds, dz_scaled, ds_scaled;
    double dtau = 0.0, dkappa = 0.0;
  };

  Direction Newton(const Vector& rx, const Blocks& rz, double rt, const Blocks& bs, double bk) const {
    const std::size_t nb = prob_.blocks.size();
    Blocks qv(nb), r2(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      const Vector& lam = scaling_[b].lambda;
      Matrix qb(bs[b].rows(), bs[b].cols());
      for (Eigen::Index i = 0; i < qb.rows(); ++i) {
        for (Eigen::Index j = 0; j < qb.cols(); ++j) qb(i, j) = 2.0 * bs[b](i, j) / (lam(i) + lam(j));
      }
      qv[b] = qb;
      r2[b] = -rz[b] - scaling_[b].r * qb * scaling_[b].r.transpose();
    }
    Vector x2;
    Blocks z2;
    SolveReduced(-rx, r2, x2, z2);
    Direction d;
    const double denom = -kappa_ / tau_ + cost_.dot(x1_) + Inner(h_, z1_);
    d.dtau = (-rt - bk / tau_ - cost_.dot(x2) - Inner(h_, z2)) / denom;
    d.dx = x2 + d.dtau * x1_;
    d.dz.resize(nb);
    d.ds.resize(nb);
    d.dz_scaled.resize(nb);
    d.ds_scaled.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      d.dz[b] = z2[b] + d.dtau * z1_[b];
      d.dz_scaled[b] = scaling_[b].r.transpose() * d.dz[b] * scaling_[b].r;
      Symmetrize(d.dz_scaled[b]);
      d.ds_scaled[b] = qv[b] - d.dz_scaled[b];
      Symmetrize(d.ds_scaled[b]);
      d.ds[b] = scaling_[b].r * d.ds_scaled[b] * scaling_[b].r.transpose();
      Symmetrize(d.ds[b]);
    }
    d.dkappa = (bk - kappa_ * d.dtau) / tau_;
    return d;
  }

  double StepLength(const Direction& d) const {
    double alpha = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < prob_.blocks.size(); ++b) {
      alpha = std::min(alpha, MaxStep(scaling_[b].lambda, d.ds_scaled[b]));
      alpha = std::min(alpha, MaxStep(scaling_[b].lambda, d.dz_scaled[b]));
    }
    alpha = std::min(alpha, MaxStepScalar(tau_, d.dtau));
    alpha = std::min(alpha, MaxStepScalar(kappa_, d.dkappa));
    return alpha;
  }

  const Problem& prob_;
  Settings settings_;
  int n_;
  double g_norm_ = 0.0;  // largest column norm of G
  Vector cost_;
  Blocks h_;

  Vector x_;
  Blocks s_, z_;
  double tau_ = 1.0, kappa_ = 1.0;

  std::vector<Scaling> scaling_;
  Eigen::LLT<Matrix> normal_llt_;
  Vector x1_;
  Blocks z1_;
};

Solution Engine::Run() {
  const auto start = std::chrono::steady_clock::now();
  Solution sol;
  const std::size_t nb = prob_.blocks.size();
  x_ = Vector::Zero(n_);
  s_.clear();
  z_.clear();
  int degree = 0;
  for (const auto& block : prob_.blocks) {
    s_.push_back(Matrix::Identity(block.dim(), block.dim()));
    z_.push_back(Matrix::Identity(block.dim(), block.dim()));
    degree += block.dim();
  }
  tau_ = kappa_ = 1.0;
  const double resx0 = std::max(1.0, cost_.norm());
  const double resz0 = std::max(1.0, Norm(h_));
  scaling_.resize(nb);

  struct Snapshot {
    Vector x;
    Blocks z;
    double tau = 1.0;
    double score = std::numeric_limits<double>::infinity();
    double feas = std::numeric_limits<double>::infinity();
    Solution stats;
  } best;

  auto finish = [&](Status status) {
    const bool failed = status == Status::kMaxIterations || status == Status::kNumericalError;
    if (failed && best.score <= settings_.reduced_accuracy_factor) {
      const int iterations = sol.iterations;
      sol = best.stats;
      sol.iterations = iterations;
      x_ = best.x;
      z_ = best.z;
      tau_ = best.tau;
      status = Status::kOptimalInaccurate;
    }
    sol.status = status;
    if (status == Status::kPrimalInfeasible || status == Status::kDualInfeasible) {
      sol.x = x_;
      sol.dual = z_;
    } else {
      sol.x = x_ / tau_;
      sol.dual.clear();
      for (const auto& zb : z_) sol.dual.push_back(zb / tau_);
    }
    sol.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sol;
  };

  for (int iter = 0; iter <= settings_.max_iterations; ++iter) {
    sol.iterations = iter;
    const Vector gtz = ApplyGt(z_);
    const Vector rx = gtz + tau_ * cost_;
    Blocks gx = ApplyG(x_);
    Blocks gxs(nb), rz(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      gxs[b] = gx[b] + s_[b];
      rz[b] = gxs[b] - tau_ * h_[b];
    }
    const double cx = cost_.dot(x_);
    const double hz = Inner(h_, z_);
    const double rt = kappa_ + cx + hz;
    const double sz = Inner(s_, z_);
    const double mu = (sz + tau_ * kappa_) / (degree + 1);

    sol.primal_objective = cx / tau_;
    sol.dual_objective = -hz / tau_;
    const double pscale = std::max({resz0, Norm(gx) / tau_, Norm(s_) / tau_});
    // Normwise backward error: G' z sums terms of size |G| |z|.
    const double dscale = std::max({resx0, gtz.norm() / tau_, g_norm_ * Norm(z_) / tau_});
    sol.primal_residual = Norm(rz) / tau_ / pscale;
    sol.dual_residual = rx.norm() / tau_ / dscale;
    sol.gap = sz / (tau_ * tau_);
    double rel_gap = std::numeric_limits<double>::infinity();
    if (sol.primal_objective < 0.0) rel_gap = sol.gap / -sol.primal_objective;
    else if (sol.dual_objective > 0.0) rel_gap = sol.gap / sol.dual_objective;

    if (settings_.verbose) {
      std::fprintf(stderr, "%3d pcost % .6e dcost % .6e gap %.2e pres %.2e dres %.2e tau %.2e kap %.2e\n",
                   iter, sol.primal_objective, sol.dual_objective, sol.gap, sol.primal_residual,
                   sol.dual_residual, tau_, kappa_);
    }

    const double feas = std::max(sol.primal_residual, sol.dual_residual);
    const double score = std::max(feas / settings_.feasibility_tol,
                                  std::min(sol.gap / settings_.absolute_gap_tol, rel_gap / settings_.relative_gap_tol));
    if (score <= 1.0) return finish(Status::kOptimal);
    if (score < best.score) {
      best.x = x_;
      best.z = z_;
      best.tau = tau_;
      best.score = score;
      best.feas = feas;
      best.stats = sol;
    }
    // Past the precision floor the residuals blow up; keep the best point.
    if (best.score <= settings_.reduced_accuracy_factor && feas > 1e3 * best.feas) {
      return finish(Status::kNumericalError);
    }
    if (hz < 0.0 && gtz.norm() / resx0 / -hz <= settings_.feasibility_tol) {
      return finish(Status::kPrimalInfeasible);
    }
    if (cx < 0.0 && Norm(gxs) / resz0 / -cx <= settings_.feasibility_tol) {
      return finish(Status::kDualInfeasible);
    }
    if (iter == settings_.max_iterations) break;

    for (std::size_t b = 0; b < nb; ++b) {
      if (!ComputeScaling(s_[b], z_[b], scaling_[b])) return finish(Status::kNumericalError);
    }
    std::vector<Matrix> q(nb);
    for (std::size_t b = 0; b < nb; ++b) q[b] = scaling_[b].q;
    Matrix normal = settings_.parallel_kernels ? AssembleNormalMatrixParallel(prob_, q)
                                               : AssembleNormalMatrixSerial(prob_, q);
    const double diag_scale = std::max(1.0, normal.diagonal().cwiseAbs().maxCoeff());
    normal_llt_.compute(normal);
    double reg = 1e-14 * diag_scale;
    while (normal_llt_.info() != Eigen::Success && reg < 1e-4 * diag_scale) {
      normal_llt_.compute(normal + reg * Matrix::Identity(n_, n_));
      reg *= 100.0;
    }
    if (normal_llt_.info() != Eigen::Success) return finish(Status::kNumericalError);

    SolveReduced(-cost_, h_, x1_, z1_);

    // Predictor.
    Blocks bs(nb);
    for (std::size_t b = 0; b < nb; ++b) bs[b] = Matrix((-scaling_[b].lambda.array().square()).matrix().asDiagonal());
    const Direction aff = Newton(rx, rz, rt, bs, -tau_ * kappa_);
    const double alpha_aff = std::min(1.0, StepLength(aff));
    const double sigma = std::pow(std::clamp(1.0 - alpha_aff, 0.0, 1.0), 3.0);

    // Corrector.
    for (std::size_t b = 0; b < nb; ++b) {
      Matrix second = aff.ds_scaled[b] * aff.dz_scaled[b];
      second = 0.5 * (second + second.transpose()).eval();
      bs[b] = Matrix((-scaling_[b].lambda.array().square()).matrix().asDiagonal());
      bs[b] -= second;
      bs[b].diagonal().array() += sigma * mu;
    }
    const double bk = -tau_ * kappa_ - aff.dtau * aff.dkappa + sigma * mu;
    Blocks rz_scaled(nb);
    for (std::size_t b = 0; b < nb; ++b) rz_scaled[b] = (1.0 - sigma) * rz[b];
    const Direction d = Newton((1.0 - sigma) * rx, rz_scaled, (1.0 - sigma) * rt, bs, bk);
    const double alpha = std::min(1.0, settings_.step_fraction * StepLength(d));
    if (!std::isfinite(alpha) || alpha <= 0.0) return finish(Status::kNumericalError);

    x_ += alpha * d.dx;
    for (std::size_t b = 0; b < nb; ++b) {
      s_[b] += alpha * d.ds[b];
      z_[b] += alpha * d.dz[b];
      Symmetrize(s_[b]);
      Symmetrize(z_[b]);
    }
    tau_ += alpha * d.dtau;
    kappa_ += alpha * d.dkappa;
    if (!x_.allFinite() || !std::isfinite(tau_) || !std::isfinite(kappa_)) {
      return finish(Status::kNumericalError);
    }
  }
  return finish(Status::kMaxIterations);
}

}  // namespace

Solution Solve(const Problem& problem, const Settings& settings) {
  for (const auto& block : problem.blocks) {
    for (const auto& [var, coef] : block.coefficients) {
      if (var < 0 || var >= problem.num_vars || coef.rows() != block.dim() || coef.cols() != block.dim()) {
        throw ValidationError("malformed SDP block coefficient");
      }
    }
  }
  Engine engine(problem, settings);
  return engine.Run();
}

}  // namespace satcons::sdp
