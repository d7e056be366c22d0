#include "satcons/regions.hpp"

#include <cmath>
#include <random>

#include <json.hpp>

namespace satcons::regions {

namespace {

void RequirePositiveDefinite(const Matrix& P, const std::string& what) {
  if (P.rows() != P.cols()) throw ValidationError(what + " is not square");
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, P.cwiseAbs().maxCoeff())) {
    throw ValidationError(what + " is not symmetric");
  }
  Eigen::LLT<Matrix> llt(P);
  if (llt.info() != Eigen::Success) throw ValidationError(what + " is not positive definite");
}

nlohmann::json MatrixJson(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json EllipseJson(const EllipseParameters& e) {
  return {{"center", {e.center_x, e.center_y}},
          {"semi_axes", {e.semi_major, e.semi_minor}},
          {"rotation", e.rotation}};
}

}  // namespace

EllipsoidFamily::EllipsoidFamily(std::vector<Matrix> shapes, double level)
    : shapes_(std::move(shapes)), level_(level) {
  if (shapes_.empty()) throw ValidationError("ellipsoid family is empty");
  if (!(level_ > 0.0)) throw ValidationError("ellipsoid level must be positive");
  for (std::size_t l = 0; l < shapes_.size(); ++l) {
    if (shapes_[l].rows() != shapes_[0].rows()) throw ValidationError("ellipsoid shapes disagree in size");
    RequirePositiveDefinite(shapes_[l], "shape " + std::to_string(l + 1));
  }
}

double EllipsoidFamily::MaxQuadratic(const Vector& z) const {
  if (z.size() != dim()) throw ValidationError("point has the wrong dimension");
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& P : shapes_) worst = std::max(worst, z.dot(P * z));
  return worst;
}

bool EllipsoidFamily::Contains(const Vector& z, double tol) const { return MaxQuadratic(z) <= level_ + tol; }

bool InscribedCheck(const Matrix& Z, const EllipsoidFamily& family, double tol) {
  if (Z.rows() != family.dim() || Z.cols() != family.dim()) throw ValidationError("Z has the wrong dimension");
  for (const auto& P : family.shapes()) {
    Matrix diff = Z - P;
    diff = 0.5 * (diff + diff.transpose()).eval();
    if (MinEigenvalue(diff) < -tol) return false;
  }
  return true;
}

std::vector<Vector> BoundarySample(const Matrix& P, double sigma, int count, unsigned seed) {
  RequirePositiveDefinite(P, "shape");
  if (!(sigma > 0.0)) throw ValidationError("level must be positive");
  Eigen::SelfAdjointEigenSolver<Matrix> es(P);
  const Matrix inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                          es.eigenvectors().transpose();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Vector> out;
  out.reserve(count);
  const int n = static_cast<int>(P.rows());
  while (static_cast<int>(out.size()) < count) {
    Vector g(n);
    for (int k = 0; k < n; ++k) g(k) = normal(rng);
    const double norm = g.norm();
    if (norm == 0.0) continue;
    Vector z = std::sqrt(sigma) * inv_sqrt * (g / norm);
    // One Newton-free rescale removes rounding drift from the level set.
    z *= std::sqrt(sigma / z.dot(P * z));
    out.push_back(std::move(z));
  }
  return out;
}

std::vector<Matrix> Slice2d(const EllipsoidFamily& family, int i, int j) {
  const int n = family.dim();
  if (i < 0 || j < 0 || i >= n || j >= n || i == j) throw ValidationError("invalid slice axes");
  std::vector<Matrix> out;
  for (const auto& P : family.shapes()) {
    Matrix M(2, 2);
    M << P(i, i), P(i, j), P(j, i), P(j, j);
    out.push_back(M);
  }
  return out;
}

EllipseParameters EllipseFrom2x2(const Matrix& M, double sigma) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  // Smallest eigenvalue gives the major axis.
  EllipseParameters e;
  e.semi_major = std::sqrt(sigma / es.eigenvalues()(0));
  e.semi_minor = std::sqrt(sigma / es.eigenvalues()(1));
  const Vector v = es.eigenvectors().col(0);
  e.rotation = std::atan2(v(1), v(0));
  if (e.rotation > M_PI / 2) e.rotation -= M_PI;
  if (e.rotation <= -M_PI / 2) e.rotation += M_PI;
  return e;
}

std::string ExportJson(const EllipsoidFamily& family, int i, int j, const Matrix* Z) {
  nlohmann::json doc;
  doc["level"] = family.level();
  doc["dimension"] = family.dim();
  doc["slice"] = {{"axes", {i, j}}, {"method", "coordinate-slice"}};
  nlohmann::json modes = nlohmann::json::array();
  const auto slices = Slice2d(family, i, j);
  for (int l = 0; l < family.num_modes(); ++l) {
    modes.push_back({{"mode", l + 1},
                     {"shape", MatrixJson(family.shapes()[l])},
                     {"slice_shape", MatrixJson(slices[l])},
                     {"ellipse", EllipseJson(EllipseFrom2x2(slices[l], family.level()))}});
  }
  doc["modes"] = modes;
  if (Z) {
    EllipsoidFamily inner({*Z}, 1.0);
    const Matrix zs = Slice2d(inner, i, j)[0];
    doc["inscribed"] = {{"shape", MatrixJson(*Z)},
                        {"slice_shape", MatrixJson(zs)},
                        {"ellipse", EllipseJson(EllipseFrom2x2(zs, 1.0))}};
  }
  return doc.dump(2);
}

}  // namespace satcons::regions
