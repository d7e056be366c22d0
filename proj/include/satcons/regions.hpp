#pragma once

#include <string>
#include <vector>

#include "satcons/common.hpp"

namespace satcons::regions {

// R(z, sigma) = intersection over modes of { z : z' P_l z <= sigma }.
class EllipsoidFamily {
 public:
  // Throws ValidationError if the family is empty, shapes disagree in size, any
  // shape is not symmetric positive definite, or level <= 0.
  EllipsoidFamily(std::vector<Matrix> shapes, double level);

  const std::vector<Matrix>& shapes() const { return shapes_; }
  double level() const { return level_; }
  int dim() const { return static_cast<int>(shapes_[0].rows()); }
  int num_modes() const { return static_cast<int>(shapes_.size()); }

  // Largest z' P_l z over the modes.
  double MaxQuadratic(const Vector& z) const;
  bool Contains(const Vector& z, double tol = 1e-9) const;

 private:
  std::vector<Matrix> shapes_;
  double level_;
};

// E(Z, 1) inside every E(P_l, 1): Z - P_l >= -tol I.
bool InscribedCheck(const Matrix& Z, const EllipsoidFamily& family, double tol = 1e-9);

// Uniform points on { z : z' P z = sigma }: Gaussian directions normalised
// onto the sphere, mapped through sqrt(sigma) P^{-1/2}.
std::vector<Vector> BoundarySample(const Matrix& P, double sigma, int count, unsigned seed);

// Principal 2x2 submatrix of each shape: the coordinate slice through the origin.
std::vector<Matrix> Slice2d(const EllipsoidFamily& family, int i, int j);

// Ellipse { v : v' M v <= sigma } in plotting form.
struct EllipseParameters {
  double center_x = 0.0;
  double center_y = 0.0;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  double rotation = 0.0;  // radians, major axis from the first coordinate axis
};
EllipseParameters EllipseFrom2x2(const Matrix& M, double sigma);

// JSON document with shapes, level, and the (i, j) slice ellipses (labelled as
// coordinate slices). An optional inscribed shape Z is exported alongside.
std::string ExportJson(const EllipsoidFamily& family, int i, int j, const Matrix* Z = nullptr);

}  // namespace satcons::regions
