#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <json.hpp>

#include "satcons/regions.hpp"

using namespace satcons;
using namespace satcons::regions;

namespace {

Matrix Rotated(double a, double b, double theta) {
  Eigen::Matrix2d R;
  R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
  Eigen::Matrix2d D = Eigen::Vector2d(a, b).asDiagonal();
  return R * D * R.transpose();
}

}  // namespace

TEST_CASE("family validation") {
  CHECK_THROWS_AS(EllipsoidFamily({}, 1.0), ValidationError);
  CHECK_THROWS_AS(EllipsoidFamily({Matrix::Identity(2, 2)}, 0.0), ValidationError);
  CHECK_THROWS_AS(EllipsoidFamily({Matrix::Identity(2, 2), Matrix::Identity(3, 3)}, 1.0), ValidationError);
  Matrix indefinite = Matrix::Identity(2, 2);
  indefinite(1, 1) = -1.0;
  CHECK_THROWS_AS(EllipsoidFamily({indefinite}, 1.0), ValidationError);
}

TEST_CASE("membership is the intersection") {
  Matrix P1 = Vector(Eigen::Vector2d(1.0, 4.0)).asDiagonal();
  Matrix P2 = Vector(Eigen::Vector2d(4.0, 1.0)).asDiagonal();
  EllipsoidFamily fam({P1, P2}, 1.0);
  CHECK(fam.Contains(Eigen::Vector2d(0.4, 0.4)));
  CHECK_FALSE(fam.Contains(Eigen::Vector2d(0.9, 0.0)));  // inside E(P1) only
  CHECK_FALSE(fam.Contains(Eigen::Vector2d(0.0, 0.9)));  // inside E(P2) only
  CHECK(fam.MaxQuadratic(Eigen::Vector2d(0.5, 0.0)) == doctest::Approx(1.0));
  CHECK(fam.Contains(Eigen::Vector2d(0.5, 0.0)));
}

TEST_CASE("inscribed check") {
  Matrix P1 = Vector(Eigen::Vector2d(1.0, 4.0)).asDiagonal();
  Matrix P2 = Vector(Eigen::Vector2d(4.0, 1.0)).asDiagonal();
  EllipsoidFamily fam({P1, P2}, 1.0);
  // The disc of radius 1/2 is the largest circle in the intersection.
  CHECK(InscribedCheck(4.0 * Matrix::Identity(2, 2), fam));
  CHECK_FALSE(InscribedCheck(3.9 * Matrix::Identity(2, 2), fam));
}

TEST_CASE("boundary samples lie on the level set") {
  Matrix P = Rotated(2.0, 0.5, 0.3);
  auto pts = BoundarySample(P, 3.0, 200, 11);
  REQUIRE(pts.size() == 200);
  Vector mean = Vector::Zero(2);
  for (const auto& z : pts) {
    CHECK(z.dot(P * z) == doctest::Approx(3.0).epsilon(1e-12));
    mean += z / 200.0;
  }
  // Symmetric distribution: the sample mean is near the centre.
  CHECK(mean.norm() < 0.3);
  auto again = BoundarySample(P, 3.0, 200, 11);
  CHECK(again[17].isApprox(pts[17]));
}

TEST_CASE("ellipse parameters from a 2x2 shape") {
  const double theta = 0.4;
  // Semi-axes 1/sqrt(0.25) = 2 along theta and 1/sqrt(4) = 0.5 across it.
  EllipseParameters e = EllipseFrom2x2(Rotated(0.25, 4.0, theta), 1.0);
  CHECK(e.semi_major == doctest::Approx(2.0));
  CHECK(e.semi_minor == doctest::Approx(0.5));
  CHECK(e.rotation == doctest::Approx(theta));
  EllipseParameters scaled = EllipseFrom2x2(Rotated(0.25, 4.0, theta), 4.0);
  CHECK(scaled.semi_major == doctest::Approx(4.0));
  EllipseParameters flipped = EllipseFrom2x2(Rotated(0.25, 4.0, theta + M_PI), 1.0);
  CHECK(flipped.rotation == doctest::Approx(theta));
  CHECK(e.center_x == 0.0);
}

TEST_CASE("coordinate slices and export") {
  Matrix P = Matrix::Identity(4, 4);
  P(0, 2) = P(2, 0) = 0.3;
  EllipsoidFamily fam({P, 2.0 * P}, 1.5);
  auto slices = Slice2d(fam, 0, 2);
  REQUIRE(slices.size() == 2);
  CHECK(slices[0](0, 1) == doctest::Approx(0.3));
  CHECK(slices[1](1, 1) == doctest::Approx(2.0));
  Matrix Z = 3.0 * Matrix::Identity(4, 4);
  auto doc = nlohmann::json::parse(ExportJson(fam, 0, 2, &Z));
  CHECK(doc.at("slice").at("method") == "coordinate-slice");
  CHECK(doc.at("modes").size() == 2);
  CHECK(doc.at("level").get<double>() == 1.5);
  CHECK(doc.at("inscribed").at("ellipse").at("semi_axes")[0].get<double>() == doctest::Approx(1.0 / std::sqrt(3.0)));
}
