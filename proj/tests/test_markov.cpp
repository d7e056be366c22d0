#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "satcons/markov.hpp"
#include "support.hpp"

using namespace satcons;

namespace {

Matrix Example1Generator() { return testing::Example1().polytope.vertices()[0]; }

}  // namespace

TEST_CASE("generator diagnostics list every problem") {
  Matrix q(2, 2);
  q << -1.0, 1.0, -0.5, 0.0;
  auto diag = markov::ValidateGenerator(q);
  CHECK_FALSE(diag.valid);
  CHECK(diag.problems.size() == 2);
  CHECK(markov::ValidateGenerator(Example1Generator()).valid);
}

TEST_CASE("polytope mixing and scaling") {
  Matrix q1 = Example1Generator();
  Matrix q2 = 2.0 * q1;
  markov::GeneratorPolytope poly({q1, q2});
  CHECK(poly.Mix(Eigen::Vector2d(0.25, 0.75)).isApprox(1.75 * q1));
  CHECK_THROWS_AS(poly.Mix(Eigen::Vector2d(0.5, 0.6)), ValidationError);
  CHECK(poly.Scaled(3.0).vertices()[1].isApprox(6.0 * q1));
  CHECK_THROWS_AS(poly.Scaled(0.0), ValidationError);
  CHECK_THROWS_AS(markov::GeneratorPolytope({q1, Matrix::Zero(2, 2)}), ValidationError);
}

TEST_CASE("stationary distribution") {
  Vector pi = markov::StationaryDistribution(Example1Generator());
  // Balance equations of the example generator solved by hand: pi = (2, 1, 2) / 5.
  CHECK(pi(0) == doctest::Approx(0.4));
  CHECK(pi(1) == doctest::Approx(0.2));
  CHECK(pi(2) == doctest::Approx(0.4));
  CHECK((pi.transpose() * Example1Generator()).norm() < 1e-12);
}

TEST_CASE("trajectory structure and determinism") {
  Matrix q = Example1Generator();
  Vector mu = Vector::Constant(3, 1.0 / 3.0);
  auto a = markov::SampleTrajectory(q, mu, 10.0, 42);
  auto b = markov::SampleTrajectory(q, mu, 10.0, 42);
  CHECK(a.jump_times == b.jump_times);
  CHECK(a.modes == b.modes);
  REQUIRE(a.num_segments() >= 1);
  CHECK(a.jump_times[0] == 0.0);
  for (int k = 1; k < a.num_segments(); ++k) {
    CHECK(a.jump_times[k] > a.jump_times[k - 1]);
    CHECK(a.jump_times[k] < 10.0);
    CHECK(a.modes[k] != a.modes[k - 1]);
  }
  CHECK(a.ModeAt(0.0) == a.modes[0]);
  CHECK(a.ModeAt(a.SegmentEnd(0)) == (a.num_segments() > 1 ? a.modes[1] : a.modes[0]));
  std::string csv = markov::TrajectoryToCsv(a);
  CHECK(csv.rfind("time,mode\n", 0) == 0);
}

TEST_CASE("absorbing mode") {
  Matrix q = Matrix::Zero(2, 2);
  q(1, 0) = 1.0;
  q(1, 1) = -1.0;
  auto t = markov::SampleTrajectory(q, Eigen::Vector2d(1.0, 0.0), 5.0, 1);
  CHECK(t.num_segments() == 1);
  CHECK(t.modes[0] == 0);
}

TEST_CASE("holding times and embedded chain over 1e5 jumps") {
  Matrix q = Example1Generator();
  auto t = markov::SampleTrajectory(q, Vector::Constant(3, 1.0 / 3.0), 5.0e4, 2024);
  REQUIRE(t.num_segments() > 100000);
  Vector holding = Vector::Zero(3), visits = Vector::Zero(3);
  Matrix counts = Matrix::Zero(3, 3);
  for (int k = 0; k + 1 < t.num_segments(); ++k) {
    holding(t.modes[k]) += t.SegmentEnd(k) - t.jump_times[k];
    visits(t.modes[k]) += 1;
    counts(t.modes[k], t.modes[k + 1]) += 1;
  }
  for (int i = 0; i < 3; ++i) {
    CHECK(holding(i) / visits(i) == doctest::Approx(-1.0 / q(i, i)).epsilon(0.02));
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      CHECK(counts(i, j) / visits(i) == doctest::Approx(q(i, j) / -q(i, i)).epsilon(0.02));
    }
  }
}
