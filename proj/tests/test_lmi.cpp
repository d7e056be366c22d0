#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "satcons/lmi.hpp"
#include "satcons/optimize.hpp"
#include "support.hpp"

using namespace satcons;
using namespace satcons::lmi;

namespace {

const Constraint& Find(const LmiProblem& prob, const std::string& label) {
  for (const auto& c : prob.constraints()) {
    if (c.label == label) return c;
  }
  FAIL("missing constraint " << label);
  throw std::logic_error("unreachable");
}

bool IsSymmetric(const AffineExpr& e) {
  if (!e.constant().isApprox(e.constant().transpose(), 1e-14) && !e.constant().isZero()) return false;
  for (const auto& [k, c] : e.terms()) {
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-14) return false;
  }
  return true;
}

Vector RandomScalars(std::mt19937& rng, int n) {
  std::normal_distribution<double> g;
  return Vector::NullaryExpr(n, [&]() { return g(rng); });
}

}  // namespace

TEST_CASE("affine expression algebra matches dense evaluation") {
  LmiProblem prob;
  prob.AddSymmetric("P", 2);
  prob.AddFull("X", 3, 2);
  prob.AddDiagonal("S", 3);
  prob.AddScalar("t");
  CHECK(prob.num_scalars() == 3 + 6 + 3 + 1);
  std::mt19937 rng(5);
  Vector y = RandomScalars(rng, prob.num_scalars());
  Matrix P = prob.Value("P", y), X = prob.Value("X", y), S = prob.Value("S", y);
  CHECK(P.isApprox(P.transpose()));
  CHECK(S.isDiagonal());
  Matrix A = Matrix::Random(2, 2), B = Matrix::Random(3, 3), C = Matrix::Random(3, 2);
  AffineExpr e = A * prob.Expr("P") + prob.Expr("X").Transpose() * C - 2.0 * prob.Expr("P");
  CHECK(e.Evaluate(y).isApprox(A * P + X.transpose() * C - 2.0 * P));
  CHECK(Kron(B, prob.Expr("P")).Evaluate(y).isApprox(Kron(B, P)));
  CHECK(prob.Expr("X").Row(1).Evaluate(y).isApprox(X.row(1)));
  AffineExpr blocks = AffineExpr::SymmetricBlocks({{prob.Expr("P")}, {prob.Expr("X"), prob.Expr("S")}});
  Matrix dense(5, 5);
  dense << P, X.transpose(), X, S;
  CHECK(blocks.Evaluate(y).isApprox(dense));
  CHECK(Trace(prob.Expr("P")).Evaluate(y)(0, 0) == doctest::Approx(P.trace()));
  CHECK_THROWS_AS(prob.AddScalar("t"), ValidationError);
  CHECK_THROWS_AS(prob.Variable("missing"), ValidationError);
}

TEST_CASE("conic form negates negative semidefinite constraints") {
  LmiProblem prob;
  prob.AddScalar("a");
  prob.AddConstraint("neg", prob.Expr("a") - AffineExpr::Constant(Matrix::Ones(1, 1)),
                     Sense::kNegativeSemidefinite, 0.5);
  sdp::Problem conic = prob.ToConic();
  REQUIRE(conic.blocks.size() == 1);
  // -(a - 1) - 0.5 >= 0
  CHECK(conic.blocks[0].constant(0, 0) == doctest::Approx(0.5));
  CHECK(conic.blocks[0].coefficients[0].second(0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("example dimensions and symmetry") {
  NetworkModel model = testing::Example1();
  DisagreementSystem sys = BuildDisagreementSystem(model);
  LmiProblem t1 = AssembleTheorem1(sys, model.polytope, 1.0, 0.5);
  // z (4) + Phi (6) + w (6) + two coupling blocks (8).
  CHECK(Find(t1, "main mode 1 vertex 1").expr.rows() == 24);
  CHECK(Find(t1, "saturation mode 2 row 6").expr.rows() == 5);
  CHECK(t1.constraints().size() == 1 + 3 * (1 + 1 + 6));
  for (const auto& c : t1.constraints()) CHECK(IsSymmetric(c.expr));

  LmiProblem origin = AssembleOriginVariant(sys, model.polytope, std::nullopt);
  CHECK(Find(origin, "main mode 3 vertex 1").expr.rows() == 18);
  CHECK(origin.HasVariable("gamma"));
  CHECK(origin.objective().has_value());

  NetworkModel single = model;
  single.modes = {model.modes[0]};
  single.polytope = markov::GeneratorPolytope({Matrix::Zero(1, 1)});
  single.initial_distribution = Vector::Ones(1);
  single.Validate();
  LmiProblem one = AssembleTheorem1(BuildDisagreementSystem(single), single.polytope, 1.0, 0.5);
  CHECK(Find(one, "main mode 1 vertex 1").expr.rows() == 16);

  LmiProblem l2 = AssembleL2(sys, model.polytope, 100.0 / 3.0, Matrix::Identity(4, 4), std::nullopt);
  CHECK(Find(l2, "main mode 1 vertex 1").expr.rows() == 22);
  for (const auto& c : l2.constraints()) CHECK(IsSymmetric(c.expr));
}

TEST_CASE("polytope vertices multiply the main blocks") {
  NetworkModel model = testing::Example1();
  Matrix q = model.polytope.vertices()[0];
  NetworkModel two = model.WithPolytope(markov::GeneratorPolytope({q, 0.5 * q}));
  LmiProblem prob = AssembleTheorem1(BuildDisagreementSystem(two), two.polytope, 1.0, 0.5);
  int main_blocks = 0;
  for (const auto& c : prob.constraints()) main_blocks += c.label.rfind("main", 0) == 0;
  CHECK(main_blocks == 6);
}

TEST_CASE("decision variable counts") {
  NetworkModel model = testing::Example1();
  DisagreementSystem sys = BuildDisagreementSystem(model);
  LmiProblem t1 = AssembleTheorem1(sys, model.polytope, 1.0, 0.5);
  // Diagonal S (6) plus, per mode, symmetric Y (10) and full X (24).
  CHECK(t1.num_scalars() == 108);
  CHECK(VariableCountFormula(3, 2, 2, 3) == doctest::Approx(165.0));
  CHECK(SynthesisVariableCountFormula(3, 2, 2, 3) == doctest::Approx(129.0));
  NetworkModel nogain = LoadModelFile(testing::ConfigPath("example1_nogain.json"));
  LmiProblem syn = AssembleSynthesis(BuildOpenLoopSystem(nogain), nogain.polytope, 1.0, 0.5);
  // S (6) + F (3) + Kbar (4) + three X (72).
  CHECK(syn.num_scalars() == 85);
}

TEST_CASE("sector conventions differ only in the sector row") {
  NetworkModel model = testing::Example1();
  DisagreementSystem sys = BuildDisagreementSystem(model);
  LmiProblem a = AssembleTheorem1(sys, model.polytope, 1.0, 0.5, {.convention = SectorConvention::kConsistent});
  LmiProblem b = AssembleTheorem1(sys, model.polytope, 1.0, 0.5, {.convention = SectorConvention::kAsPrinted});
  std::mt19937 rng(8);
  Vector y = RandomScalars(rng, a.num_scalars());
  Matrix fa = Find(a, "main mode 1 vertex 1").expr.Evaluate(y);
  Matrix fb = Find(b, "main mode 1 vertex 1").expr.Evaluate(y);
  Matrix X = a.Value("X1", y);
  Matrix diff = fa - fb;
  CHECK(diff.block(4, 0, 6, 4).isApprox(2.0 * X));
  diff.block(4, 0, 6, 4).setZero();
  diff.block(0, 4, 4, 6).setZero();
  CHECK(diff.isZero());
  CHECK(ParseSectorConvention("as-printed") == SectorConvention::kAsPrinted);
  CHECK_THROWS_AS(ParseSectorConvention("printed"), ValidationError);
}

TEST_CASE("gamma relations") {
  CHECK(GammaFromStart(3, 2.0, 0.5) == doctest::Approx(0.25));
  CHECK(GammaFromOrigin(3, 2.0, 0.5) == doctest::Approx(1.0 / 3.0));
  // With gamma from the start relation the disturbance corner equals rho eta.
  const double gamma = GammaFromStart(3, 2.0, 0.7);
  CHECK((1.0 - gamma) / (3 * gamma) == doctest::Approx(2.0 * 0.7));
}

TEST_CASE("Schur reduction on random instances") {
  std::mt19937 rng(17);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    const int n1 = 1 + static_cast<int>(rng() % 4), n2 = 1 + static_cast<int>(rng() % 4);
    Matrix R = Matrix::NullaryExpr(n1 + n2, n1 + n2, [&]() { return g(rng); });
    Matrix M = R * R.transpose() - (trial % 2 ? 0.5 : 0.0) * Matrix::Identity(n1 + n2, n1 + n2);
    M.bottomRightCorner(n2, n2) += 2.0 * Matrix::Identity(n2, n2);
    const bool psd = MinEigenvalue(M) > 0.0;
    Matrix schur = SchurReduce(M, n1, false);
    // Block identity: M > 0 iff M22 > 0 and M11 - M12 M22^{-1} M21 > 0.
    const bool via_schur = MinEigenvalue(M.bottomRightCorner(n2, n2)) > 0.0 && MinEigenvalue(schur) > 0.0;
    CHECK(psd == via_schur);
    // Determinant factorisation.
    CHECK(M.determinant() ==
          doctest::Approx(M.bottomRightCorner(n2, n2).determinant() * schur.determinant()).epsilon(1e-8));
    Matrix other = SchurReduce(M, n1, true);
    CHECK(other.rows() == n2);
  }
  Matrix singular = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(SchurReduce(singular, 1, true), ValidationError);
}

TEST_CASE("containment block encodes Z >= Y^{-1}") {
  LmiProblem prob;
  prob.AddSymmetric("Y1", 2);
  AddContainment(prob, {"Y1"});
  const auto& c = Find(prob, "containment Y1");
  Matrix Y(2, 2);
  Y << 2.0, 0.3, 0.3, 1.0;
  Matrix Pinv = Y.inverse();
  for (double scale : {0.98, 1.02}) {
    Matrix Z = scale * Pinv;
    Vector y = Vector::Zero(prob.num_scalars());
    // Fill by least squares through the variable map.
    const auto& yv = prob.Variable("Y1");
    const auto& zv = prob.Variable("Z");
    y(yv.offset + 0) = Y(0, 0);
    y(yv.offset + 1) = Y(1, 0);
    y(yv.offset + 2) = Y(1, 1);
    y(zv.offset + 0) = Z(0, 0);
    y(zv.offset + 1) = Z(1, 0);
    y(zv.offset + 2) = Z(1, 1);
    REQUIRE(prob.Value("Y1", y).isApprox(Y));
    REQUIRE(prob.Value("Z", y).isApprox(Z));
    const double lam = MinEigenvalue(c.expr.Evaluate(y));
    CHECK((lam >= 0.0) == (scale > 1.0));
  }
}

TEST_CASE("assembled LMIs agree with the nonlinear conditions pointwise") {
  int compared = 0, disagreements = 0, feasible_instances = 0, positive = 0;
  for (unsigned seed = 0; seed < 50; ++seed) {
    NetworkModel model = testing::RandomInstance(seed);
    DisagreementSystem sys = BuildDisagreementSystem(model);
    const double rho = 0.2, gamma = 0.5;
    LmiProblem prob = AssembleTheorem1(sys, model.polytope, rho, gamma);
    opt::SolveReport rep = opt::Solve(prob);
    std::mt19937 rng(1000 + seed);
    Vector base = Vector::Zero(prob.num_scalars());
    if (rep.feasible()) {
      ++feasible_instances;
      base = testing::Pack(prob, rep.values);
    }
    for (int trial = 0; trial < 20; ++trial) {
      // Perturbations from tiny to large around the solver point (or the origin).
      const double scale = std::pow(10.0, -3.0 + 0.2 * trial) * std::max(1.0, base.cwiseAbs().maxCoeff());
      Vector y = base + scale * RandomScalars(rng, prob.num_scalars());
      std::vector<Matrix> Y, X;
      for (int l = 0; l < sys.num_modes(); ++l) {
        Y.push_back(prob.Value(YName(l), y));
        X.push_back(prob.Value(XName(l), y));
      }
      Matrix S = prob.Value("S", y);
      bool definite = MinEigenvalue(S) > 0.0;
      for (const auto& Yl : Y) definite = definite && MinEigenvalue(Yl) > 0.0;
      if (!definite) continue;

      testing::NonlinearPoint pt = testing::ToNonlinear(Y, X, S);
      const Matrix& pi = model.polytope.vertices()[0];
      for (int l = 0; l < sys.num_modes(); ++l) {
        Matrix lmi_block = Find(prob, "main mode " + std::to_string(l + 1) + " vertex 1").expr.Evaluate(y);
        Matrix nl = testing::DissipationMatrix(sys, pi, l, pt, rho, gamma, SectorConvention::kConsistent);
        const double a = MaxEigenvalue(lmi_block) / lmi_block.norm();
        const double b = MaxEigenvalue(nl) / nl.norm();
        if (std::abs(a) > 1e-9 && std::abs(b) > 1e-9) {
          ++compared;
          positive += a < 0;
          disagreements += (a > 0) != (b > 0);
        }
        for (int q = 0; q < sys.n_u; ++q) {
          Matrix sat = Find(prob, "saturation mode " + std::to_string(l + 1) + " row " + std::to_string(q + 1))
                           .expr.Evaluate(y);
          const double c = MinEigenvalue(sat) / sat.norm();
          const double d = testing::SaturationSlack(sys, l, q, pt, gamma);
          if (std::abs(c) > 1e-9 && std::abs(d) > 1e-9) {
            ++compared;
            positive += c > 0;
            disagreements += (c > 0) != (d > 0);
          }
        }
      }
    }
  }
  MESSAGE("feasible instances: " << feasible_instances << ", comparisons: " << compared
                                 << ", satisfied: " << positive);
  CHECK(feasible_instances >= 10);
  CHECK(positive > 100);
  CHECK(compared - positive > 100);
  CHECK(disagreements == 0);
}
