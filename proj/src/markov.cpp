#include "satcons/markov.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace satcons::markov {

GeneratorDiagnostics ValidateGenerator(const Matrix& generator, double tol) {
  GeneratorDiagnostics diag;
  if (generator.rows() != generator.cols()) {
    diag.valid = false;
    diag.problems.push_back("generator is not square");
    return diag;
  }
  for (Eigen::Index i = 0; i < generator.rows(); ++i) {
    for (Eigen::Index j = 0; j < generator.cols(); ++j) {
      if (i != j && generator(i, j) < -tol) {
        diag.valid = false;
        diag.problems.push_back("negative off-diagonal rate at (" + std::to_string(i + 1) + "," +
                                std::to_string(j + 1) + ")");
      }
    }
    const double row_sum = generator.row(i).sum();
    if (std::abs(row_sum) > tol) {
      diag.valid = false;
      std::ostringstream os;
      os << "row " << i + 1 << " sums to " << row_sum;
      diag.problems.push_back(os.str());
    }
  }
  return diag;
}

GeneratorPolytope::GeneratorPolytope(std::vector<Matrix> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.empty()) throw ValidationError("generator polytope needs at least one vertex");
  const auto s = vertices_[0].rows();
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    if (vertices_[i].rows() != s || vertices_[i].cols() != s) {
      throw ValidationError("polytope vertex " + std::to_string(i + 1) + " has inconsistent size");
    }
    const auto diag = ValidateGenerator(vertices_[i]);
    if (!diag.valid) {
      throw ValidationError("polytope vertex " + std::to_string(i + 1) + ": " + diag.problems.front());
    }
  }
}

Matrix GeneratorPolytope::Mix(const Vector& weights) const {
  if (weights.size() != num_vertices()) throw ValidationError("mixing weights have wrong length");
  if ((weights.array() < 0.0).any() || std::abs(weights.sum() - 1.0) > 1e-9) {
    throw ValidationError("mixing weights are not on the unit simplex");
  }
  Matrix out = Matrix::Zero(num_modes(), num_modes());
  for (int i = 0; i < num_vertices(); ++i) out += weights(i) * vertices_[i];
  return out;
}

GeneratorPolytope GeneratorPolytope::Scaled(double factor) const {
  if (!(factor > 0.0)) throw ValidationError("polytope scale factor must be positive");
  std::vector<Matrix> scaled;
  scaled.reserve(vertices_.size());
  for (const auto& v : vertices_) scaled.push_back(factor * v);
  return GeneratorPolytope(std::move(scaled));
}

int ModeTrajectory::ModeAt(double t) const {
  auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
  const auto k = std::max<std::ptrdiff_t>(0, std::distance(jump_times.begin(), it) - 1);
  return modes[static_cast<std::size_t>(k)];
}

ModeTrajectory SampleTrajectory(const Matrix& generator, const Vector& initial_distribution,
                                double horizon, std::uint64_t seed) {
  const auto diag = ValidateGenerator(generator);
  if (!diag.valid) throw ValidationError("invalid generator: " + diag.problems.front());
  const int s = static_cast<int>(generator.rows());
  if (initial_distribution.size() != s || (initial_distribution.array() < 0.0).any() ||
      std::abs(initial_distribution.sum() - 1.0) > 1e-9) {
    throw ValidationError("initial distribution is not on the simplex");
  }
  if (!(horizon > 0.0)) throw ValidationError("horizon must be positive");

  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> start(initial_distribution.data(),
                                        initial_distribution.data() + s);
  ModeTrajectory traj;
  traj.horizon = horizon;
  int mode = start(rng);
  double t = 0.0;
  while (true) {
    traj.jump_times.push_back(t);
    traj.modes.push_back(mode);
    const double rate = -generator(mode, mode);
    if (rate <= 0.0) break;  // absorbing
    std::exponential_distribution<double> holding(rate);
    t += holding(rng);
    if (t >= horizon) break;
    std::vector<double> weights(static_cast<std::size_t>(s));
    for (int j = 0; j < s; ++j) weights[static_cast<std::size_t>(j)] = j == mode ? 0.0 : generator(mode, j);
    std::discrete_distribution<int> next(weights.begin(), weights.end());
    mode = next(rng);
  }
  return traj;
}

Vector StationaryDistribution(const Matrix& generator) {
  const auto s = generator.rows();
  Matrix system(s + 1, s);
  system.topRows(s) = generator.transpose();
  system.row(s).setOnes();
  Vector rhs = Vector::Zero(s + 1);
  rhs(s) = 1.0;
  return system.colPivHouseholderQr().solve(rhs);
}

std::string TrajectoryToCsv(const ModeTrajectory& trajectory) {
  std::ostringstream os;
  os.precision(12);
  os << "time,mode\n";
  for (int k = 0; k < trajectory.num_segments(); ++k) {
    os << trajectory.jump_times[static_cast<std::size_t>(k)] << ","
       << trajectory.modes[static_cast<std::size_t>(k)] + 1 << "\n";
  }
  os << trajectory.horizon << "," << trajectory.modes.back() + 1 << "\n";
  return os.str();
}

}  // namespace satcons::markov
