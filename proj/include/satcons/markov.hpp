#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "satcons/common.hpp"

namespace satcons::markov {

// Outcome of a generator check. `problems` lists every violated row or entry.
struct GeneratorDiagnostics {
  bool valid = true;
  std::vector<std::string> problems;
};

// Off-diagonals >= 0 and zero row sums, both within `tol`.
GeneratorDiagnostics ValidateGenerator(const Matrix& generator, double tol = 1e-9);

// Vertex set of the uncertain transition-rate matrix. The true generator is a
// convex combination of the vertices.
class GeneratorPolytope {
 public:
  GeneratorPolytope() = default;
  // Throws ValidationError if any vertex is not a valid generator or the
  // vertices disagree in size.
  explicit GeneratorPolytope(std::vector<Matrix> vertices);

  const std::vector<Matrix>& vertices() const { return vertices_; }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_modes() const { return vertices_.empty() ? 0 : static_cast<int>(vertices_[0].rows()); }

  // Sum_i weights[i] * vertex[i]. Weights must lie on the unit simplex.
  Matrix Mix(const Vector& weights) const;

  // Every vertex multiplied by `factor` (> 0).
  GeneratorPolytope Scaled(double factor) const;

 private:
  std::vector<Matrix> vertices_;
};

struct ModeTrajectory {
  // jump_times[0] == 0 marks the start of the first segment; modes[k] is active
  // on [jump_times[k], jump_times[k+1]) (last segment ends at horizon).
  std::vector<double> jump_times;
  std::vector<int> modes;  // zero-based mode ids
  double horizon = 0.0;

  int ModeAt(double t) const;
  int num_segments() const { return static_cast<int>(modes.size()); }
  double SegmentEnd(int k) const {
    return k + 1 < num_segments() ? jump_times[k + 1] : horizon;
  }
};

// Holding-time / embedded-chain sampler. Deterministic given `seed`.
ModeTrajectory SampleTrajectory(const Matrix& generator, const Vector& initial_distribution,
                                double horizon, std::uint64_t seed);

// Stationary distribution of an irreducible generator (least squares on
// pi * Q = 0, sum(pi) = 1).
Vector StationaryDistribution(const Matrix& generator);

// Columnar "time,mode" record (one-based modes), one row per segment start
// plus a closing row at the horizon.
std::string TrajectoryToCsv(const ModeTrajectory& trajectory);

}  // namespace satcons::markov
