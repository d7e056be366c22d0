#pragma once

#include <optional>
#include <string>
#include <vector>

#include "satcons/common.hpp"
#include "satcons/markov.hpp"

namespace satcons {

// Identical linear agents x_i' = A x_i + B sat(u_i) + D w_i.
struct AgentDynamics {
  Matrix A;  // m x m
  Matrix B;  // m x p
  Matrix D;  // m x q
  double u_max = 1.0;

  int m() const { return static_cast<int>(A.rows()); }
  int p() const { return static_cast<int>(B.cols()); }
  int q() const { return static_cast<int>(D.cols()); }

  // Throws ValidationError on inconsistent dimensions or u_max <= 0.
  void Validate() const;
};

// Directed communication graph active in one Markov mode. a_ij = 1 means
// agent i listens to agent j.
class ModeTopology {
 public:
  explicit ModeTopology(const Matrix& adjacency);

  const Matrix& adjacency() const { return adjacency_; }
  const Matrix& laplacian() const { return laplacian_; }
  int num_agents() const { return static_cast<int>(adjacency_.rows()); }

 private:
  Matrix adjacency_;
  Matrix laplacian_;
};

// L = diag(row sums) - adjacency. Adjacency must be square, 0/1 and have a
// zero diagonal.
Matrix BuildLaplacian(const Matrix& adjacency);

// True iff some node reaches every other node in the union graph.
bool CheckUnionSpanningTree(const std::vector<ModeTopology>& modes);

struct NetworkModel {
  AgentDynamics dynamics;
  std::optional<Matrix> gain;  // K, p x m; absent before synthesis
  std::vector<ModeTopology> modes;
  markov::GeneratorPolytope polytope;
  Vector initial_distribution;  // over modes; uniform unless configured
  bool union_has_spanning_tree = false;
  std::vector<std::string> warnings;

  // Agent 1 (index 0) is the disagreement pivot.
  static constexpr int kPivotAgent = 0;

  int num_agents() const { return modes.empty() ? 0 : modes.front().num_agents(); }
  int num_modes() const { return static_cast<int>(modes.size()); }

  // Checks every structural invariant and refreshes the spanning-tree flag and
  // warnings. Throws ValidationError.
  void Validate();

  NetworkModel WithGain(const Matrix& k) const;
  NetworkModel WithUmax(double u_max) const;
  NetworkModel WithPolytope(markov::GeneratorPolytope polytope) const;
};

// Parses the JSON config schema documented in docs/config.md. Throws
// ConfigError naming the offending key.
NetworkModel LoadModel(const std::string& document);
NetworkModel LoadModelFile(const std::string& path);

// Inverse of LoadModel.
std::string SerializeModel(const NetworkModel& model);

}  // namespace satcons
