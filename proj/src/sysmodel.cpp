#include "satcons/sysmodel.hpp"

#include <fstream>
#include <queue>
#include <sstream>

#include <json.hpp>

namespace satcons {

using json = nlohmann::json;

void AgentDynamics::Validate() const {
  if (A.rows() == 0 || A.rows() != A.cols()) throw ValidationError("A must be square and nonempty");
  if (B.rows() != A.rows() || B.cols() == 0) throw ValidationError("B must have as many rows as A");
  if (D.rows() != A.rows() || D.cols() == 0) throw ValidationError("D must have as many rows as A");
  if (!(u_max > 0.0)) throw ValidationError("u_max must be positive");
}

Matrix BuildLaplacian(const Matrix& adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw ValidationError("adjacency must be square");
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
      const double a = adjacency(i, j);
      if (a != 0.0 && a != 1.0) {
        throw ValidationError("adjacency entry (" + std::to_string(i + 1) + "," +
                              std::to_string(j + 1) + ") is not 0/1");
      }
      if (i == j && a != 0.0) {
        throw ValidationError("adjacency has a self-loop at agent " + std::to_string(i + 1));
      }
    }
  }
  Matrix laplacian = -adjacency;
  laplacian.diagonal() = adjacency.rowwise().sum();
  return laplacian;
}

ModeTopology::ModeTopology(const Matrix& adjacency)
    : adjacency_(adjacency), laplacian_(BuildLaplacian(adjacency)) {}

bool CheckUnionSpanningTree(const std::vector<ModeTopology>& modes) {
  if (modes.empty()) throw ValidationError("spanning-tree check needs at least one mode");
  const int n = modes.front().num_agents();
  // Edge j -> i exists when a_ij = 1 (agent i receives from j).
  Matrix reach = Matrix::Zero(n, n);
  for (const auto& mode : modes) {
    if (mode.num_agents() != n) throw ValidationError("modes disagree on agent count");
    reach += mode.adjacency();
  }
  for (int root = 0; root < n; ++root) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::queue<int> frontier;
    frontier.push(root);
    seen[static_cast<std::size_t>(root)] = true;
    int count = 1;
    while (!frontier.empty()) {
      const int j = frontier.front();
      frontier.pop();
      for (int i = 0; i < n; ++i) {
        if (reach(i, j) > 0.0 && !seen[static_cast<std::size_t>(i)]) {
          seen[static_cast<std::size_t>(i)] = true;
          ++count;
          frontier.push(i);
        }
      }
    }
    if (count == n) return true;
  }
  return false;
}

void NetworkModel::Validate() {
  dynamics.Validate();
  if (modes.empty()) throw ValidationError("at least one mode is required");
  const int n = num_agents();
  if (n < 2) throw ValidationError("at least two agents are required");
  for (const auto& mode : modes) {
    if (mode.num_agents() != n) throw ValidationError("all modes must have the same agent count");
  }
  if (gain && (gain->rows() != dynamics.p() || gain->cols() != dynamics.m())) {
    throw ValidationError("K must be p x m");
  }
  if (polytope.num_vertices() == 0) throw ValidationError("generator polytope is empty");
  if (polytope.num_modes() != num_modes()) {
    throw ValidationError("polytope vertices must be s x s with s = number of modes");
  }
  if (initial_distribution.size() == 0) {
    initial_distribution = Vector::Constant(num_modes(), 1.0 / num_modes());
  }
  if (initial_distribution.size() != num_modes() || (initial_distribution.array() < 0.0).any() ||
      std::abs(initial_distribution.sum() - 1.0) > 1e-9) {
    throw ValidationError("initial distribution must be a probability vector over modes");
  }
  union_has_spanning_tree = CheckUnionSpanningTree(modes);
  warnings.clear();
  if (!union_has_spanning_tree) {
    warnings.emplace_back("union of the mode graphs has no directed spanning tree");
  }
}

NetworkModel NetworkModel::WithGain(const Matrix& k) const {
  NetworkModel out = *this;
  out.gain = k;
  out.Validate();
  return out;
}

NetworkModel NetworkModel::WithUmax(double u_max) const {
  NetworkModel out = *this;
  out.dynamics.u_max = u_max;
  out.Validate();
  return out;
}

NetworkModel NetworkModel::WithPolytope(markov::GeneratorPolytope p) const {
  NetworkModel out = *this;
  out.polytope = std::move(p);
  out.Validate();
  return out;
}

namespace {

Matrix ParseMatrix(const json& node, const std::string& key) {
  if (!node.is_array() || node.empty()) throw ConfigError(key, "expected a nonempty array of rows");
  const auto rows = node.size();
  const auto cols = node[0].is_array() ? node[0].size() : 0;
  if (cols == 0) throw ConfigError(key, "expected a nonempty array of rows");
  Matrix out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!node[i].is_array() || node[i].size() != cols) {
      throw ConfigError(key, "row " + std::to_string(i + 1) + " has the wrong length");
    }
    for (std::size_t j = 0; j < cols; ++j) {
      if (!node[i][j].is_number()) {
        throw ConfigError(key, "entry (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                   ") is not a number");
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = node[i][j].get<double>();
    }
  }
  return out;
}

json MatrixToJson(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

const json& Require(const json& node, const char* name, const std::string& path) {
  if (!node.is_object() || !node.contains(name)) throw ConfigError(path + name, "missing");
  return node.at(name);
}

}  // namespace

NetworkModel LoadModel(const std::string& document) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
  }
  NetworkModel model;
  const json& dyn = Require(root, "dynamics", "");
  model.dynamics.A = ParseMatrix(Require(dyn, "A", "dynamics."), "dynamics.A");
  model.dynamics.B = ParseMatrix(Require(dyn, "B", "dynamics."), "dynamics.B");
  model.dynamics.D = ParseMatrix(Require(dyn, "D", "dynamics."), "dynamics.D");
  const json& umax = Require(dyn, "u_max", "dynamics.");
  if (!umax.is_number()) throw ConfigError("dynamics.u_max", "expected a number");
  model.dynamics.u_max = umax.get<double>();
  if (dyn.contains("K") && !dyn.at("K").is_null()) model.gain = ParseMatrix(dyn.at("K"), "dynamics.K");

  try {
    model.dynamics.Validate();
  } catch (const ValidationError& e) {
    throw ConfigError("dynamics", e.what());
  }
  if (model.gain && (model.gain->rows() != model.dynamics.p() || model.gain->cols() != model.dynamics.m())) {
    throw ConfigError("dynamics.K", "must be p x m");
  }

  const json& modes = Require(root, "modes", "");
  if (!modes.is_array() || modes.empty()) throw ConfigError("modes", "expected a nonempty list");
  for (std::size_t l = 0; l < modes.size(); ++l) {
    const std::string key = "modes[" + std::to_string(l) + "]";
    const json& entry = modes[l].is_object() ? Require(modes[l], "adjacency", key + ".") : modes[l];
    try {
      model.modes.emplace_back(ParseMatrix(entry, key));
    } catch (const ValidationError& e) {
      throw ConfigError(key, e.what());
    }
  }

  const json& poly = Require(root, "polytope", "");
  if (!poly.is_array() || poly.empty()) throw ConfigError("polytope", "expected a nonempty list");
  std::vector<Matrix> vertices;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const std::string key = "polytope[" + std::to_string(i) + "]";
    Matrix v = ParseMatrix(poly[i], key);
    const auto diag = markov::ValidateGenerator(v);
    if (!diag.valid) throw ConfigError(key, "invalid generator: " + diag.problems.front());
    vertices.push_back(std::move(v));
  }
  model.polytope = markov::GeneratorPolytope(std::move(vertices));

  if (root.contains("initial_distribution")) {
    const json& mu = root.at("initial_distribution");
    if (!mu.is_array()) throw ConfigError("initial_distribution", "expected an array");
    model.initial_distribution.resize(static_cast<Eigen::Index>(mu.size()));
    for (std::size_t i = 0; i < mu.size(); ++i) {
      if (!mu[i].is_number()) throw ConfigError("initial_distribution", "expected numbers");
      model.initial_distribution(static_cast<Eigen::Index>(i)) = mu[i].get<double>();
    }
  }

  try {
    model.Validate();
  } catch (const ValidationError& e) {
    throw ConfigError("<model>", e.what());
  }
  return model;
}

NetworkModel LoadModelFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return LoadModel(buffer.str());
}

std::string SerializeModel(const NetworkModel& model) {
  json root;
  root["dynamics"]["A"] = MatrixToJson(model.dynamics.A);
  root["dynamics"]["B"] = MatrixToJson(model.dynamics.B);
  root["dynamics"]["D"] = MatrixToJson(model.dynamics.D);
  root["dynamics"]["u_max"] = model.dynamics.u_max;
  if (model.gain) root["dynamics"]["K"] = MatrixToJson(*model.gain);
  root["modes"] = json::array();
  for (const auto& mode : model.modes) root["modes"].push_back({{"adjacency", MatrixToJson(mode.adjacency())}});
  root["polytope"] = json::array();
  for (const auto& v : model.polytope.vertices()) root["polytope"].push_back(MatrixToJson(v));
  root["initial_distribution"] = std::vector<double>(
      model.initial_distribution.data(), model.initial_distribution.data() + model.initial_distribution.size());
  return root.dump(2);
}

}  // namespace satcons
