#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "satcons/common.hpp"
#include "satcons/optimize.hpp"

namespace satcons::cli {

using nlohmann::json;

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitNumerical = 3;

int ExitCodeFor(opt::ReportStatus status);

json MatrixToJson(const Matrix& m);
Matrix MatrixFromJson(const json& j);

// Per-run output directory. Every write goes through it so the manifest can
// list what a run produces.
class RunDirectory {
 public:
  explicit RunDirectory(std::filesystem::path root);

  std::string Path(const std::string& name) const;
  void Write(const std::string& name, const std::string& content) const;
  void WriteJson(const std::string& name, const json& doc) const;

 private:
  std::filesystem::path root_;
};

struct RunManifest {
  std::string command;
  std::string config;
  json parameters = json::object();
  unsigned seed = 0;
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;

  json ToJson() const;
};

// Analysis certificate: the family R(z, 1) given by shapes P_l and the outer
// level bounding every trajectory.
struct Certificate {
  std::string family;  // "theorem1", "origin", "region"
  std::string convention;
  int num_agents = 0;
  double gamma = 0.0;
  double rho = 0.0;
  double eta = 0.0;
  double outer_level = 1.0;
  std::vector<Matrix> shapes;
  Matrix Z;  // inscribed shape, region certificates only
  json report;

  double n_rho() const { return num_agents * rho; }
  json ToJson() const;
  static Certificate FromJson(const json& j);
};

// P_l = Y_l^{-1} from the "Y1".."Ys" values of a report.
std::vector<Matrix> ShapesFromReport(const opt::SolveReport& report, int num_modes);

std::vector<double> ParseList(const std::string& text);

const char* Version();

}  // namespace satcons::cli
