#include "artifacts.hpp"

#include <fstream>
#include <sstream>

#include "satcons/lmi.hpp"

#ifndef SATCONS_VERSION
#define SATCONS_VERSION "0.0.0"
#endif

namespace satcons::cli {

int ExitCodeFor(opt::ReportStatus status) {
  switch (status) {
    case opt::ReportStatus::kFeasible: return kExitOk;
    case opt::ReportStatus::kInfeasible: return kExitInfeasible;
    case opt::ReportStatus::kNumericalFailure: return kExitNumerical;
  }
  return kExitNumerical;
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

Matrix MatrixFromJson(const json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) throw ConfigError("<matrix>", "expected a nested array");
  Matrix m(j.size(), j[0].size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != j[0].size()) throw ConfigError("<matrix>", "ragged rows");
    for (std::size_t k = 0; k < j[i].size(); ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

RunDirectory::RunDirectory(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::string RunDirectory::Path(const std::string& name) const { return (root_ / name).string(); }

void RunDirectory::Write(const std::string& name, const std::string& content) const {
  std::ofstream out(Path(name), std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + Path(name));
  out << content;
}

void RunDirectory::WriteJson(const std::string& name, const json& doc) const { Write(name, doc.dump(2) + "\n"); }

json RunManifest::ToJson() const {
  return {{"command", command},  {"config", config},     {"parameters", parameters}, {"seed", seed},
          {"version", Version()}, {"outputs", outputs}, {"warnings", warnings}};
}

json Certificate::ToJson() const {
  json shapes_json = json::array();
  for (const Matrix& P : shapes) shapes_json.push_back(MatrixToJson(P));
  json doc = {{"family", family},
              {"convention", convention},
              {"num_agents", num_agents},
              {"gamma", gamma},
              {"rho", rho},
              {"n_rho", n_rho()},
              {"eta", eta},
              {"unit_level", 1.0},
              {"outer_level", outer_level},
              {"shapes", shapes_json},
              {"report", report}};
  if (Z.size()) doc["Z"] = MatrixToJson(Z);
  return doc;
}

Certificate Certificate::FromJson(const json& j) {
  try {
    Certificate c;
    c.family = j.at("family").get<std::string>();
    c.convention = j.value("convention", std::string(lmi::ToString(lmi::SectorConvention::kConsistent)));
    c.num_agents = j.at("num_agents").get<int>();
    c.gamma = j.at("gamma").get<double>();
    c.rho = j.at("rho").get<double>();
    c.eta = j.value("eta", 0.0);
    c.outer_level = j.at("outer_level").get<double>();
    for (const auto& s : j.at("shapes")) c.shapes.push_back(MatrixFromJson(s));
    if (j.contains("Z")) c.Z = MatrixFromJson(j.at("Z"));
    c.report = j.value("report", json::object());
    if (c.shapes.empty()) throw ConfigError("shapes", "certificate has no shapes");
    return c;
  } catch (const json::exception& e) {
    throw ConfigError("<certificate>", e.what());
  }
}

std::vector<Matrix> ShapesFromReport(const opt::SolveReport& report, int num_modes) {
  std::vector<Matrix> out;
  for (int l = 0; l < num_modes; ++l) {
    const Matrix& Y = report.values.at(lmi::YName(l));
    out.push_back(Y.inverse());
    out.back() = 0.5 * (out.back() + out.back().transpose()).eval();
  }
  return out;
}

std::vector<double> ParseList(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigError("<list>", "not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

const char* Version() { return SATCONS_VERSION; }

}  // namespace satcons::cli
