#pragma once

#include <string>

#include "satcons/sysmodel.hpp"

namespace satcons::testing {

inline std::string ConfigPath(const std::string& name) {
  return std::string(SATCONS_SOURCE_DIR) + "/configs/" + name;
}

inline NetworkModel Example1() { return LoadModelFile(ConfigPath("example1.json")); }

}  // namespace satcons::testing
