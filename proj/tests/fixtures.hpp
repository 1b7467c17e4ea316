#pragma once

#include <string>

#include "impc/cli.hpp"

namespace fixture {

inline std::string paper_config_path() {
  return std::string(IMPC_SOURCE_DIR) + "/configs/paper_scenario.json";
}

inline impc::cli::ScenarioFile paper() {
  return impc::cli::load_scenario(paper_config_path());
}

}  // namespace fixture
