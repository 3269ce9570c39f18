// SPDX-License-Identifier: Apache-2.0
#include "fixtures.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fixtures {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string data_path(const std::string& name) { return std::string(PROCFLOW_DATA_DIR) + "/" + name; }

std::shared_ptr<const procflow::ProcessSet> load(const std::string& name) {
  return std::make_shared<const procflow::ProcessSet>(
      procflow::parse_process_set(read_file(data_path(name))));
}

}  // namespace fixtures
