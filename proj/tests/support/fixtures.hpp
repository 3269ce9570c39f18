// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>

#include "procflow/model.hpp"

namespace fixtures {

std::string read_file(const std::string& path);
std::string data_path(const std::string& name);

/// Parsed copy of data/<name>.
std::shared_ptr<const procflow::ProcessSet> load(const std::string& name);

}  // namespace fixtures
