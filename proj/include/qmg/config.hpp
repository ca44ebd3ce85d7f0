// Copyright 2026 The qmg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QMG_CONFIG_HPP
#define QMG_CONFIG_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "qmg/pauli.hpp"
#include "qmg/trainer.hpp"

namespace qmg {

/// Everything a training run needs, as read from a `key = value` file.
struct RunConfig {
  std::filesystem::path hamiltonian;
  Scheme scheme = Scheme::FC;
  /// Informational label recorded in the manifest.
  std::string mapping = "jw";
  double drop_threshold = 0.0;
  int max_qubits = 16;
  TrainConfig train;
};

/// Keys accepted by parse_run_config, in documentation order.
const std::vector<std::string>& run_config_keys();

/// Parses the flat config format. Blank lines and '#' comments are ignored;
/// unknown or repeated keys and bad values raise ConfigError naming the line.
/// A relative hamiltonian path is resolved against base_dir.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace qmg

#endif  // QMG_CONFIG_HPP
