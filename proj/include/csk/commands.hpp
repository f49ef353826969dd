// Copyright 2026-present the csk project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "csk/config.hpp"

namespace csk {

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitData = 3,
    kExitPartial = 4,
};

struct CommandResult {
    int exit_code = kExitOk;
    std::vector<std::filesystem::path> outputs;  // files written, in write order
};

// Each command writes under cfg.out/<command>/ and throws ConfigError or
// DataError on failure. Every CSV starts with a seed header line.
CommandResult cmd_gen_synth(const RunConfig& cfg);
CommandResult cmd_mine(const RunConfig& cfg);
CommandResult cmd_train_cavs(const RunConfig& cfg);
CommandResult cmd_stability(const RunConfig& cfg);
CommandResult cmd_grad_stability(const RunConfig& cfg);
CommandResult cmd_report(const RunConfig& cfg);

/// Subcommand names in the order the CLI lists them.
const std::vector<std::string>& command_names();

/// Runs a command by name and maps exceptions to exit codes; errors are
/// logged, never rethrown.
int run_command(const std::string& name, const RunConfig& cfg);

/// Loads the activation datasets selected by cfg: the channel-coded
/// generator, or <activations>/l<k>/<concept>/*.cten. Layers without a
/// directory are left out (the sweep reports them).
std::map<std::size_t, ConceptDataset> load_datasets(const RunConfig& cfg);

/// Reads one layer directory laid out as <dir>/<concept>/*.cten, files in
/// name order.
ConceptDataset load_concept_directory(const std::filesystem::path& dir, std::size_t layer_id);

/// Layers selected for the sweep after defaults are applied.
std::vector<std::size_t> resolve_layers(const RunConfig& cfg);

}  // namespace csk
