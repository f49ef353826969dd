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

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/cfg/helpers.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "csk/commands.hpp"
#include "csk/config.hpp"
#include "csk/error.hpp"

namespace {

void
SetupLogging() {
    auto logger = spdlog::stderr_color_mt("csk");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* level = std::getenv("CSK_LOG")) {
        spdlog::cfg::helpers::load_levels(level);
    }
}

}  // namespace

int
main(int argc, char** argv) {
    SetupLogging();

    CLI::App app{"csk: concept-stability toolkit"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<std::string> out;
    std::vector<std::string> overrides;
    bool print_config = false;

    app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "global seed");
    app.add_option("--jobs", jobs, "worker threads (0 = available parallelism)");
    app.add_option("--out", out, "output directory");
    app.add_option("--set", overrides, "override a configuration key, e.g. --set train.runs=5")->type_name("KEY=VALUE");
    app.add_flag("--print-config", print_config, "print the effective configuration and exit");

    const std::vector<std::pair<std::string, std::string>> kHelp{
        {"gen-synth", "generate synthetic concept images"},
        {"mine", "mine concepts from activations with NMF"},
        {"train-cavs", "train CAV ensembles"},
        {"stability", "CAV stability sweep"},
        {"grad-stability", "vanilla vs SmoothGrad concept attribution"},
        {"report", "rebuild tables from CSV outputs"},
    };
    for (const auto& [name, help] : kHelp) {
        app.add_subcommand(name, help)->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : csk::kExitConfig;
    }

    csk::RunConfig cfg;
    try {
        csk::KeyValues values;
        if (!config_path.empty()) values = csk::load_key_values(config_path);
        for (const auto& o : overrides) {
            const auto eq = o.find('=');
            if (eq == std::string::npos) throw csk::ConfigError("--set expects KEY=VALUE, got '" + o + "'");
            values[o.substr(0, eq)] = o.substr(eq + 1);
        }
        if (seed) values["seed"] = std::to_string(*seed);
        if (jobs) values["jobs"] = std::to_string(*jobs);
        if (out) values["out"] = *out;
        cfg = csk::make_run_config(values);
    } catch (const csk::Error& e) {
        spdlog::error("{}", e.what());
        return csk::kExitConfig;
    }

    if (print_config) {
        std::cout << csk::to_config_text(cfg);
        return csk::kExitOk;
    }
    return csk::run_command(app.get_subcommands().front()->get_name(), cfg);
}
