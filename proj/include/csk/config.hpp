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
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "csk/attribution.hpp"
#include "csk/cav.hpp"
#include "csk/mining.hpp"
#include "csk/refnet.hpp"
#include "csk/stability.hpp"

namespace csk {

/// Flat "section.key" -> value map. Keys before the first [section]
/// header have no prefix.
using KeyValues = std::map<std::string, std::string>;

/// Parses the plain-text configuration format:
///
///   # comment
///   seed = 7
///   [train]
///   runs = 15
///
/// Throws ConfigError on malformed lines or duplicate keys.
KeyValues parse_key_values(const std::string& text, const std::string& origin = "<config>");
KeyValues load_key_values(const std::filesystem::path& path);

/// Where activation datasets come from.
enum class DataSource {
    Synthetic,  // channel-coded activations generated in memory
    Directory,  // <activations>/l<k>/<concept>/*.cten
};

struct SyntheticDataConfig {
    std::size_t concepts = 3;
    std::size_t samples = 100;  // per concept
    std::size_t channels = 8;
    std::size_t height = 8;
    std::size_t width = 8;
    double signal = 5.0;  // mean of the concept channel, in noise standard deviations
};

struct GenSynthConfig {
    SynthConfig synth;
    std::size_t samples = 100;  // per concept
    std::filesystem::path superpixels;  // index.jsonl written by mine; empty selects built-in shapes
    std::size_t builtin_concepts = 3;
    std::size_t builtin_pool = 100;  // superpixels per built-in concept
    std::size_t builtin_size = 48;
};

struct MineConfig {
    std::filesystem::path activations;  // directory of [C,H,W] .cten files
    std::filesystem::path images;       // optional directory of [3,H,W] .cten files with matching names
    std::size_t layer = 0;
    NmfOptions nmf{.rank = 3};
    double threshold = 0.5;
    std::size_t min_area = kMinSuperpixelArea;
};

enum class GradSource {
    RefNet,    // built-in reference network on built-in concept images
    Manifest,  // exported gradient pairs plus trained .cav files
};

struct GradConfig {
    GradSource source = GradSource::RefNet;
    std::vector<CavMode> modes{CavMode::OneD, CavMode::TwoD, CavMode::ThreeD};
    std::vector<std::size_t> layers;  // empty means every refnet block
    std::size_t concepts = 3;
    std::size_t concept_samples = 40;  // concept images per concept for CAV training
    std::size_t predictions = 20;      // images whose predictions are explained
    std::size_t shape_size = 7;        // built-in shape size in pixels
    std::filesystem::path manifest;    // JSON-lines gradient pairs
    std::filesystem::path cavs;        // directory written by train-cavs
    std::filesystem::path desired_boxes;
    std::filesystem::path raw_boxes;
    double min_iou = 0.5;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::size_t jobs = 0;  // 0 means available parallelism
    std::filesystem::path out = "csk-out";

    DataSource source = DataSource::Synthetic;
    std::filesystem::path activations;
    SyntheticDataConfig synthetic;

    TrainConfig train;
    SweepConfig sweep;  // empty layers: every l<k> directory, or layer 0 for synthetic data
    SmoothGradConfig smoothgrad;
    GenSynthConfig gen;
    MineConfig mine;
    RefNetConfig refnet;
    GradConfig grad;
    std::filesystem::path report_input;  // empty means `out`

    std::size_t effective_jobs() const;
};

/// Builds a RunConfig from key/values. Unknown keys and unparsable values
/// raise ConfigError naming the key.
RunConfig make_run_config(const KeyValues& values);

/// Every key make_run_config understands, in file order.
std::vector<std::string> known_config_keys();

/// Renders a RunConfig back to the configuration format.
std::string to_config_text(const RunConfig& cfg);

}  // namespace csk
