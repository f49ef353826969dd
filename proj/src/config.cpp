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

#include "csk/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <functional>
#include <sstream>

#include "csk/error.hpp"
#include "csk/parallel.hpp"
#include "csk/tensor_io.hpp"

namespace csk {

namespace {

std::string
Trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::uint64_t
ParseUnsigned(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (v.empty() || ec != std::errc{} || ptr != end) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

std::size_t
ParseSize(const std::string& key, const std::string& v) {
    return static_cast<std::size_t>(ParseUnsigned(key, v));
}

double
ParseDouble(const std::string& key, const std::string& v) {
    // from_chars for double needs a newer libstdc++ than some targets ship.
    char* end = nullptr;
    const double out = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    return out;
}

std::vector<std::string>
SplitList(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = Trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<std::size_t>
ParseSizeList(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    for (const auto& item : SplitList(v)) out.push_back(ParseSize(key, item));
    return out;
}

std::vector<CavMode>
ParseModes(const std::string& key, const std::string& v) {
    std::vector<CavMode> out;
    for (const auto& item : SplitList(v)) {
        const auto mode = parse_cav_mode(item);
        if (!mode) {
            throw ConfigError(key + ": unknown mode '" + item + "', expected 1D, 2D or 3D");
        }
        out.push_back(*mode);
    }
    return out;
}

template <typename T>
std::string
JoinList(const std::vector<T>& items) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ",";
        if constexpr (std::is_same_v<T, CavMode>) {
            out += to_string(items[i]);
        } else {
            out += std::to_string(items[i]);
        }
    }
    return out;
}

std::string
FormatDouble(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Binding {
    const char* key;
    std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define CSK_SIZE(name, field)                                                                          \
    Binding {                                                                                          \
        name, [](RunConfig& c, const std::string& k, const std::string& v) { c.field = ParseSize(k, v); }, \
            [](const RunConfig& c) { return std::to_string(c.field); }                                 \
    }
#define CSK_DOUBLE(name, field)                                                                           \
    Binding {                                                                                             \
        name, [](RunConfig& c, const std::string& k, const std::string& v) { c.field = ParseDouble(k, v); }, \
            [](const RunConfig& c) { return FormatDouble(c.field); }                                      \
    }
#define CSK_PATH(name, field)                                                                         \
    Binding {                                                                                         \
        name, [](RunConfig& c, const std::string&, const std::string& v) { c.field = v; },            \
            [](const RunConfig& c) { return c.field.string(); }                                       \
    }

const std::vector<Binding>&
Bindings() {
    static const std::vector<Binding> kBindings{
        Binding{"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = ParseUnsigned(k, v); },
                [](const RunConfig& c) { return std::to_string(c.seed); }},
        CSK_SIZE("jobs", jobs),
        CSK_PATH("out", out),

        Binding{"data.source",
                [](RunConfig& c, const std::string& k, const std::string& v) {
                    if (v == "synthetic") c.source = DataSource::Synthetic;
                    else if (v == "directory") c.source = DataSource::Directory;
                    else throw ConfigError(k + ": expected 'synthetic' or 'directory', got '" + v + "'");
                },
                [](const RunConfig& c) {
                    return std::string(c.source == DataSource::Synthetic ? "synthetic" : "directory");
                }},
        CSK_PATH("data.activations", activations),
        CSK_SIZE("data.concepts", synthetic.concepts),
        CSK_SIZE("data.samples", synthetic.samples),
        CSK_SIZE("data.channels", synthetic.channels),
        CSK_SIZE("data.height", synthetic.height),
        CSK_SIZE("data.width", synthetic.width),
        CSK_DOUBLE("data.signal", synthetic.signal),

        CSK_SIZE("train.runs", train.runs),
        CSK_DOUBLE("train.train_fraction", train.train_fraction),
        CSK_DOUBLE("train.val_fraction", train.val_fraction),
        CSK_SIZE("train.epochs", train.epochs),
        CSK_DOUBLE("train.learning_rate", train.learning_rate),
        CSK_DOUBLE("train.l2", train.l2),
        CSK_DOUBLE("train.init_scale", train.init_scale),

        Binding{"sweep.layers",
                [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep.layers = ParseSizeList(k, v); },
                [](const RunConfig& c) { return JoinList(c.sweep.layers); }},
        Binding{"sweep.modes",
                [](RunConfig& c, const std::string& k, const std::string& v) { c.sweep.modes = ParseModes(k, v); },
                [](const RunConfig& c) { return JoinList(c.sweep.modes); }},
        Binding{"sweep.sample_counts",
                [](RunConfig& c, const std::string& k, const std::string& v) {
                    c.sweep.sample_counts = ParseSizeList(k, v);
                },
                [](const RunConfig& c) { return JoinList(c.sweep.sample_counts); }},

        CSK_SIZE("smoothgrad.copies", smoothgrad.copies),
        CSK_DOUBLE("smoothgrad.noise_fraction", smoothgrad.noise_fraction),

        CSK_SIZE("synth.width", gen.synth.width),
        CSK_SIZE("synth.height", gen.synth.height),
        CSK_SIZE("synth.min_patches", gen.synth.min_patches),
        CSK_SIZE("synth.max_patches", gen.synth.max_patches),
        CSK_DOUBLE("synth.min_scale", gen.synth.min_scale),
        CSK_DOUBLE("synth.max_scale", gen.synth.max_scale),
        CSK_DOUBLE("synth.threshold", gen.synth.threshold),
        CSK_SIZE("synth.retry_cap", gen.synth.retry_cap),
        CSK_SIZE("synth.samples", gen.samples),
        CSK_PATH("synth.superpixels", gen.superpixels),
        CSK_SIZE("synth.builtin_concepts", gen.builtin_concepts),
        CSK_SIZE("synth.builtin_pool", gen.builtin_pool),
        CSK_SIZE("synth.builtin_size", gen.builtin_size),

        CSK_PATH("mine.activations", mine.activations),
        CSK_PATH("mine.images", mine.images),
        CSK_SIZE("mine.layer", mine.layer),
        CSK_SIZE("mine.rank", mine.nmf.rank),
        CSK_SIZE("mine.max_iters", mine.nmf.max_iters),
        CSK_DOUBLE("mine.tol", mine.nmf.tol),
        CSK_DOUBLE("mine.threshold", mine.threshold),
        CSK_SIZE("mine.min_area", mine.min_area),

        CSK_SIZE("refnet.in_channels", refnet.in_channels),
        Binding{"refnet.widths",
                [](RunConfig& c, const std::string& k, const std::string& v) { c.refnet.widths = ParseSizeList(k, v); },
                [](const RunConfig& c) { return JoinList(c.refnet.widths); }},
        CSK_SIZE("refnet.classes", refnet.classes),
        CSK_SIZE("refnet.input_height", refnet.input_height),
        CSK_SIZE("refnet.input_width", refnet.input_width),
        CSK_SIZE("refnet.max_spatial", refnet.max_spatial),

        Binding{"grad.source",
                [](RunConfig& c, const std::string& k, const std::string& v) {
                    if (v == "refnet") c.grad.source = GradSource::RefNet;
                    else if (v == "manifest") c.grad.source = GradSource::Manifest;
                    else throw ConfigError(k + ": expected 'refnet' or 'manifest', got '" + v + "'");
                },
                [](const RunConfig& c) {
                    return std::string(c.grad.source == GradSource::RefNet ? "refnet" : "manifest");
                }},
        Binding{"grad.modes",
                [](RunConfig& c, const std::string& k, const std::string& v) { c.grad.modes = ParseModes(k, v); },
                [](const RunConfig& c) { return JoinList(c.grad.modes); }},
        Binding{"grad.layers",
                [](RunConfig& c, const std::string& k, const std::string& v) { c.grad.layers = ParseSizeList(k, v); },
                [](const RunConfig& c) { return JoinList(c.grad.layers); }},
        CSK_SIZE("grad.concepts", grad.concepts),
        CSK_SIZE("grad.concept_samples", grad.concept_samples),
        CSK_SIZE("grad.predictions", grad.predictions),
        CSK_SIZE("grad.shape_size", grad.shape_size),
        CSK_PATH("grad.manifest", grad.manifest),
        CSK_PATH("grad.cavs", grad.cavs),
        CSK_PATH("grad.desired_boxes", grad.desired_boxes),
        CSK_PATH("grad.raw_boxes", grad.raw_boxes),
        CSK_DOUBLE("grad.min_iou", grad.min_iou),

        CSK_PATH("report.input", report_input),
    };
    return kBindings;
}

#undef CSK_SIZE
#undef CSK_DOUBLE
#undef CSK_PATH

}  // namespace

KeyValues
parse_key_values(const std::string& text, const std::string& origin) {
    KeyValues out;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto where = [&] { return origin + ":" + std::to_string(lineno) + ": "; };
        std::string line = raw;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = Trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                throw ConfigError(where() + "malformed section header '" + line + "'");
            }
            section = Trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where() + "expected key = value, got '" + line + "'");
        }
        const std::string key = Trim(line.substr(0, eq));
        if (key.empty()) {
            throw ConfigError(where() + "empty key");
        }
        const std::string full = section.empty() ? key : section + "." + key;
        if (!out.emplace(full, Trim(line.substr(eq + 1))).second) {
            throw ConfigError(where() + "duplicate key '" + full + "'");
        }
    }
    return out;
}

KeyValues
load_key_values(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) {
        throw ConfigError("config file not found: " + path.string());
    }
    const auto bytes = read_file_bytes(path);
    return parse_key_values(std::string(bytes.begin(), bytes.end()), path.string());
}

std::size_t
RunConfig::effective_jobs() const {
    return jobs == 0 ? default_jobs() : jobs;
}

RunConfig
make_run_config(const KeyValues& values) {
    RunConfig cfg;
    const auto& bindings = Bindings();
    for (const auto& [key, value] : values) {
        const auto it = std::find_if(bindings.begin(), bindings.end(),
                                     [&](const Binding& b) { return key == b.key; });
        if (it == bindings.end()) {
            throw ConfigError("unknown configuration key '" + key + "'");
        }
        it->set(cfg, key, value);
    }
    return cfg;
}

std::vector<std::string>
known_config_keys() {
    std::vector<std::string> out;
    for (const auto& b : Bindings()) out.emplace_back(b.key);
    return out;
}

std::string
to_config_text(const RunConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& b : Bindings()) {
        std::string key = b.key;
        std::string sec;
        if (const auto dot = key.find('.'); dot != std::string::npos) {
            sec = key.substr(0, dot);
            key = key.substr(dot + 1);
        }
        if (sec != section) {
            out += "\n[" + sec + "]\n";
            section = sec;
        }
        out += key + " = " + b.get(cfg) + "\n";
    }
    return out;
}

}  // namespace csk
