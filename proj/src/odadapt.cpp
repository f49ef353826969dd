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

#include "csk/odadapt.hpp"

#include <algorithm>
#include <fstream>
#include <tuple>

#include <json.hpp>

#include "csk/error.hpp"

namespace csk {

using nlohmann::json;

void
Box::validate() const {
    if (!(x2 > x1) || !(y2 > y1)) {
        throw DataError("box has non-positive area");
    }
    if (!(score >= 0.0 && score <= 1.0)) {
        throw DataError("box score outside [0,1]");
    }
}

double
iou(const Box& a, const Box& b) {
    const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (iw <= 0.0 || ih <= 0.0) {
        return 0.0;
    }
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

std::vector<MatchResult>
match_fn_boxes(std::span<const Box> desired, std::span<const Box> raw, double min_iou) {
    struct Pair {
        double iou;
        std::size_t d, r;
    };
    std::vector<Pair> pairs;
    std::vector<MatchResult> out(desired.size());
    for (std::size_t d = 0; d < desired.size(); ++d) {
        out[d].query = desired[d];
        for (std::size_t r = 0; r < raw.size(); ++r) {
            const double v = iou(desired[d], raw[r]);
            out[d].iou = std::max(out[d].iou, v);
            if (v >= min_iou && v > 0.0) {
                pairs.push_back({v, d, r});
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return std::make_tuple(-a.iou, a.d, a.r) < std::make_tuple(-b.iou, b.d, b.r);
    });
    std::vector<bool> desired_used(desired.size(), false), raw_used(raw.size(), false);
    for (const Pair& p : pairs) {
        if (desired_used[p.d] || raw_used[p.r]) continue;
        desired_used[p.d] = raw_used[p.r] = true;
        MatchResult& m = out[p.d];
        m.matched = raw[p.r];
        m.raw_index = p.r;
        m.iou = p.iou;
        m.class_agrees = raw[p.r].class_id == desired[p.d].class_id;
    }
    return out;
}

std::vector<std::string>
box_attribution_targets(std::span<const Box> boxes) {
    std::vector<std::string> out;
    out.reserve(boxes.size());
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        if (!boxes[i].neuron_ref) {
            throw DataError("box " + std::to_string(i) + " has no neuron_ref");
        }
        out.push_back(*boxes[i].neuron_ref);
    }
    return out;
}

Box
parse_box_json(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("box JSON: ") + e.what());
    }
    Box b;
    try {
        b.x1 = j.at("x1").get<double>();
        b.y1 = j.at("y1").get<double>();
        b.x2 = j.at("x2").get<double>();
        b.y2 = j.at("y2").get<double>();
        b.class_id = j.value("class", std::int64_t{0});
        b.score = j.value("score", 0.0);
        b.image_id = j.value("image_id", std::string{});
        if (auto it = j.find("neuron_ref"); it != j.end() && !it->is_null()) {
            b.neuron_ref = it->is_string() ? it->get<std::string>() : it->dump();
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("box JSON: ") + e.what());
    }
    b.validate();
    return b;
}

std::string
box_to_json(const Box& b) {
    json j;
    j["x1"] = b.x1;
    j["y1"] = b.y1;
    j["x2"] = b.x2;
    j["y2"] = b.y2;
    j["class"] = b.class_id;
    j["score"] = b.score;
    j["neuron_ref"] = b.neuron_ref ? json(*b.neuron_ref) : json(nullptr);
    j["image_id"] = b.image_id;
    return j.dump();
}

std::vector<Box>
read_boxes_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open box file " + path.string());
    }
    std::vector<Box> boxes;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            boxes.push_back(parse_box_json(line));
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return boxes;
}

void
write_boxes_jsonl(const std::filesystem::path& path, std::span<const Box> boxes) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot write box file " + path.string());
    }
    for (const Box& b : boxes) {
        out << box_to_json(b) << '\n';
    }
}

}  // namespace csk
