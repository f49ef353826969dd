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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace csk {

/// Detector box in pixel coordinates, x1 < x2 and y1 < y2.
struct Box {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
    std::int64_t class_id = 0;
    double score = 0.0;
    std::optional<std::string> neuron_ref;  // class neuron to backpropagate from
    std::string image_id;

    double area() const { return (x2 - x1) * (y2 - y1); }
    /// Throws DataError on non-positive area or a score outside [0,1].
    void validate() const;
};

struct MatchResult {
    Box query;
    std::optional<Box> matched;
    std::optional<std::size_t> raw_index;  // position in the raw list
    double iou = 0.0;                      // IoU with the match, or best IoU seen when unmatched
    bool class_agrees = false;
};

inline constexpr double kDefaultMinIou = 0.5;

double iou(const Box& a, const Box& b);

/// Greedy best-first one-to-one matching: candidate pairs are visited in
/// descending IoU order (ties by desired index, then raw index) and
/// accepted when both boxes are unused and IoU >= min_iou. Results follow
/// the order of `desired`. Class labels are not required to agree.
std::vector<MatchResult> match_fn_boxes(std::span<const Box> desired, std::span<const Box> raw,
                                        double min_iou = kDefaultMinIou);

/// The class-neuron backprop target of every box, in input order.
/// Throws DataError when a box lacks a neuron_ref.
std::vector<std::string> box_attribution_targets(std::span<const Box> boxes);

// JSON-lines box files: one object per line with x1, y1, x2, y2, class,
// score, neuron_ref (string or integer) and image_id.
std::vector<Box> read_boxes_jsonl(const std::filesystem::path& path);
void write_boxes_jsonl(const std::filesystem::path& path, std::span<const Box> boxes);
Box parse_box_json(const std::string& line);
std::string box_to_json(const Box& box);

}  // namespace csk
