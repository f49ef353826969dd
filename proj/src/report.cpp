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

#include "csk/report.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "csk/error.hpp"
#include "csk/tensor_io.hpp"

namespace csk {

namespace {

std::string
Printf(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, v);
    return buf;
}

std::string
CsvField(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string>
SplitCsvLine(const std::string& line) {
    std::vector<std::string> out(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                out.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                out.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back();
        } else if (c != '\r') {
            out.back() += c;
        }
    }
    return out;
}

// Data lines of a CSV: comment lines and the column header are skipped.
std::vector<std::vector<std::string>>
CsvRows(const std::string& text, const std::string& expected_header, std::size_t columns) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            if (line != expected_header) {
                throw DataError("CSV header mismatch: expected '" + expected_header + "', got '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        auto fields = SplitCsvLine(line);
        if (fields.size() != columns) {
            throw DataError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                            " fields, got " + std::to_string(fields.size()));
        }
        rows.push_back(std::move(fields));
    }
    if (!header_seen) {
        throw DataError("CSV has no header line");
    }
    return rows;
}

std::size_t
ToSize(const std::string& s) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw DataError("CSV: expected an integer, got '" + s + "'");
    }
}

double
ToDouble(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("CSV: expected a number, got '" + s + "'");
    }
}

CavMode
ToMode(const std::string& s) {
    const auto mode = parse_cav_mode(s);
    if (!mode) throw DataError("CSV: unknown mode '" + s + "'");
    return *mode;
}

std::string
LayerName(std::size_t layer) {
    return "l" + std::to_string(layer);
}

std::string
PadLeft(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string
PadRight(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

constexpr const char* kStabilityHeader = "concept_id,layer,mode,sample_count,cos,f1,s";
constexpr const char* kRecordsHeader = "prediction_id,concept_id,run,attr_grad,attr_sg,layer,mode";

}  // namespace

std::string
seed_header(std::uint64_t seed, const std::string& command) {
    return "# csk seed=" + std::to_string(seed) + " command=" + command + "\n";
}

std::optional<std::uint64_t>
parse_seed_header(const std::string& line) {
    const std::string prefix = "# csk seed=";
    if (line.rfind(prefix, 0) != 0) return std::nullopt;
    std::size_t end = prefix.size();
    while (end < line.size() && std::isdigit(static_cast<unsigned char>(line[end]))) ++end;
    if (end == prefix.size()) return std::nullopt;
    return std::stoull(line.substr(prefix.size(), end - prefix.size()));
}

std::string
format_metric(double v) {
    return Printf("%.10f", v);
}

std::string
format_exact(double v) {
    return Printf("%.17g", v);
}

std::string
stability_csv(std::span<const StabilityRow> rows, std::uint64_t seed, const std::string& command) {
    std::string out = seed_header(seed, command);
    out += kStabilityHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += CsvField(r.concept_id) + "," + std::to_string(r.layer_id) + "," + std::string(to_string(r.mode)) +
               "," + std::to_string(r.sample_count) + "," + format_metric(r.cos) + "," + format_metric(r.f1) + "," +
               format_metric(r.s) + "\n";
    }
    return out;
}

std::vector<StabilityRow>
parse_stability_csv(const std::string& text) {
    std::vector<StabilityRow> out;
    for (const auto& f : CsvRows(text, kStabilityHeader, 7)) {
        StabilityRow r;
        r.concept_id = f[0];
        r.layer_id = ToSize(f[1]);
        r.mode = ToMode(f[2]);
        r.sample_count = ToSize(f[3]);
        r.cos = ToDouble(f[4]);
        r.f1 = ToDouble(f[5]);
        r.s = ToDouble(f[6]);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<StabilityCell>
summarize_stability(std::span<const StabilityRow> rows) {
    using Key = std::tuple<CavMode, std::size_t, std::size_t>;  // mode, layer, count
    std::map<Key, StabilityCell> cells;
    for (const auto& r : rows) {
        auto& c = cells[{r.mode, r.layer_id, r.sample_count}];
        c.layer_id = r.layer_id;
        c.mode = r.mode;
        c.sample_count = r.sample_count;
        c.cos += r.cos;
        c.f1 += r.f1;
        ++c.concepts;
    }
    std::vector<StabilityCell> out;
    out.reserve(cells.size());
    for (auto& [key, c] : cells) {
        c.cos /= static_cast<double>(c.concepts);
        c.f1 /= static_cast<double>(c.concepts);
        c.s = stability_score(c.cos, c.f1);
        out.push_back(c);
    }
    return out;
}

std::string
format_stability_table(std::span<const StabilityCell> cells, std::optional<std::size_t> sample_count) {
    if (cells.empty()) return "(no stability rows)\n";
    std::size_t count = 0;
    if (sample_count) {
        count = *sample_count;
    } else {
        for (const auto& c : cells) count = std::max(count, c.sample_count);
    }
    std::set<std::size_t> layers;
    std::set<CavMode> modes;
    std::map<std::tuple<CavMode, std::size_t>, const StabilityCell*> at;
    for (const auto& c : cells) {
        if (c.sample_count != count) continue;
        layers.insert(c.layer_id);
        modes.insert(c.mode);
        at[{c.mode, c.layer_id}] = &c;
    }
    constexpr std::size_t kLabel = 10, kCol = 8;
    std::string out = "CAV stability, " + std::to_string(count) + " training samples per concept\n";
    out += PadRight("", kLabel);
    for (std::size_t l : layers) out += PadLeft(LayerName(l), kCol);
    out += '\n';
    for (CavMode m : modes) {
        static constexpr const char* kMetric[] = {"cos", "f1", "S"};
        for (int k = 0; k < 3; ++k) {
            out += PadRight((k == 0 ? std::string(to_string(m)) : std::string()), 5) + PadRight(kMetric[k], kLabel - 5);
            for (std::size_t l : layers) {
                const auto it = at.find({m, l});
                if (it == at.end()) {
                    out += PadLeft("-", kCol);
                    continue;
                }
                const double v = k == 0 ? it->second->cos : (k == 1 ? it->second->f1 : it->second->s);
                out += PadLeft(Printf("%.3f", v), kCol);
            }
            out += '\n';
        }
    }
    return out;
}

std::string
sweep_csv(std::span<const StabilityCell> cells, std::uint64_t seed, const std::string& command) {
    std::string out = seed_header(seed, command);
    out += "layer,mode,sample_count,cos,f1,s,concepts\n";
    for (const auto& c : cells) {
        out += std::to_string(c.layer_id) + "," + std::string(to_string(c.mode)) + "," +
               std::to_string(c.sample_count) + "," + format_metric(c.cos) + "," + format_metric(c.f1) + "," +
               format_metric(c.s) + "," + std::to_string(c.concepts) + "\n";
    }
    return out;
}

std::string
sweep_dat(std::span<const StabilityCell> cells, std::uint64_t seed, const std::string& command) {
    std::string out = seed_header(seed, command);
    bool first = true;
    std::optional<std::tuple<CavMode, std::size_t>> current;
    for (const auto& c : cells) {
        const std::tuple<CavMode, std::size_t> key{c.mode, c.layer_id};
        if (current != key) {
            if (!first) out += "\n\n";
            first = false;
            current = key;
            out += "# " + std::string(to_string(c.mode)) + " " + LayerName(c.layer_id) + "\n";
            out += "# sample_count cos f1 s\n";
        }
        out += std::to_string(c.sample_count) + " " + format_metric(c.cos) + " " + format_metric(c.f1) + " " +
               format_metric(c.s) + "\n";
    }
    return out;
}

std::string
sweep_errors_csv(std::span<const SweepCellError> errors, std::uint64_t seed, const std::string& command) {
    std::string out = seed_header(seed, command);
    out += "concept_id,layer,mode,sample_count,message\n";
    for (const auto& e : errors) {
        out += CsvField(e.concept_id) + "," + std::to_string(e.layer_id) + "," + std::string(to_string(e.mode)) +
               "," + std::to_string(e.sample_count) + "," + CsvField(e.message) + "\n";
    }
    return out;
}

std::string
records_csv(std::span<const AttributionRecord> records, std::uint64_t seed, const std::string& command) {
    std::string out = seed_header(seed, command);
    out += kRecordsHeader;
    out += '\n';
    for (const auto& r : records) {
        out += CsvField(r.prediction_id) + "," + CsvField(r.concept_id) + "," + std::to_string(r.run) + "," +
               format_exact(r.attr_grad) + "," + format_exact(r.attr_sg) + "," + std::to_string(r.layer_id) + "," +
               std::string(to_string(r.mode)) + "\n";
    }
    return out;
}

std::vector<AttributionRecord>
parse_records_csv(const std::string& text) {
    std::vector<AttributionRecord> out;
    for (const auto& f : CsvRows(text, kRecordsHeader, 7)) {
        AttributionRecord r;
        r.prediction_id = f[0];
        r.concept_id = f[1];
        r.run = ToSize(f[2]);
        r.attr_grad = ToDouble(f[3]);
        r.attr_sg = ToDouble(f[4]);
        r.layer_id = ToSize(f[5]);
        r.mode = ToMode(f[6]);
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<GradStabilitySummary>
summarize_all(std::span<const AttributionRecord> records) {
    std::map<std::tuple<CavMode, std::size_t>, std::vector<AttributionRecord>> groups;
    for (const auto& r : records) groups[{r.mode, r.layer_id}].push_back(r);
    std::vector<GradStabilitySummary> out;
    out.reserve(groups.size());
    for (const auto& [key, recs] : groups) out.push_back(summarize_grad_stability(recs));
    return out;
}

std::string
grad_summary_csv(std::span<const GradStabilitySummary> rows, std::uint64_t seed, const std::string& command) {
    std::string out = seed_header(seed, command);
    out += "layer,mode,tp,tn,fp,fn,acc,cad_percent,predictions,skipped\n";
    for (const auto& r : rows) {
        out += std::to_string(r.layer_id) + "," + std::string(to_string(r.mode)) + "," +
               std::to_string(r.confusion.tp) + "," + std::to_string(r.confusion.tn) + "," +
               std::to_string(r.confusion.fp) + "," + std::to_string(r.confusion.fn) + "," +
               format_metric(r.confusion.acc()) + "," + format_metric(r.cad_percent) + "," +
               std::to_string(r.predictions) + "," + std::to_string(r.skipped) + "\n";
    }
    return out;
}

std::string
format_grad_table(std::span<const GradStabilitySummary> rows) {
    if (rows.empty()) return "(no attribution records)\n";
    std::map<CavMode, std::map<std::size_t, const GradStabilitySummary*>> by_mode;
    for (const auto& r : rows) by_mode[r.mode][r.layer_id] = &r;
    constexpr std::size_t kLabel = 9, kCol = 9;
    std::string out;
    for (const auto& [mode, layers] : by_mode) {
        if (!out.empty()) out += '\n';
        out += "Gradient stability, " + std::string(to_string(mode)) + "-CAV\n";
        out += PadRight("", kLabel);
        for (const auto& [l, _] : layers) out += PadLeft(LayerName(l), kCol);
        out += '\n';
        const auto line = [&](const char* label, auto value) {
            out += PadRight(label, kLabel);
            for (const auto& [l, s] : layers) out += PadLeft(value(*s), kCol);
            out += '\n';
        };
        line("TP", [](const GradStabilitySummary& s) { return std::to_string(s.confusion.tp); });
        line("TN", [](const GradStabilitySummary& s) { return std::to_string(s.confusion.tn); });
        line("FP", [](const GradStabilitySummary& s) { return std::to_string(s.confusion.fp); });
        line("FN", [](const GradStabilitySummary& s) { return std::to_string(s.confusion.fn); });
        line("Acc", [](const GradStabilitySummary& s) { return Printf("%.2f", s.confusion.acc()); });
        line("CAD, %", [](const GradStabilitySummary& s) {
            return Printf("%.1f", s.cad_percent) + (s.skipped ? "*" : "");
        });
        bool flagged = false;
        for (const auto& [l, s] : layers) flagged = flagged || s->skipped;
        if (flagged) out += "* some predictions had an undefined CAD (zero vanilla attribution) and were skipped\n";
    }
    return out;
}

std::string
cad_csv(std::span<const AttributionRecord> records, std::uint64_t seed, const std::string& command) {
    std::map<std::tuple<CavMode, std::size_t, std::string>, std::vector<AttributionRecord>> groups;
    for (const auto& r : records) groups[{r.mode, r.layer_id, r.prediction_id}].push_back(r);
    std::string out = seed_header(seed, command);
    out += "layer,mode,prediction_id,cad_percent\n";
    for (const auto& [key, recs] : groups) {
        const auto& [mode, layer, id] = key;
        const auto v = cad(recs);
        out += std::to_string(layer) + "," + std::string(to_string(mode)) + "," + CsvField(id) + "," +
               (v ? format_metric(100.0 * *v) : std::string("undefined")) + "\n";
    }
    return out;
}

void
write_text(const std::filesystem::path& path, const std::string& text) {
    write_file_bytes(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                                         text.size()));
}

std::string
read_text(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    return std::string(bytes.begin(), bytes.end());
}

}  // namespace csk
