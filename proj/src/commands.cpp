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

#include "csk/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "csk/error.hpp"
#include "csk/odadapt.hpp"
#include "csk/parallel.hpp"
#include "csk/report.hpp"
#include "csk/rng.hpp"
#include "csk/tensor_io.hpp"

namespace csk {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Outputs {
public:
    Outputs(const RunConfig& cfg, std::string command)
        : cfg_(cfg), command_(std::move(command)), dir_(cfg.out / command_) {
        fs::create_directories(dir_);
        text("config.txt", to_config_text(cfg_));
    }

    const fs::path& dir() const { return dir_; }
    const std::string& command() const { return command_; }
    std::uint64_t seed() const { return cfg_.seed; }

    void text(const fs::path& rel, const std::string& body) {
        write_text(dir_ / rel, body);
        result_.outputs.push_back(dir_ / rel);
    }
    void tensor(const fs::path& rel, const Tensor& t) {
        write_tensor(dir_ / rel, t);
        result_.outputs.push_back(dir_ / rel);
    }
    void cav(const fs::path& rel, const Cav& c) {
        write_cav(dir_ / rel, c);
        result_.outputs.push_back(dir_ / rel);
    }

    CommandResult finish(int exit_code = kExitOk) {
        result_.exit_code = exit_code;
        spdlog::info("{}: wrote {} files under {}", command_, result_.outputs.size(), dir_.string());
        return std::move(result_);
    }

private:
    const RunConfig& cfg_;
    std::string command_;
    fs::path dir_;
    CommandResult result_;
};

std::string
Csv(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string
Padded(std::size_t i, int width = 5) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*zu", width, i);
    return buf;
}

// Concept ids become directory names.
void
RequireSafeName(const std::string& id, const char* what) {
    if (id.empty() || id == "." || id == ".." || id.find_first_of("/\\") != std::string::npos) {
        throw DataError(std::string(what) + ": '" + id + "' cannot be used as a directory name");
    }
}

std::vector<fs::path>
ListFiles(const fs::path& dir, const std::string& extension) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == extension) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void
RequireDirectory(const fs::path& dir, const std::string& key) {
    if (dir.empty()) {
        throw ConfigError(key + " is not set");
    }
    if (!fs::is_directory(dir)) {
        throw ConfigError(key + ": directory not found: " + dir.string());
    }
}

void
RequireFile(const fs::path& file, const std::string& key) {
    if (file.empty()) {
        throw ConfigError(key + " is not set");
    }
    if (!fs::is_regular_file(file)) {
        throw ConfigError(key + ": file not found: " + file.string());
    }
}

fs::path
Resolve(const fs::path& base_dir, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base_dir / path;
}

std::vector<std::string>
ReadLines(const fs::path& path) {
    std::vector<std::string> out;
    std::istringstream in(read_text(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) out.push_back(line);
    }
    return out;
}

json
ParseJsonLine(const std::string& line, const fs::path& path, std::size_t lineno) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
}

TrainConfig
SeededTrainConfig(const RunConfig& cfg) {
    TrainConfig t = cfg.train;
    t.base_seed = derive_seed(cfg.seed, "train");
    t.validate();
    return t;
}

// Superpixel index written by mine; only entries a human labeled with a
// concept_id take part.
SuperpixelsByConcept
LoadSuperpixelIndex(const fs::path& index) {
    RequireFile(index, "synth.superpixels");
    SuperpixelsByConcept out;
    std::size_t unlabeled = 0, lineno = 0;
    for (const auto& line : ReadLines(index)) {
        ++lineno;
        const json j = ParseJsonLine(line, index, lineno);
        try {
            const std::string concept_id = j.value("concept_id", std::string{});
            if (concept_id.empty()) {
                ++unlabeled;
                continue;
            }
            Superpixel sp;
            sp.concept_id = concept_id;
            sp.patch = read_tensor(Resolve(index.parent_path(), j.at("patch").get<std::string>()));
            sp.mask = read_tensor(Resolve(index.parent_path(), j.at("mask").get<std::string>()));
            sp.source = j.value("source", std::string{});
            sp.patch.require_rank(3, "superpixel patch");
            sp.mask.require_rank(2, "superpixel mask");
            out[concept_id].push_back(std::move(sp));
        } catch (const json::exception& e) {
            throw DataError(index.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (unlabeled) {
        spdlog::warn("gen-synth: skipped {} superpixels without a concept_id", unlabeled);
    }
    if (out.empty()) {
        throw ConfigError("gen-synth: " + index.string() + " has no labeled superpixels");
    }
    return out;
}

std::string
BoxesField(const std::vector<Placement>& placements) {
    std::string out;
    for (const auto& p : placements) {
        if (!out.empty()) out += ';';
        out += std::to_string(p.box.x0) + " " + std::to_string(p.box.y0) + " " + std::to_string(p.box.x1) + " " +
               std::to_string(p.box.y1);
    }
    return out;
}

int
ExitFor(std::size_t failures, std::size_t total, const std::string& what) {
    if (failures == 0) return kExitOk;
    if (failures == total) {
        throw DataError(what + ": all " + std::to_string(total) + " cells failed");
    }
    spdlog::warn("{}: {} of {} cells failed", what, failures, total);
    return kExitPartial;
}

// Matches desired boxes against raw detector boxes per image and writes
// the outcome; no-op unless both box files are configured.
void
MatchBoxes(const RunConfig& cfg, Outputs& out) {
    const auto& g = cfg.grad;
    if (g.desired_boxes.empty() && g.raw_boxes.empty()) return;
    RequireFile(g.desired_boxes, "grad.desired_boxes");
    RequireFile(g.raw_boxes, "grad.raw_boxes");
    if (!(g.min_iou > 0.0 && g.min_iou <= 1.0)) {
        throw ConfigError("grad.min_iou must lie in (0,1]");
    }
    std::map<std::string, std::vector<Box>> desired, raw;
    for (auto& b : read_boxes_jsonl(g.desired_boxes)) desired[b.image_id].push_back(std::move(b));
    for (auto& b : read_boxes_jsonl(g.raw_boxes)) raw[b.image_id].push_back(std::move(b));

    std::string csv = seed_header(cfg.seed, out.command());
    csv += "image_id,desired_index,class,neuron_ref,raw_index,iou,class_agrees\n";
    std::size_t matched = 0, total = 0;
    for (const auto& [image, boxes] : desired) {
        const auto it = raw.find(image);
        const std::vector<Box> none;
        const auto results = match_fn_boxes(boxes, it == raw.end() ? none : it->second, g.min_iou);
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& m = results[i];
            ++total;
            matched += m.matched.has_value();
            csv += Csv(image) + "," + std::to_string(i) + "," + std::to_string(m.query.class_id) + "," +
                   Csv(m.query.neuron_ref.value_or("")) + "," +
                   (m.raw_index ? std::to_string(*m.raw_index) : std::string("unmatched")) + "," +
                   format_metric(m.iou) + "," + (m.matched ? (m.class_agrees ? "1" : "0") : "") + "\n";
        }
    }
    out.text("box_matches.csv", csv);
    spdlog::info("grad-stability: matched {} of {} desired boxes at IoU >= {}", matched, total, g.min_iou);
}

void
WriteGradReports(const std::vector<AttributionRecord>& records, Outputs& out) {
    if (records.empty()) {
        throw DataError("grad-stability: no attribution records were produced");
    }
    const auto summaries = summarize_all(records);
    out.text("grad_records.csv", records_csv(records, out.seed(), out.command()));
    out.text("grad_stability.csv", grad_summary_csv(summaries, out.seed(), out.command()));
    out.text("grad_cad.csv", cad_csv(records, out.seed(), out.command()));
    out.text("grad_stability.txt", format_grad_table(summaries));
}

std::vector<AttributionRecord>
GradFromRefNet(const RunConfig& cfg) {
    RefNetConfig rc = cfg.refnet;
    rc.seed = derive_seed(cfg.seed, "refnet");
    rc.validate();
    const RefNet net(rc);
    const auto& g = cfg.grad;

    std::vector<std::size_t> layers = g.layers;
    if (layers.empty()) {
        for (std::size_t l = 0; l < net.num_blocks(); ++l) layers.push_back(l);
    }
    for (std::size_t l : layers) {
        if (l >= net.num_blocks()) {
            throw ConfigError("grad.layers: layer " + std::to_string(l) + " out of range (" +
                              std::to_string(net.num_blocks()) + " blocks)");
        }
    }
    if (g.modes.empty()) throw ConfigError("grad.modes is empty");
    if (g.concepts < 2) throw ConfigError("grad.concepts must be at least 2 (negatives come from other concepts)");
    if (g.predictions == 0) throw ConfigError("grad.predictions must be positive");
    cfg.smoothgrad.validate();
    const TrainConfig tcfg = SeededTrainConfig(cfg);

    const auto shapes = builtin_shape_superpixels(g.concepts, 16, g.shape_size, derive_seed(cfg.seed, "grad/shapes"));
    SynthConfig sc;
    sc.width = rc.input_width;
    sc.height = rc.input_height;
    sc.max_patches = 2;
    sc.seed = derive_seed(cfg.seed, "grad/images");
    sc.validate();

    std::vector<std::string> ids;
    for (const auto& [id, _] : shapes) ids.push_back(id);

    struct Prediction {
        std::string id;
        Tensor image;
        std::size_t class_idx = 0;
        std::vector<Tensor> grad, sg;  // per selected layer
    };
    std::vector<Prediction> preds(g.predictions);
    for (std::size_t k = 0; k < preds.size(); ++k) {
        preds[k].id = "p" + Padded(k, 4);
        const std::size_t index = g.concept_samples + k / ids.size();
        preds[k].image = generate_synthetic_sample(shapes, ids[k % ids.size()], index, sc).image;
    }

    const std::size_t jobs = cfg.effective_jobs();
    parallel_for(preds.size(), jobs, [&](std::size_t k) {
        Prediction& p = preds[k];
        p.class_idx = net.predict(p.image);
        for (std::size_t l : layers) {
            SmoothGradConfig sg = cfg.smoothgrad;
            sg.seed = derive_seed(cfg.seed, "grad/smoothgrad/" + p.id, l);
            p.grad.push_back(net.grad_at_tap(p.image, LayerTap{l}, p.class_idx));
            p.sg.push_back(smoothgrad_gradient(net, p.image, LayerTap{l}, p.class_idx, sg));
        }
    });

    std::vector<AttributionRecord> records;
    for (std::size_t li = 0; li < layers.size(); ++li) {
        const std::size_t layer = layers[li];
        ConceptDataset ds(layer);
        for (const auto& id : ids) {
            for (std::size_t i = 0; i < g.concept_samples; ++i) {
                ds.add(id, net.forward_to(generate_synthetic_sample(shapes, id, i, sc).image, LayerTap{layer}));
            }
        }
        ds.validate();
        for (CavMode mode : g.modes) {
            std::map<std::string, std::vector<Cav>> cavs;
            for (const auto& id : ids) cavs[id] = train_ensemble(ds, id, mode, tcfg, jobs);
            for (const auto& p : preds) {
                for (const auto& [id, ensemble] : cavs) {
                    for (std::size_t run = 0; run < ensemble.size(); ++run) {
                        records.push_back({p.id, id, run, attribute(ensemble[run], p.grad[li]),
                                           attribute(ensemble[run], p.sg[li]), layer, mode});
                    }
                }
            }
        }
    }
    return records;
}

std::vector<AttributionRecord>
GradFromManifest(const RunConfig& cfg) {
    const auto& g = cfg.grad;
    RequireFile(g.manifest, "grad.manifest");
    RequireDirectory(g.cavs, "grad.cavs");
    const std::set<CavMode> modes(g.modes.begin(), g.modes.end());

    // (layer, mode, concept) -> runs in path order.
    std::map<std::tuple<std::size_t, CavMode, std::string>, std::vector<Cav>> groups;
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(g.cavs)) {
        if (entry.is_regular_file() && entry.path().extension() == ".cav") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        Cav c = read_cav(f);
        if (!modes.count(c.mode)) continue;
        groups[{c.layer_id, c.mode, c.concept_id}].push_back(std::move(c));
    }
    if (groups.empty()) {
        throw DataError("grad-stability: no .cav files for the selected modes under " + g.cavs.string());
    }

    std::vector<AttributionRecord> records;
    std::size_t lineno = 0;
    for (const auto& line : ReadLines(g.manifest)) {
        ++lineno;
        const json j = ParseJsonLine(line, g.manifest, lineno);
        std::string id;
        std::size_t layer = 0;
        Tensor grad, sg;
        try {
            id = j.at("prediction_id").is_string() ? j.at("prediction_id").get<std::string>()
                                                   : j.at("prediction_id").dump();
            layer = j.at("layer").get<std::size_t>();
            grad = read_tensor(Resolve(g.manifest.parent_path(), j.at("grad").get<std::string>()));
            sg = read_tensor(Resolve(g.manifest.parent_path(), j.at("grad_sg").get<std::string>()));
        } catch (const json::exception& e) {
            throw DataError(g.manifest.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        bool used = false;
        for (const auto& [key, ensemble] : groups) {
            const auto& [l, mode, concept_id] = key;
            if (l != layer) continue;
            used = true;
            for (std::size_t run = 0; run < ensemble.size(); ++run) {
                records.push_back(
                    {id, concept_id, run, attribute(ensemble[run], grad), attribute(ensemble[run], sg), layer, mode});
            }
        }
        if (!used) {
            spdlog::warn("grad-stability: no CAVs for layer {} (prediction '{}')", layer, id);
        }
    }
    // Stable report order regardless of manifest order.
    std::stable_sort(records.begin(), records.end(), [](const AttributionRecord& a, const AttributionRecord& b) {
        return std::tie(a.layer_id, a.mode) < std::tie(b.layer_id, b.mode);
    });
    return records;
}

}  // namespace

std::vector<std::size_t>
resolve_layers(const RunConfig& cfg) {
    if (!cfg.sweep.layers.empty()) return cfg.sweep.layers;
    if (cfg.source == DataSource::Synthetic) return {0};
    RequireDirectory(cfg.activations, "data.activations");
    std::vector<std::size_t> layers;
    for (const auto& entry : fs::directory_iterator(cfg.activations)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_directory() || name.size() < 2 || name[0] != 'l') continue;
        if (name.find_first_not_of("0123456789", 1) != std::string::npos) continue;
        layers.push_back(std::stoul(name.substr(1)));
    }
    std::sort(layers.begin(), layers.end());
    if (layers.empty()) {
        throw DataError("no l<k> layer directories under " + cfg.activations.string());
    }
    return layers;
}

ConceptDataset
load_concept_directory(const fs::path& dir, std::size_t layer_id) {
    ConceptDataset ds(layer_id);
    std::vector<fs::path> concepts;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_directory()) concepts.push_back(entry.path());
    }
    std::sort(concepts.begin(), concepts.end());
    for (const auto& c : concepts) {
        for (const auto& f : ListFiles(c, kCtenExtension)) {
            ds.add(c.filename().string(), read_tensor(f));
        }
    }
    if (ds.concepts().empty()) {
        throw DataError("no concept activations under " + dir.string());
    }
    return ds;
}

std::map<std::size_t, ConceptDataset>
load_datasets(const RunConfig& cfg) {
    std::map<std::size_t, ConceptDataset> out;
    const auto layers = resolve_layers(cfg);
    if (cfg.source == DataSource::Synthetic) {
        const auto& s = cfg.synthetic;
        for (std::size_t l : layers) {
            out.emplace(l, generate_channel_coded_activations(s.concepts, s.samples, s.channels, s.height, s.width,
                                                              s.signal, derive_seed(cfg.seed, "data"), l));
        }
        return out;
    }
    RequireDirectory(cfg.activations, "data.activations");
    for (std::size_t l : layers) {
        const fs::path dir = cfg.activations / ("l" + std::to_string(l));
        if (!fs::is_directory(dir)) {
            spdlog::warn("layer {}: {} not found", l, dir.string());
            continue;
        }
        out.emplace(l, load_concept_directory(dir, l));
    }
    return out;
}

CommandResult
cmd_gen_synth(const RunConfig& cfg) {
    GenSynthConfig g = cfg.gen;
    g.synth.seed = derive_seed(cfg.seed, "gen-synth");
    g.synth.validate();
    if (g.samples == 0) throw ConfigError("synth.samples must be positive");
    const SuperpixelsByConcept superpixels =
        g.superpixels.empty()
            ? builtin_shape_superpixels(g.builtin_concepts, g.builtin_pool, g.builtin_size,
                                        derive_seed(cfg.seed, "gen-synth/shapes"))
            : LoadSuperpixelIndex(g.superpixels);
    for (const auto& [id, _] : superpixels) RequireSafeName(id, "concept id");

    Outputs out(cfg, "gen-synth");
    std::string index = seed_header(cfg.seed, out.command());
    index += "concept_id,index,path,patches,boxes\n";
    for_each_synthetic_sample(superpixels, g.synth, g.samples, [&](const SyntheticSample& s) {
        const fs::path rel = fs::path(s.concept_id) / (Padded(s.index) + kCtenExtension);
        out.tensor(rel, s.image);
        index += Csv(s.concept_id) + "," + std::to_string(s.index) + "," + Csv(rel.generic_string()) + "," +
                 std::to_string(s.placements.size()) + "," + BoxesField(s.placements) + "\n";
    });
    out.text("index.csv", index);
    return out.finish();
}

CommandResult
cmd_mine(const RunConfig& cfg) {
    const auto& m = cfg.mine;
    RequireDirectory(m.activations, "mine.activations");
    if (!m.images.empty()) RequireDirectory(m.images, "mine.images");
    if (!(m.threshold >= 0.0 && m.threshold <= 1.0)) throw ConfigError("mine.threshold must lie in [0,1]");
    if (m.nmf.rank == 0) throw ConfigError("mine.rank must be positive");

    const auto files = ListFiles(m.activations, kCtenExtension);
    if (files.empty()) {
        throw DataError("mine: no " + std::string(kCtenExtension) + " files in " + m.activations.string());
    }
    std::vector<Tensor> acts;
    for (const auto& f : files) {
        acts.push_back(read_tensor(f));
        acts.back().require_rank(3, "mine activation");
    }
    NmfOptions opts = m.nmf;
    opts.seed = derive_seed(cfg.seed, "mine");
    const NmfModel model = nmf_factorize(activation_matrix(acts), opts);
    const auto ncavs = ncavs_from_model(model, m.layer);

    Outputs out(cfg, "mine");
    const std::size_t channels = acts.front().dim(0);
    std::string ncsv = seed_header(cfg.seed, out.command());
    ncsv += "component,layer";
    for (std::size_t c = 0; c < channels; ++c) ncsv += ",c" + std::to_string(c);
    ncsv += '\n';
    for (const auto& n : ncavs) {
        ncsv += std::to_string(n.component_index) + "," + std::to_string(n.layer_id);
        for (float v : n.vector) ncsv += "," + format_exact(v);
        ncsv += '\n';
        out.tensor(fs::path("ncavs") / ("ncav" + std::to_string(n.component_index) + kCtenExtension),
                   Tensor({n.vector.size()}, n.vector));
    }
    out.text("ncavs.csv", ncsv);

    std::string obj = seed_header(cfg.seed, out.command());
    obj += "iteration,objective\n";
    for (std::size_t i = 0; i < model.objective.size(); ++i) {
        obj += std::to_string(i) + "," + format_exact(model.objective[i]) + "\n";
    }
    out.text("nmf_objective.csv", obj);

    std::string spcsv = seed_header(cfg.seed, out.command());
    spcsv += "source,component,index,x0,y0,x1,y1,area,patch,mask\n";
    std::string jsonl;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const std::string stem = files[i].stem().string();
        std::optional<Tensor> image;
        if (!m.images.empty()) {
            const fs::path img = m.images / files[i].filename();
            if (!fs::is_regular_file(img)) {
                throw DataError("mine: no image " + img.string() + " for activation " + files[i].string());
            }
            image = read_tensor(img);
        }
        for (const auto& n : ncavs) {
            const std::string tag = "ncav" + std::to_string(n.component_index);
            const Tensor heat = ncav_heatmap(n, acts[i]);
            out.tensor(fs::path("heatmaps") / stem / (tag + kCtenExtension), heat);
            if (!image) continue;
            const auto sps = extract_superpixels(*image, heat, m.threshold, m.min_area);
            for (std::size_t s = 0; s < sps.size(); ++s) {
                const auto& sp = sps[s];
                const std::string base = stem + "_" + tag + "_" + std::to_string(s);
                const fs::path patch = fs::path("superpixels") / (base + ".patch" + kCtenExtension);
                const fs::path mask = fs::path("superpixels") / (base + ".mask" + kCtenExtension);
                out.tensor(patch, sp.patch);
                out.tensor(mask, sp.mask);
                std::size_t area = 0;
                for (float v : sp.mask.values()) area += v > 0.5f;
                spcsv += Csv(stem) + "," + std::to_string(n.component_index) + "," + std::to_string(s) + "," +
                         std::to_string(sp.box.x0) + "," + std::to_string(sp.box.y0) + "," +
                         std::to_string(sp.box.x1) + "," + std::to_string(sp.box.y1) + "," + std::to_string(area) +
                         "," + Csv(patch.generic_string()) + "," + Csv(mask.generic_string()) + "\n";
                json j;
                j["source"] = stem;
                j["component"] = n.component_index;
                j["layer"] = n.layer_id;
                j["box"] = {sp.box.x0, sp.box.y0, sp.box.x1, sp.box.y1};
                j["patch"] = patch.generic_string();
                j["mask"] = mask.generic_string();
                j["concept_id"] = "";
                jsonl += j.dump() + "\n";
            }
        }
    }
    if (!m.images.empty()) {
        out.text("superpixels.csv", spcsv);
        out.text("index.jsonl", jsonl);
    }
    return out.finish();
}

CommandResult
cmd_train_cavs(const RunConfig& cfg) {
    const TrainConfig tcfg = SeededTrainConfig(cfg);
    if (cfg.sweep.modes.empty()) throw ConfigError("sweep.modes is empty");
    const auto layers = resolve_layers(cfg);
    const auto datasets = load_datasets(cfg);
    const std::size_t jobs = cfg.effective_jobs();

    Outputs out(cfg, "train-cavs");
    std::string csv = seed_header(cfg.seed, out.command());
    csv += "concept_id,layer,mode,run,seed,train_f1,val_f1,bias,convergence_warning,path\n";
    std::vector<SweepCellError> errors;
    std::size_t cells = 0;
    for (std::size_t layer : layers) {
        const auto it = datasets.find(layer);
        if (it == datasets.end()) {
            for (CavMode mode : cfg.sweep.modes) {
                ++cells;
                errors.push_back({"*", layer, mode, 0, "layer not found"});
            }
            continue;
        }
        const ConceptDataset& ds = it->second;
        for (CavMode mode : cfg.sweep.modes) {
            for (const auto& concept_id : ds.concept_ids()) {
                ++cells;
                try {
                    RequireSafeName(concept_id, "concept id");
                    const auto cavs = train_ensemble(ds, concept_id, mode, tcfg, jobs);
                    for (std::size_t run = 0; run < cavs.size(); ++run) {
                        const Cav& c = cavs[run];
                        const fs::path rel = fs::path("l" + std::to_string(layer)) / std::string(to_string(mode)) /
                                             concept_id / ("run" + Padded(run, 2) + ".cav");
                        out.cav(rel, c);
                        const double val_f1 = evaluate_f1(c, ds, c.split.val_pos, c.split.val_neg);
                        csv += Csv(concept_id) + "," + std::to_string(layer) + "," + std::string(to_string(mode)) +
                               "," + std::to_string(run) + "," + std::to_string(c.run_seed) + "," +
                               format_metric(c.train_f1) + "," + format_metric(val_f1) + "," +
                               format_exact(c.bias) + "," + (c.convergence_warning ? "1" : "0") + "," +
                               Csv(rel.generic_string()) + "\n";
                    }
                } catch (const DataError& e) {
                    errors.push_back({concept_id, layer, mode, 0, e.what()});
                }
            }
        }
    }
    out.text("cavs.csv", csv);
    out.text("errors.csv", sweep_errors_csv(errors, cfg.seed, out.command()));
    return out.finish(ExitFor(errors.size(), cells, "train-cavs"));
}

CommandResult
cmd_stability(const RunConfig& cfg) {
    SweepConfig sweep = cfg.sweep;
    sweep.layers = resolve_layers(cfg);
    sweep.validate();
    const TrainConfig tcfg = SeededTrainConfig(cfg);
    const auto datasets = load_datasets(cfg);
    const SweepResult result = run_sweep(datasets, sweep, tcfg, cfg.effective_jobs());

    Outputs out(cfg, "stability");
    const auto cells = summarize_stability(result.rows);
    out.text("stability.csv", stability_csv(result.rows, cfg.seed, out.command()));
    out.text("stability_table.txt", format_stability_table(cells));
    out.text("sweep.csv", sweep_csv(cells, cfg.seed, out.command()));
    out.text("sweep.dat", sweep_dat(cells, cfg.seed, out.command()));
    out.text("errors.csv", sweep_errors_csv(result.errors, cfg.seed, out.command()));
    for (const auto& e : result.errors) {
        spdlog::warn("stability: concept '{}' layer {} {} count {}: {}", e.concept_id, e.layer_id,
                     to_string(e.mode), e.sample_count, e.message);
    }
    return out.finish(ExitFor(result.errors.size(), result.cells, "stability"));
}

CommandResult
cmd_grad_stability(const RunConfig& cfg) {
    const auto records = cfg.grad.source == GradSource::RefNet ? GradFromRefNet(cfg) : GradFromManifest(cfg);
    Outputs out(cfg, "grad-stability");
    MatchBoxes(cfg, out);
    WriteGradReports(records, out);
    return out.finish();
}

CommandResult
cmd_report(const RunConfig& cfg) {
    const fs::path in = cfg.report_input.empty() ? cfg.out : cfg.report_input;
    const fs::path stability = in / "stability" / "stability.csv";
    const fs::path grad = in / "grad-stability" / "grad_records.csv";
    const bool have_stability = fs::is_regular_file(stability);
    const bool have_grad = fs::is_regular_file(grad);
    if (!have_stability && !have_grad) {
        throw DataError("report: neither " + stability.string() + " nor " + grad.string() + " exists");
    }
    Outputs out(cfg, "report");
    const auto seed_of = [&](const std::string& text) {
        return parse_seed_header(text.substr(0, text.find('\n'))).value_or(cfg.seed);
    };
    if (have_stability) {
        const std::string text = read_text(stability);
        const std::uint64_t seed = seed_of(text);
        const auto rows = parse_stability_csv(text);
        const auto cells = summarize_stability(rows);
        out.text("stability_table.txt", format_stability_table(cells));
        out.text("sweep.csv", sweep_csv(cells, seed, out.command()));
        out.text("sweep.dat", sweep_dat(cells, seed, out.command()));
    }
    if (have_grad) {
        const std::string text = read_text(grad);
        const std::uint64_t seed = seed_of(text);
        const auto records = parse_records_csv(text);
        if (records.empty()) throw DataError("report: " + grad.string() + " has no records");
        const auto summaries = summarize_all(records);
        out.text("grad_stability.csv", grad_summary_csv(summaries, seed, out.command()));
        out.text("grad_stability.txt", format_grad_table(summaries));
    }
    return out.finish();
}

const std::vector<std::string>&
command_names() {
    static const std::vector<std::string> kNames{"gen-synth", "mine", "train-cavs", "stability", "grad-stability",
                                                 "report"};
    return kNames;
}

int
run_command(const std::string& name, const RunConfig& cfg) {
    static const std::map<std::string, std::function<CommandResult(const RunConfig&)>> kCommands{
        {"gen-synth", cmd_gen_synth},   {"mine", cmd_mine},
        {"train-cavs", cmd_train_cavs}, {"stability", cmd_stability},
        {"grad-stability", cmd_grad_stability}, {"report", cmd_report},
    };
    const auto it = kCommands.find(name);
    if (it == kCommands.end()) {
        spdlog::error("unknown command '{}'", name);
        return kExitConfig;
    }
    try {
        return it->second(cfg).exit_code;
    } catch (const ConfigError& e) {
        spdlog::error("{}: configuration error: {}", name, e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        spdlog::error("{}: {}", name, e.what());
        return kExitData;
    }
}

}  // namespace csk
