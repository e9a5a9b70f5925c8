#include "divetrack/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "divetrack/metrics.hpp"

namespace divetrack {

using ordered_json = nlohmann::ordered_json;

void ExperimentConfig::validate() const {
    engine.validate();
    if (modes.empty()) throw ConfigError("experiment.modes", "at least one mode required");
    if (clicks < 1) throw ConfigError("experiment.clicks", "must be >= 1");
    if (scene_specs.empty()) {
        if (suite != "reappearance" && suite != "static") {
            throw ConfigError("experiment.suite",
                              "unknown suite '" + suite + "' (reappearance, static)");
        }
        if (num_scenes < 1) throw ConfigError("experiment.num_scenes", "must be >= 1");
    }
    if (threads < 0) throw ConfigError("experiment.threads", "must be >= 0");
    if (reacq_window < 1) throw ConfigError("experiment.reacq_window", "must be >= 1");
    if (reacq_j_threshold < 0.0 || reacq_j_threshold > 100.0) {
        throw ConfigError("experiment.reacq_j_threshold", "must be in [0, 100]");
    }
}

ExperimentConfig experiment_config_from_string(const std::string& text,
                                               const std::string& where) {
    const std::string prefix = where.empty() ? "" : where + ":";
    ExperimentConfig cfg;
    cfg.engine = engine_config_from_string(text, where);

    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(prefix + "<root>", std::string("invalid JSON: ") + e.what());
    }
    if (!j.contains("experiment")) {
        cfg.validate();
        return cfg;
    }
    const auto& s = j.at("experiment");

    if (s.contains("modes")) {
        cfg.modes.clear();
        std::size_t i = 0;
        for (const auto& mj : s.at("modes")) {
            const std::string field = prefix + "experiment.modes[" + std::to_string(i++) + "]";
            if (!mj.is_string()) throw ConfigError(field, "mode must be a string");
            try {
                cfg.modes.push_back(memory_mode_from_string(mj.get<std::string>()));
            } catch (const ConfigError&) {
                throw ConfigError(field, "unknown memory mode '" + mj.get<std::string>() + "'");
            }
        }
    }
    if (s.contains("prompt")) {
        const std::string p = s.at("prompt").get<std::string>();
        if (p == "clicks") {
            cfg.prompt_kind = PromptKind::clicks;
        } else if (p == "box") {
            cfg.prompt_kind = PromptKind::box;
        } else if (p == "mask") {
            cfg.prompt_kind = PromptKind::mask;
        } else {
            throw ConfigError(prefix + "experiment.prompt",
                              "expected clicks/box/mask, got '" + p + "'");
        }
    }
    const auto read = [&](const char* key, auto& target) {
        if (!s.contains(key)) return;
        try {
            target = s.at(key).get<std::decay_t<decltype(target)>>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(prefix + "experiment." + key, e.what());
        }
    };
    read("clicks", cfg.clicks);
    read("suite", cfg.suite);
    read("num_scenes", cfg.num_scenes);
    read("seed", cfg.seed);
    read("threads", cfg.threads);
    read("reacq_window", cfg.reacq_window);
    read("reacq_j_threshold", cfg.reacq_j_threshold);
    if (s.contains("scene_specs")) {
        for (const auto& pj : s.at("scene_specs")) {
            cfg.scene_specs.emplace_back(pj.get<std::string>());
        }
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return experiment_config_from_string(buf.str(), path.string());
}

namespace {

Prompt build_prompt(const Frame& frame0, const BinaryMask& gt0, PromptKind kind, int clicks,
                    double color_tolerance) {
    switch (kind) {
        case PromptKind::mask:
            return Prompt::from_mask(gt0);
        case PromptKind::box: {
            Box b{gt0.width(), gt0.height(), -1, -1};
            for (int y = 0; y < gt0.height(); ++y) {
                for (int x = 0; x < gt0.width(); ++x) {
                    if (!gt0.at(x, y)) continue;
                    b.x_min = std::min(b.x_min, x);
                    b.y_min = std::min(b.y_min, y);
                    b.x_max = std::max(b.x_max, x);
                    b.y_max = std::max(b.y_max, y);
                }
            }
            return Prompt::from_box(b);
        }
        case PromptKind::clicks: {
            const RefineFn refine = [&](const std::vector<Click>& cs) {
                return SoftMask::from_binary(
                    decode_prompt(frame0, Prompt::from_clicks(cs), color_tolerance));
            };
            const ClickSequence seq = simulate_clicks(gt0, std::nullopt, clicks, refine);
            return Prompt::from_clicks(seq.clicks);
        }
    }
    throw ContractViolation("build_prompt: unknown prompt kind");
}

} // namespace

TrackRunResult run_tracking(const std::vector<Frame>& frames,
                            const std::vector<Masklet>& ground_truth, MemoryMode mode,
                            const EngineConfig& engine, PromptKind prompt_kind, int clicks) {
    if (frames.empty()) throw DegenerateInput("run_tracking: zero-frame session");

    TrackRunResult result;
    const Frame& frame0 = frames.front();
    const PatchEmbedder embedder;

    const auto start = std::chrono::steady_clock::now();
    for (const auto& gt : ground_truth) {
        const BinaryMask* gt0 = gt.mask_at(frame0.index);
        if (!gt0 || !gt0->any_foreground()) {
            result.trace.push_back("object " + std::to_string(gt.instance_id) +
                                   ": not visible at frame 0, skipped");
            continue;
        }
        result.prompted_ids.push_back(gt.instance_id);

        TrackerSession session(engine.memory, mode, engine.propagator, embedder,
                               embedder.grid());
        const Prompt prompt =
            build_prompt(frame0, *gt0, prompt_kind, clicks, engine.propagator.color_tolerance);
        session.begin(frame0, prompt);

        Masklet pred;
        pred.instance_id = gt.instance_id;
        pred.category = gt.category;
        if (session.prompt_mask().any_foreground()) {
            pred.track.emplace(frame0.index, session.prompt_mask());
        }
        for (std::size_t t = 1; t < frames.size(); ++t) {
            const auto [soft, conf] = session.propagate_frame(frames[t]);
            BinaryMask hard = soft.threshold();
            if (hard.any_foreground()) pred.track.emplace(frames[t].index, std::move(hard));
        }
        result.frames_processed += frames.size();

        result.trace.push_back("object " + std::to_string(gt.instance_id) + " mode=" +
                               to_string(mode));
        for (const auto& line : session.trace()) result.trace.push_back("  " + line);
        result.predictions.push_back(std::move(pred));
    }
    result.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

ReacqCount count_reacquisitions(const Masklet& pred, const Masklet& gt, int frame_count,
                                int window, double j_threshold) {
    ReacqCount out;
    bool seen_visible = false;
    for (int t = 0; t < frame_count; ++t) {
        const bool visible = gt.visible_at(t);
        const bool was_visible = t > 0 && gt.visible_at(t - 1);
        if (visible && !was_visible && seen_visible) {
            ++out.events;
            bool hit = false;
            for (int u = t; u < std::min(frame_count, t + window); ++u) {
                const BinaryMask* g = gt.mask_at(u);
                if (!g) break; // gap ended before a hit
                const BinaryMask* p = pred.mask_at(u);
                const BinaryMask empty(g->width(), g->height());
                if (region_j(p ? *p : empty, *g) >= j_threshold) {
                    hit = true;
                    break;
                }
            }
            if (hit) ++out.hits;
        }
        seen_visible = seen_visible || visible;
    }
    return out;
}

namespace {

SceneRunResult run_scene_mode(const SyntheticScene& spec, const GeneratedScene& scene,
                              MemoryMode mode, const ExperimentConfig& cfg) {
    SceneRunResult r;
    r.scene = spec.name;
    r.mode = to_string(mode);

    const TrackRunResult run = run_tracking(scene.frames, scene.masklets, mode, cfg.engine,
                                            cfg.prompt_kind, cfg.clicks);
    r.trace = run.trace;
    r.fps = run.frames_processed > 0 && run.elapsed_seconds > 0.0
                ? static_cast<double>(run.frames_processed) / run.elapsed_seconds
                : 0.0;

    // Evaluate only the prompted masklets, aligned by id.
    std::vector<Masklet> gts;
    for (const auto& gt : scene.masklets) {
        if (std::find(run.prompted_ids.begin(), run.prompted_ids.end(), gt.instance_id) !=
            run.prompted_ids.end()) {
            gts.push_back(gt);
        }
    }
    const double tolerance = static_cast<double>(
        default_boundary_tolerance(spec.width, spec.height));
    const EvalResult eval =
        jf_evaluate(run.predictions, gts, spec.duration_frames, tolerance);
    r.j = eval.j_mean;
    r.f = eval.f_mean;
    r.jf = eval.jf_mean;
    for (const auto& s : eval.per_masklet) {
        r.per_masklet_jf.emplace_back(s.instance_id, (s.j + s.f) / 2.0);
    }

    for (const auto& gt : gts) {
        const auto pred_it =
            std::find_if(run.predictions.begin(), run.predictions.end(),
                         [&](const Masklet& m) { return m.instance_id == gt.instance_id; });
        const ReacqCount c = count_reacquisitions(*pred_it, gt, spec.duration_frames,
                                                  cfg.reacq_window, cfg.reacq_j_threshold);
        r.reacq_events += c.events;
        r.reacq_hits += c.hits;
    }
    return r;
}

std::string subset_of(const std::string& scene_name) {
    const auto pos = scene_name.find_last_of('_');
    return pos == std::string::npos ? scene_name : scene_name.substr(0, pos);
}

} // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    std::vector<SyntheticScene> scenes;
    if (!cfg.scene_specs.empty()) {
        for (const auto& path : cfg.scene_specs) scenes.push_back(load_scene_spec(path));
    } else if (cfg.suite == "reappearance") {
        scenes = build_reappearance_suite(cfg.num_scenes, cfg.seed);
    } else { // static
        for (int i = 0; i < cfg.num_scenes; ++i) {
            SyntheticScene s = static_square_scene(40, cfg.seed + static_cast<std::uint64_t>(i));
            s.name = "static_" + std::to_string(i);
            scenes.push_back(std::move(s));
        }
    }

    struct Task {
        std::size_t scene_idx;
        std::size_t mode_idx;
    };
    std::vector<Task> tasks;
    for (std::size_t s = 0; s < scenes.size(); ++s) {
        for (std::size_t m = 0; m < cfg.modes.size(); ++m) tasks.push_back({s, m});
    }

    ExperimentReport report;
    report.table_decimals = cfg.engine.metrics.table_decimals;
    report.runs.resize(tasks.size());

    const unsigned n_threads = cfg.threads > 0
                                   ? static_cast<unsigned>(cfg.threads)
                                   : std::max(1u, std::thread::hardware_concurrency());
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(tasks.size());
    const auto worker = [&]() {
        // Scenes render per task: memory stays bounded and tasks are
        // independent, which keeps result slots deterministic.
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                const auto& task = tasks[i];
                const GeneratedScene scene = generate_scene(scenes[task.scene_idx]);
                report.runs[i] = run_scene_mode(scenes[task.scene_idx], scene,
                                                cfg.modes[task.mode_idx], cfg);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < n_threads && i < tasks.size(); ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    for (std::size_t m = 0; m < cfg.modes.size(); ++m) {
        ModeSummary s;
        s.mode = to_string(cfg.modes[m]);
        double fps_sum = 0.0;
        int n = 0;
        for (const auto& run : report.runs) {
            if (run.mode != s.mode) continue;
            s.j += run.j;
            s.f += run.f;
            s.jf += run.jf;
            s.reacq_events += run.reacq_events;
            s.reacq_hits += run.reacq_hits;
            fps_sum += run.fps;
            ++n;
        }
        if (n > 0) {
            s.j /= n;
            s.f /= n;
            s.jf /= n;
            s.mean_fps = fps_sum / n;
        }
        s.reacq_rate = s.reacq_events > 0
                           ? static_cast<double>(s.reacq_hits) / s.reacq_events
                           : 0.0;
        report.summaries.push_back(std::move(s));
    }
    return report;
}

std::string ExperimentReport::to_json_string() const {
    ordered_json j;
    j["runs"] = ordered_json::array();
    for (const auto& r : runs) {
        ordered_json rj;
        rj["scene"] = r.scene;
        rj["mode"] = r.mode;
        rj["j"] = r.j;
        rj["f"] = r.f;
        rj["jf"] = r.jf;
        rj["reacq_events"] = r.reacq_events;
        rj["reacq_hits"] = r.reacq_hits;
        rj["per_masklet"] = ordered_json::array();
        for (const auto& [id, jf] : r.per_masklet_jf) {
            rj["per_masklet"].push_back({{"instance_id", id}, {"jf", jf}});
        }
        rj["trace"] = r.trace;
        j["runs"].push_back(std::move(rj));
    }
    j["summaries"] = ordered_json::array();
    for (const auto& s : summaries) {
        j["summaries"].push_back({{"mode", s.mode},
                                  {"j", s.j},
                                  {"f", s.f},
                                  {"jf", s.jf},
                                  {"reacq_events", s.reacq_events},
                                  {"reacq_hits", s.reacq_hits},
                                  {"reacq_rate", s.reacq_rate}});
    }
    return j.dump(2) + "\n";
}

std::string ExperimentReport::to_text_table() const {
    // Per-subset J&F columns (scene-name prefix groups scenes) plus Average.
    std::vector<std::string> subsets;
    std::map<std::string, std::map<std::string, std::pair<double, int>>> cells; // mode -> subset
    std::vector<std::string> modes;
    for (const auto& r : runs) {
        const std::string subset = subset_of(r.scene);
        if (std::find(subsets.begin(), subsets.end(), subset) == subsets.end()) {
            subsets.push_back(subset);
        }
        if (std::find(modes.begin(), modes.end(), r.mode) == modes.end()) {
            modes.push_back(r.mode);
        }
        auto& cell = cells[r.mode][subset];
        cell.first += r.jf;
        cell.second += 1;
    }

    std::ostringstream out;
    out << std::fixed << std::setprecision(table_decimals);
    out << std::left << std::setw(16) << "Mode";
    for (const auto& s : subsets) out << std::right << std::setw(14) << s;
    out << std::right << std::setw(14) << "Average" << std::setw(12) << "ReacqRate"
        << std::setw(10) << "FPS" << '\n';

    for (const auto& mode : modes) {
        out << std::left << std::setw(16) << mode;
        double total = 0.0;
        int count = 0;
        for (const auto& s : subsets) {
            const auto& cell = cells[mode][s];
            const double mean = cell.second > 0 ? cell.first / cell.second : 0.0;
            total += cell.first;
            count += cell.second;
            out << std::right << std::setw(14) << mean;
        }
        out << std::right << std::setw(14) << (count > 0 ? total / count : 0.0);
        const auto summary =
            std::find_if(summaries.begin(), summaries.end(),
                         [&](const ModeSummary& s) { return s.mode == mode; });
        if (summary != summaries.end()) {
            out << std::setw(12) << summary->reacq_rate << std::setw(10) << summary->mean_fps;
        }
        out << '\n';
    }
    return out.str();
}

std::string ExperimentReport::timing_json_string() const {
    ordered_json j;
    j["runs"] = ordered_json::array();
    for (const auto& r : runs) {
        j["runs"].push_back({{"scene", r.scene}, {"mode", r.mode}, {"fps", r.fps}});
    }
    j["mean_fps_by_mode"] = ordered_json::object();
    for (const auto& s : summaries) j["mean_fps_by_mode"][s.mode] = s.mean_fps;
    return j.dump(2) + "\n";
}

} // namespace divetrack
