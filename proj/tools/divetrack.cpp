// Command-line front end.
//
//   divetrack generate    scene spec -> frames + ground-truth masklets
//   divetrack track       run a tracking session over a stored scene
//   divetrack eval        J&F of stored predictions against ground truth
//   divetrack experiment  full config-driven run with reports
//   divetrack validate    manifest structural checks (optionally mask files)
//   divetrack stats       dataset statistics table
//
// Exit codes: 0 success, 1 validation failure, 2 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "divetrack/experiment.hpp"
#include "divetrack/manifest.hpp"
#include "divetrack/metrics.hpp"
#include "divetrack/video_io.hpp"

namespace fs = std::filesystem;
using namespace divetrack;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int cmd_generate(const fs::path& spec_path, const fs::path& out_dir) {
    const SyntheticScene spec = load_scene_spec(spec_path);
    const GeneratedScene scene = generate_scene(spec);
    save_scene_dir(out_dir, spec, scene);
    std::cout << "wrote " << scene.frames.size() << " frames and " << scene.masklets.size()
              << " masklets to " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_track(const fs::path& scene_dir, const fs::path& out_dir, const std::string& mode_name,
              const fs::path& config_path, const std::string& prompt_name, int clicks) {
    EngineConfig engine;
    if (!config_path.empty()) engine = load_engine_config(config_path);

    const MemoryMode mode = memory_mode_from_string(mode_name);
    PromptKind prompt_kind = PromptKind::clicks;
    if (prompt_name == "box") {
        prompt_kind = PromptKind::box;
    } else if (prompt_name == "mask") {
        prompt_kind = PromptKind::mask;
    } else if (prompt_name != "clicks") {
        throw ConfigError("prompt", "expected clicks/box/mask, got '" + prompt_name + "'");
    }

    const LoadedVideo video = load_scene_dir(scene_dir);
    const TrackRunResult run =
        run_tracking(video.frames, video.masklets, mode, engine, prompt_kind, clicks);
    save_predictions(out_dir, video.record, run.predictions, run.trace);

    std::cout << "tracked " << run.prompted_ids.size() << " objects over "
              << video.frames.size() << " frames ("
              << frames_per_second(run.frames_processed, run.elapsed_seconds) << " fps)\n";
    std::cout << "predictions written to " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_eval(const fs::path& gt_dir, const fs::path& pred_dir, int decimals) {
    const DatasetManifest gt_manifest = load_manifest(gt_dir / "manifest.json");
    const DatasetManifest pred_manifest = load_manifest(pred_dir / "manifest.json");
    if (gt_manifest.videos.size() != 1) {
        throw CorruptData("eval expects a single-video ground-truth manifest");
    }
    const VideoRecord& video = gt_manifest.videos.front();
    const auto gts = load_masklets(gt_manifest, video.id, gt_dir);
    auto preds = load_masklets(pred_manifest, video.id, pred_dir);

    // Objects never prompted (absent at frame 0) have no prediction record.
    std::vector<Masklet> aligned_gt;
    for (const auto& g : gts) {
        const bool has_pred =
            std::any_of(preds.begin(), preds.end(),
                        [&](const Masklet& p) { return p.instance_id == g.instance_id; });
        if (has_pred) aligned_gt.push_back(g);
    }

    const double tolerance =
        static_cast<double>(default_boundary_tolerance(video.width, video.height));
    const EvalResult result =
        jf_evaluate(preds, aligned_gt, video.frame_count, tolerance);

    std::cout << std::fixed << std::setprecision(decimals);
    std::cout << "J " << result.j_mean << "  F " << result.f_mean << "  J&F "
              << result.jf_mean << "\n";
    for (const auto& s : result.per_masklet) {
        std::cout << "  masklet " << s.instance_id << ": J " << s.j << "  F " << s.f
                  << "  J&F " << (s.j + s.f) / 2.0 << "\n";
    }
    return kExitOk;
}

int cmd_experiment(const fs::path& config_path, const fs::path& out_dir) {
    const ExperimentConfig cfg = load_experiment_config(config_path);
    const ExperimentReport report = run_experiment(cfg);

    fs::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "report.json");
        if (!out) throw IoError("cannot write report.json");
        out << report.to_json_string();
    }
    {
        std::ofstream out(out_dir / "timing.json");
        if (!out) throw IoError("cannot write timing.json");
        out << report.timing_json_string();
    }
    const std::string table = report.to_text_table();
    {
        std::ofstream out(out_dir / "report.txt");
        if (!out) throw IoError("cannot write report.txt");
        out << table;
    }
    std::cout << table;
    std::cout << "reports written to " << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_validate(const fs::path& manifest_path, bool check_files) {
    const DatasetManifest manifest = load_manifest(manifest_path);
    auto violations = validate_manifest(manifest);
    if (check_files) {
        const auto extra = validate_mask_files(manifest, manifest_path.parent_path());
        violations.insert(violations.end(), extra.begin(), extra.end());
    }
    if (violations.empty()) {
        std::cout << "manifest OK: " << manifest.videos.size() << " videos, "
                  << manifest.masklets.size() << " masklets\n";
        return kExitOk;
    }
    for (const auto& v : violations) std::cout << v.to_string() << "\n";
    std::cout << violations.size() << " violation(s)\n";
    return kExitValidation;
}

int cmd_stats(const fs::path& manifest_path, const fs::path& groups_path, int decimals) {
    const DatasetManifest manifest = load_manifest(manifest_path);
    CategoryGroupMap groups;
    if (!groups_path.empty()) {
        std::ifstream in(groups_path);
        if (!in) throw IoError("cannot open " + groups_path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw CorruptData("group map: invalid JSON: " + std::string(e.what()));
        }
        for (const auto& [category, group] : j.items()) {
            groups.groups[category] = group.get<std::string>();
        }
    }
    std::cout << format_stats_table(dataset_stats(manifest, groups), decimals);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming video object tracker with a diversity-selected long-term memory"};
    app.require_subcommand(1);

    std::string spec_path, scene_dir, out_dir, mode = "divemem", config_path, prompt = "clicks";
    std::string gt_dir, pred_dir, manifest_path, groups_path;
    int clicks = 3, decimals = 2;
    bool check_files = false;

    auto* generate = app.add_subcommand("generate", "Render a scene spec to disk");
    generate->add_option("--spec", spec_path, "Scene spec JSON")->required();
    generate->add_option("--out", out_dir, "Output directory")->required();

    auto* track = app.add_subcommand("track", "Run a tracking session over a stored scene");
    track->add_option("--scene", scene_dir, "Scene directory (from generate)")->required();
    track->add_option("--out", out_dir, "Prediction output directory")->required();
    track->add_option("--mode", mode, "Memory mode: divemem/greedy_recent/short_only");
    track->add_option("--config", config_path, "Engine config JSON");
    track->add_option("--prompt", prompt, "Prompt type: clicks/box/mask");
    track->add_option("--clicks", clicks, "Click count for click prompts");

    auto* eval = app.add_subcommand("eval", "J&F of stored predictions against ground truth");
    eval->add_option("--gt", gt_dir, "Ground-truth scene directory")->required();
    eval->add_option("--pred", pred_dir, "Prediction directory")->required();
    eval->add_option("--decimals", decimals, "Decimals in printed scores");

    auto* experiment = app.add_subcommand("experiment", "Full config-driven experiment");
    experiment->add_option("--config", config_path, "Experiment config JSON")->required();
    experiment->add_option("--out", out_dir, "Report output directory")->required();

    auto* validate = app.add_subcommand("validate", "Validate a dataset manifest");
    validate->add_option("--manifest", manifest_path, "Manifest JSON")->required();
    validate->add_flag("--check-files", check_files, "Also read and check RLE mask files");

    auto* stats = app.add_subcommand("stats", "Dataset statistics table");
    stats->add_option("--manifest", manifest_path, "Manifest JSON")->required();
    stats->add_option("--groups", groups_path, "Category-to-group JSON map");
    stats->add_option("--decimals", decimals, "Decimals for the average duration");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return cmd_generate(spec_path, out_dir);
        if (track->parsed()) {
            return cmd_track(scene_dir, out_dir, mode, config_path, prompt, clicks);
        }
        if (eval->parsed()) return cmd_eval(gt_dir, pred_dir, decimals);
        if (experiment->parsed()) return cmd_experiment(config_path, out_dir);
        if (validate->parsed()) return cmd_validate(manifest_path, check_files);
        if (stats->parsed()) return cmd_stats(manifest_path, groups_path, decimals);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ContractViolation& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const CorruptData& e) {
        std::cerr << "corrupt data: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}
