#pragma once
// Config-driven experiment runner: generate scenes, prompt once at frame 0,
// track under each memory mode, evaluate J&F and re-acquisition, and emit a
// deterministic machine-readable report plus aligned text tables. Wall-clock
// throughput goes to a separate timing document so the main report is
// byte-identical across runs with the same seed.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "divetrack/config.hpp"
#include "divetrack/masklet.hpp"
#include "divetrack/scene.hpp"
#include "divetrack/tracker.hpp"

namespace divetrack {

struct ExperimentConfig {
    EngineConfig engine;
    std::vector<MemoryMode> modes{MemoryMode::divemem, MemoryMode::greedy_recent};
    PromptKind prompt_kind = PromptKind::clicks;
    int clicks = 3;
    std::string suite = "reappearance";
    int num_scenes = 20;
    std::uint64_t seed = 7;
    std::vector<std::filesystem::path> scene_specs; // overrides the suite when set
    int threads = 0;                                // 0 = hardware concurrency
    int reacq_window = 10;
    double reacq_j_threshold = 50.0;

    void validate() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
ExperimentConfig experiment_config_from_string(const std::string& text,
                                               const std::string& where = "");

// One full tracking pass over a video: prompt per ground-truth object at
// frame 0, then streaming propagation.
struct TrackRunResult {
    std::vector<Masklet> predictions;
    std::vector<int> prompted_ids;    // instance ids visible at frame 0
    std::vector<std::string> trace;
    std::size_t frames_processed = 0;
    double elapsed_seconds = 0.0;
};

TrackRunResult run_tracking(const std::vector<Frame>& frames,
                            const std::vector<Masklet>& ground_truth, MemoryMode mode,
                            const EngineConfig& engine, PromptKind prompt_kind, int clicks);

struct SceneRunResult {
    std::string scene;
    std::string mode;
    double j = 0.0, f = 0.0, jf = 0.0;
    int reacq_events = 0;
    int reacq_hits = 0;
    std::vector<std::pair<int, double>> per_masklet_jf; // (instance id, J&F)
    std::vector<std::string> trace;
    double fps = 0.0; // excluded from the deterministic report
};

struct ModeSummary {
    std::string mode;
    double j = 0.0, f = 0.0, jf = 0.0;
    int reacq_events = 0;
    int reacq_hits = 0;
    double reacq_rate = 0.0;
    double mean_fps = 0.0;
};

struct ExperimentReport {
    std::vector<SceneRunResult> runs;
    std::vector<ModeSummary> summaries;
    int table_decimals = 2;

    // Deterministic: scores, re-acquisition and traces; no wall-clock data.
    std::string to_json_string() const;
    // Per-subset J&F columns plus Average, one row per mode; includes FPS.
    std::string to_text_table() const;
    // Wall-clock sidecar (FPS per run).
    std::string timing_json_string() const;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Re-acquisition bookkeeping shared by the runner and its tests: an event is
// a ground-truth reappearance (visible at t, absent at t-1, after an earlier
// visible frame); a hit reaches J >= threshold within `window` frames.
struct ReacqCount {
    int events = 0;
    int hits = 0;
};

ReacqCount count_reacquisitions(const Masklet& pred, const Masklet& gt, int frame_count,
                                int window, double j_threshold);

} // namespace divetrack
