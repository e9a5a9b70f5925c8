#include "divetrack/sampler.hpp"

#include <algorithm>

#include "divetrack/rng.hpp"

namespace divetrack {

SampleMode sample_mode_from_string(const std::string& s) {
    if (s == "divemem") return SampleMode::divemem;
    if (s == "vanilla") return SampleMode::vanilla;
    if (s == "mixed_1_1") return SampleMode::mixed_1_1;
    throw ConfigError("sampler.mode", "unknown mode '" + s + "'");
}

std::string to_string(SampleMode m) {
    switch (m) {
        case SampleMode::divemem: return "divemem";
        case SampleMode::vanilla: return "vanilla";
        case SampleMode::mixed_1_1: return "mixed_1_1";
    }
    return "divemem";
}

void SamplerConfig::validate() const {
    if (frames_per_clip != 8) {
        throw ContractViolation("sampler: frames_per_clip must be 8 (3 scattered + 5 consecutive)");
    }
    if (image_ratio < 1 || video_ratio < 1) {
        throw ContractViolation("sampler: image/video ratio parts must be >= 1");
    }
}

TrainingSampler::TrainingSampler(SamplerConfig cfg) : cfg_(cfg) {
    cfg_.validate();
}

namespace {

constexpr int kRunLength = 5;

TrainingClip sample_divemem(int video_length, std::mt19937_64& rng) {
    TrainingClip clip;
    clip.mode_used = SampleMode::divemem;

    const int run_start = uniform_int(rng, 0, video_length - kRunLength);
    const auto in_run = [&](int i) { return i >= run_start && i < run_start + kRunLength; };

    // Three distinct frames scattered over the whole video, outside the run.
    std::vector<int> scattered;
    while (scattered.size() < 3) {
        const int draw = uniform_int(rng, 0, video_length - 1);
        if (in_run(draw)) continue;
        if (std::find(scattered.begin(), scattered.end(), draw) != scattered.end()) continue;
        scattered.push_back(draw);
    }
    const int conditional = *std::min_element(scattered.begin(), scattered.end());

    for (const int idx : scattered) {
        clip.frames.push_back({idx, idx == conditional ? FrameRole::conditional
                                                       : FrameRole::long_term});
    }
    for (int i = 0; i < kRunLength; ++i) {
        clip.frames.push_back({run_start + i, FrameRole::recent});
    }
    std::sort(clip.frames.begin(), clip.frames.end(),
              [](const SampledFrame& a, const SampledFrame& b) { return a.index < b.index; });
    return clip;
}

TrainingClip sample_vanilla(int video_length, std::mt19937_64& rng) {
    TrainingClip clip;
    clip.mode_used = SampleMode::vanilla;
    const int start = uniform_int(rng, 0, video_length - 8);
    for (int i = 0; i < 8; ++i) {
        clip.frames.push_back(
            {start + i, i == 0 ? FrameRole::conditional : FrameRole::recent});
    }
    return clip;
}

} // namespace

TrainingClip TrainingSampler::sample(int video_length, std::mt19937_64& rng) {
    if (video_length < cfg_.frames_per_clip) {
        throw DegenerateInput("sampler: video length " + std::to_string(video_length) +
                              " shorter than a clip");
    }
    SampleMode mode = cfg_.mode;
    if (mode == SampleMode::mixed_1_1) {
        mode = (clip_count_ % 2 == 0) ? SampleMode::divemem : SampleMode::vanilla;
    }
    ++clip_count_;
    return mode == SampleMode::divemem ? sample_divemem(video_length, rng)
                                       : sample_vanilla(video_length, rng);
}

} // namespace divetrack
