#pragma once
// Training-time clip samplers. The hybrid mode draws three frames scattered
// across the entire video (one conditional, two with long-term roles) plus a
// run of five consecutive frames; the vanilla mode draws eight consecutive
// frames. Mixed mode alternates the two deterministically, 1:1.

#include <random>
#include <string>
#include <vector>

#include "divetrack/errors.hpp"

namespace divetrack {

enum class SampleMode { divemem, vanilla, mixed_1_1 };

SampleMode sample_mode_from_string(const std::string& s);
std::string to_string(SampleMode m);

struct SamplerConfig {
    SampleMode mode = SampleMode::divemem;
    int frames_per_clip = 8;
    int image_ratio = 1; // mixed image-video training ratio
    int video_ratio = 4;

    void validate() const;
};

enum class FrameRole { conditional, long_term, recent };

struct SampledFrame {
    int index = 0;
    FrameRole role = FrameRole::recent;

    bool operator==(const SampledFrame&) const = default;
};

struct TrainingClip {
    SampleMode mode_used = SampleMode::vanilla;
    std::vector<SampledFrame> frames; // sorted by index
};

class TrainingSampler {
public:
    explicit TrainingSampler(SamplerConfig cfg);

    // Throws DegenerateInput when the video is shorter than one clip.
    TrainingClip sample(int video_length, std::mt19937_64& rng);

    std::uint64_t clips_sampled() const noexcept { return clip_count_; }

private:
    SamplerConfig cfg_;
    std::uint64_t clip_count_ = 0;
};

} // namespace divetrack
