#pragma once
// Streaming tracker for one object: a prompt decoder for frame 0, and a
// memory-read propagator that labels each patch of the current frame by a
// similarity-weighted vote over the patches of every memory entry, then
// sharpens the gated patches with a color model fit on the prompt frame.
// Every prediction feeds the memory bank, closing the loop.

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "divetrack/embedder.hpp"
#include "divetrack/mask.hpp"
#include "divetrack/memory.hpp"
#include "divetrack/types.hpp"

namespace divetrack {

enum class MemoryMode {
    divemem,       // l0 + diverse long-term + short-term
    greedy_recent, // l0 + short-term (no long-term reads)
    short_only     // short-term only
};

MemoryMode memory_mode_from_string(const std::string& s);
std::string to_string(MemoryMode m);

struct PropagatorParams {
    int top_k = 6;                 // matches per patch entering the vote
    double vote_sharpness = 60.0;  // exp weight on cosine similarity
    double active_threshold = 0.5; // patch vote gate
    double color_sharpness = 60.0; // sigmoid slope on the color model
    double color_tolerance = 0.14; // flood-fill radius for prompt decoding
    bool dilate_active = true;     // grow the active patch set by one patch

    void validate() const;
};

// Turns a first-frame prompt into a hard mask using color flood fill (clicks),
// color-gated box interiors, or the given mask directly.
BinaryMask decode_prompt(const Frame& frame, const Prompt& prompt, double color_tolerance);

class TrackerSession {
public:
    TrackerSession(MemoryConfig memory_cfg, MemoryMode mode, PropagatorParams params,
                   FrameEmbedder embedder, int grid,
                   std::vector<std::vector<double>> temporal_embeddings = {});

    // Prompt at the first frame of the session; seeds l0.
    void begin(const Frame& frame0, const Prompt& prompt);
    bool started() const noexcept { return started_; }

    // Predict the mask for the next frame and feed the result to memory.
    std::pair<SoftMask, double> propagate_frame(const Frame& frame);

    const MemoryBank& bank() const noexcept { return bank_; }
    MemoryMode mode() const noexcept { return mode_; }
    const std::vector<std::string>& trace() const noexcept { return trace_; }
    const BinaryMask& prompt_mask() const;

private:
    struct StoredGrid {
        PatchGrid grid;
        std::vector<double> fg_fraction; // per patch, from the entry's mask
    };

    std::vector<const MemoryEntry*> context_for_mode() const;
    void store_entry_grid(int frame_index, PatchGrid grid, const SoftMask& mask);
    void prune_grids();

    MemoryMode mode_;
    PropagatorParams params_;
    FrameEmbedder embedder_;
    int grid_;
    std::vector<std::vector<double>> temporal_embeddings_;
    MemoryBank bank_;
    std::unordered_map<int, StoredGrid> grids_;
    std::vector<std::string> trace_;
    bool started_ = false;

    // Color model fit on the prompt frame.
    double fg_color_[3] = {0.0, 0.0, 0.0};
    double bg_color_[3] = {0.0, 0.0, 0.0};
    std::vector<BinaryMask> prompt_mask_storage_;
};

} // namespace divetrack
