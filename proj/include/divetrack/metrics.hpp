#pragma once
// Evaluation protocol: region accuracy J, boundary accuracy F, their mean,
// click simulation for prompting, and throughput measurement. Scores are on
// the 0-100 scale.

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

#include "divetrack/core_ops.hpp"
#include "divetrack/mask.hpp"
#include "divetrack/masklet.hpp"
#include "divetrack/types.hpp"

namespace divetrack {

// 100 * IoU.
double region_j(const BinaryMask& pred, const BinaryMask& gt);

// Boundary F-measure: precision/recall of 1-pixel-wide boundaries matched
// within `tolerance_px` (Euclidean). Both boundaries empty scores 100 when
// the masks are identical, otherwise 0.
double boundary_f(const BinaryMask& pred, const BinaryMask& gt, double tolerance_px);

// 0.8% of the image diagonal, rounded up.
int default_boundary_tolerance(int width, int height);

struct MaskletScore {
    int instance_id = 0;
    double j = 0.0;
    double f = 0.0;
};

struct EvalResult {
    double j_mean = 0.0;
    double f_mean = 0.0;
    double jf_mean = 0.0;
    std::vector<MaskletScore> per_masklet;
};

// Per-frame J and F over all video frames (an absent track entry counts as an
// empty mask on either side), averaged per masklet, then unweighted means
// across masklets. Prediction and ground-truth masklets align by instance id;
// unmatched ids on either side raise a ContractViolation listing them.
EvalResult jf_evaluate(const std::vector<Masklet>& pred, const std::vector<Masklet>& gt,
                       int video_frame_count, double tolerance_px);

struct ClickSequence {
    std::vector<Click> clicks;
};

// Re-runs segmentation with the accumulated clicks; used when a real decoder
// drives the refinement loop.
using RefineFn = std::function<SoftMask(const std::vector<Click>&)>;

// Click 1 lands at the ground-truth mask center (deepest foreground pixel).
// Clicks 2..n land at the center of the largest connected error region of the
// current prediction: positive on false negatives, negative on false
// positives, recomputing the error map after every simulated refinement.
// Without a refine function the clicked region is assumed resolved.
ClickSequence simulate_clicks(const BinaryMask& gt, const std::optional<SoftMask>& current_pred,
                              int n, const RefineFn& refine = nullptr);

// frames / elapsed. Throws DegenerateInput on a zero-frame session.
double frames_per_second(std::size_t frames, double elapsed_seconds);

// Wall-clock session timer; excludes everything before start().
class FpsTimer {
public:
    void start() { start_ = std::chrono::steady_clock::now(); }
    void add_frames(std::size_t n) { frames_ += n; }
    std::size_t frames() const noexcept { return frames_; }
    double elapsed_seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    double fps() const { return frames_per_second(frames_, elapsed_seconds()); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
    std::size_t frames_ = 0;
};

} // namespace divetrack
