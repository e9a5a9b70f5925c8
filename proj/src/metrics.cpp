#include "divetrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

namespace divetrack {

double region_j(const BinaryMask& pred, const BinaryMask& gt) {
    return 100.0 * mask_iou(pred, gt);
}

int default_boundary_tolerance(int width, int height) {
    const double diag = std::sqrt(static_cast<double>(width) * width +
                                  static_cast<double>(height) * height);
    return static_cast<int>(std::ceil(0.008 * diag));
}

double boundary_f(const BinaryMask& pred, const BinaryMask& gt, double tolerance_px) {
    if (!pred.same_shape(gt)) throw ContractViolation("boundary_f: mask dimensions differ");
    if (tolerance_px < 0.0) throw ContractViolation("boundary_f: tolerance must be >= 0");

    const BinaryMask pb = boundary_pixels(pred);
    const BinaryMask gb = boundary_pixels(gt);
    const std::size_t n_pb = pb.foreground_count();
    const std::size_t n_gb = gb.foreground_count();

    if (n_pb == 0 && n_gb == 0) return pred == gt ? 100.0 : 0.0;
    if (n_pb == 0 || n_gb == 0) return 0.0;

    const double tol_sq = tolerance_px * tolerance_px;
    const auto dist_to_gb = squared_distance_to_sources(gb);
    const auto dist_to_pb = squared_distance_to_sources(pb);

    const int w = pred.width(), h = pred.height();
    std::size_t pred_hits = 0, gt_hits = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            if (pb.at(x, y) && dist_to_gb[i] <= tol_sq) ++pred_hits;
            if (gb.at(x, y) && dist_to_pb[i] <= tol_sq) ++gt_hits;
        }
    }
    const double precision = static_cast<double>(pred_hits) / static_cast<double>(n_pb);
    const double recall = static_cast<double>(gt_hits) / static_cast<double>(n_gb);
    if (precision + recall == 0.0) return 0.0;
    return 100.0 * 2.0 * precision * recall / (precision + recall);
}

EvalResult jf_evaluate(const std::vector<Masklet>& pred, const std::vector<Masklet>& gt,
                       int video_frame_count, double tolerance_px) {
    if (video_frame_count <= 0) {
        throw ContractViolation("jf_evaluate: video frame count must be positive");
    }

    std::map<int, const Masklet*> pred_by_id;
    for (const auto& m : pred) pred_by_id.emplace(m.instance_id, &m);
    std::set<int> gt_ids;
    for (const auto& m : gt) gt_ids.insert(m.instance_id);

    std::string unmatched;
    for (const auto& m : gt) {
        if (!pred_by_id.count(m.instance_id)) {
            unmatched += " gt:" + std::to_string(m.instance_id);
        }
    }
    for (const auto& m : pred) {
        if (!gt_ids.count(m.instance_id)) {
            unmatched += " pred:" + std::to_string(m.instance_id);
        }
    }
    if (!unmatched.empty()) {
        throw ContractViolation("jf_evaluate: unmatched instance ids:" + unmatched);
    }
    if (gt.empty()) throw DegenerateInput("jf_evaluate: no masklets to evaluate");

    // Resolution for the empty stand-in mask when a frame is absent on both sides.
    int w = 1, h = 1;
    for (const auto& m : gt) {
        if (!m.track.empty()) {
            w = m.track.begin()->second.width();
            h = m.track.begin()->second.height();
            break;
        }
    }

    EvalResult result;
    for (const auto& g : gt) {
        const Masklet& p = *pred_by_id.at(g.instance_id);
        double j_sum = 0.0, f_sum = 0.0;
        for (int t = 0; t < video_frame_count; ++t) {
            const BinaryMask* gm = g.mask_at(t);
            const BinaryMask* pm = p.mask_at(t);
            const BinaryMask empty(w, h);
            const BinaryMask& gref = gm ? *gm : empty;
            const BinaryMask& pref = pm ? *pm : empty;
            j_sum += region_j(pref, gref);
            f_sum += boundary_f(pref, gref, tolerance_px);
        }
        MaskletScore score;
        score.instance_id = g.instance_id;
        score.j = j_sum / static_cast<double>(video_frame_count);
        score.f = f_sum / static_cast<double>(video_frame_count);
        result.per_masklet.push_back(score);
    }

    double j_total = 0.0, f_total = 0.0;
    for (const auto& s : result.per_masklet) {
        j_total += s.j;
        f_total += s.f;
    }
    const double n = static_cast<double>(result.per_masklet.size());
    result.j_mean = j_total / n;
    result.f_mean = f_total / n;
    result.jf_mean = (result.j_mean + result.f_mean) / 2.0;
    return result;
}

namespace {

// Largest component by pixel count; ties go to the earliest row-major pixel.
const Component* largest_component(const std::vector<Component>& comps) {
    const Component* best = nullptr;
    for (const auto& c : comps) {
        if (!best || c.size() > best->size()) best = &c;
    }
    return best;
}

} // namespace

ClickSequence simulate_clicks(const BinaryMask& gt, const std::optional<SoftMask>& current_pred,
                              int n, const RefineFn& refine) {
    if (n < 1) throw ContractViolation("simulate_clicks: n must be >= 1");
    if (!gt.any_foreground()) throw DegenerateInput("simulate_clicks: empty ground truth");
    if (current_pred &&
        (current_pred->width() != gt.width() || current_pred->height() != gt.height())) {
        throw ContractViolation("simulate_clicks: prediction resolution differs");
    }

    ClickSequence seq;
    const Pixel center = distance_transform_argmax(gt);
    seq.clicks.push_back(Click{center.x, center.y, ClickPolarity::positive});

    BinaryMask pred = current_pred ? current_pred->threshold() : BinaryMask(gt.width(), gt.height());
    if (refine) {
        pred = refine(seq.clicks).threshold();
    } else {
        // Simulated resolution: the clicked ground-truth component is
        // considered segmented after click 1.
        for (const auto& comp : connected_components(gt)) {
            bool contains = false;
            for (const auto& p : comp.pixels) {
                if (p.x == center.x && p.y == center.y) {
                    contains = true;
                    break;
                }
            }
            if (contains) {
                for (const auto& p : comp.pixels) pred.set(p.x, p.y, true);
                break;
            }
        }
    }

    for (int i = 1; i < n; ++i) {
        BinaryMask false_neg(gt.width(), gt.height());
        BinaryMask false_pos(gt.width(), gt.height());
        bool any_error = false;
        for (int y = 0; y < gt.height(); ++y) {
            for (int x = 0; x < gt.width(); ++x) {
                const bool g = gt.at(x, y), p = pred.at(x, y);
                if (g && !p) {
                    false_neg.set(x, y, true);
                    any_error = true;
                } else if (!g && p) {
                    false_pos.set(x, y, true);
                    any_error = true;
                }
            }
        }
        if (!any_error) break;

        const auto fn_comps = connected_components(false_neg);
        const auto fp_comps = connected_components(false_pos);
        const Component* fn_best = largest_component(fn_comps);
        const Component* fp_best = largest_component(fp_comps);

        // Pick the bigger of the two error kinds; ties prefer the region whose
        // first pixel comes earliest in scan order.
        bool use_fn;
        if (!fp_best) {
            use_fn = true;
        } else if (!fn_best) {
            use_fn = false;
        } else if (fn_best->size() != fp_best->size()) {
            use_fn = fn_best->size() > fp_best->size();
        } else {
            const Pixel a = fn_best->pixels.front(), b = fp_best->pixels.front();
            use_fn = a.y != b.y ? a.y < b.y : a.x <= b.x;
        }

        const Component& region = use_fn ? *fn_best : *fp_best;
        const BinaryMask region_mask = region.to_mask(gt.width(), gt.height());
        const Pixel at = distance_transform_argmax(region_mask);
        seq.clicks.push_back(
            Click{at.x, at.y, use_fn ? ClickPolarity::positive : ClickPolarity::negative});

        if (refine) {
            pred = refine(seq.clicks).threshold();
        } else {
            for (const auto& p : region.pixels) pred.set(p.x, p.y, use_fn);
        }
    }
    return seq;
}

double frames_per_second(std::size_t frames, double elapsed_seconds) {
    if (frames == 0) throw DegenerateInput("fps: zero-frame session");
    if (elapsed_seconds <= 0.0) {
        throw DegenerateInput("fps: non-positive elapsed time");
    }
    return static_cast<double>(frames) / elapsed_seconds;
}

} // namespace divetrack
