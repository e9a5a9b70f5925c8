#include "divetrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>

namespace divetrack {

MemoryMode memory_mode_from_string(const std::string& s) {
    if (s == "divemem") return MemoryMode::divemem;
    if (s == "greedy_recent") return MemoryMode::greedy_recent;
    if (s == "short_only") return MemoryMode::short_only;
    throw ConfigError("memory_mode", "unknown mode '" + s + "'");
}

std::string to_string(MemoryMode m) {
    switch (m) {
        case MemoryMode::divemem: return "divemem";
        case MemoryMode::greedy_recent: return "greedy_recent";
        case MemoryMode::short_only: return "short_only";
    }
    return "divemem";
}

void PropagatorParams::validate() const {
    if (top_k < 1) throw ContractViolation("propagator: top_k must be >= 1");
    if (vote_sharpness < 0.0 || color_sharpness < 0.0) {
        throw ContractViolation("propagator: sharpness must be >= 0");
    }
    if (!(active_threshold > 0.0 && active_threshold < 1.0)) {
        throw ContractViolation("propagator: active_threshold must be in (0,1)");
    }
    if (color_tolerance <= 0.0) {
        throw ContractViolation("propagator: color_tolerance must be positive");
    }
}

namespace {

double color_distance_sq(const Frame& f, int x, int y, const double ref[3]) {
    double d = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double v = f.channel(x, y, c) / 255.0 - ref[c];
        d += v * v;
    }
    return d;
}

BinaryMask flood_fill(const Frame& frame, int seed_x, int seed_y, double tolerance) {
    const int w = frame.width, h = frame.height;
    double seed_color[3];
    for (int c = 0; c < 3; ++c) seed_color[c] = frame.channel(seed_x, seed_y, c) / 255.0;
    const double tol_sq = tolerance * tolerance;

    BinaryMask region(w, h);
    std::deque<std::pair<int, int>> queue{{seed_x, seed_y}};
    region.set(seed_x, seed_y, true);
    while (!queue.empty()) {
        const auto [x, y] = queue.front();
        queue.pop_front();
        constexpr int dx[4] = {0, 0, -1, 1};
        constexpr int dy[4] = {-1, 1, 0, 0};
        for (int k = 0; k < 4; ++k) {
            const int nx = x + dx[k], ny = y + dy[k];
            if (nx < 0 || nx >= w || ny < 0 || ny >= h || region.at(nx, ny)) continue;
            if (color_distance_sq(frame, nx, ny, seed_color) > tol_sq) continue;
            region.set(nx, ny, true);
            queue.emplace_back(nx, ny);
        }
    }
    return region;
}

} // namespace

BinaryMask decode_prompt(const Frame& frame, const Prompt& prompt, double color_tolerance) {
    prompt.check_bounds(frame.width, frame.height);
    switch (prompt.kind()) {
        case PromptKind::mask:
            return prompt.mask();
        case PromptKind::clicks: {
            BinaryMask out(frame.width, frame.height);
            for (const auto& click : prompt.clicks()) {
                if (click.polarity != ClickPolarity::positive) continue;
                const BinaryMask region = flood_fill(frame, click.x, click.y, color_tolerance);
                for (int y = 0; y < frame.height; ++y) {
                    for (int x = 0; x < frame.width; ++x) {
                        if (region.at(x, y)) out.set(x, y, true);
                    }
                }
            }
            for (const auto& click : prompt.clicks()) {
                if (click.polarity != ClickPolarity::negative) continue;
                const BinaryMask region = flood_fill(frame, click.x, click.y, color_tolerance);
                for (int y = 0; y < frame.height; ++y) {
                    for (int x = 0; x < frame.width; ++x) {
                        if (region.at(x, y)) out.set(x, y, false);
                    }
                }
            }
            return out;
        }
        case PromptKind::box: {
            const Box& b = prompt.box();
            const int cx = (b.x_min + b.x_max) / 2;
            const int cy = (b.y_min + b.y_max) / 2;
            double ref[3];
            for (int c = 0; c < 3; ++c) ref[c] = frame.channel(cx, cy, c) / 255.0;
            const double tol_sq = color_tolerance * color_tolerance;
            BinaryMask out(frame.width, frame.height);
            for (int y = b.y_min; y <= b.y_max; ++y) {
                for (int x = b.x_min; x <= b.x_max; ++x) {
                    if (color_distance_sq(frame, x, y, ref) <= tol_sq) out.set(x, y, true);
                }
            }
            return out;
        }
    }
    throw ContractViolation("decode_prompt: unknown prompt kind");
}

TrackerSession::TrackerSession(MemoryConfig memory_cfg, MemoryMode mode, PropagatorParams params,
                               FrameEmbedder embedder, int grid,
                               std::vector<std::vector<double>> temporal_embeddings)
    : mode_(mode),
      params_(params),
      embedder_(std::move(embedder)),
      grid_(grid),
      temporal_embeddings_(std::move(temporal_embeddings)),
      bank_(memory_cfg) {
    params_.validate();
    if (grid_ < 1) throw ContractViolation("tracker: patch grid must be >= 1");
    if (!embedder_) throw ContractViolation("tracker: embedder must be callable");
}

const BinaryMask& TrackerSession::prompt_mask() const {
    if (prompt_mask_storage_.empty()) throw ContractViolation("session has no prompt yet");
    return prompt_mask_storage_.front();
}

void TrackerSession::store_entry_grid(int frame_index, PatchGrid grid, const SoftMask& mask) {
    StoredGrid stored;
    stored.fg_fraction.assign(static_cast<std::size_t>(grid.grid) * grid.grid, 0.0);
    const int w = mask.width(), h = mask.height();
    for (int gy = 0; gy < grid.grid; ++gy) {
        const int y0 = gy * h / grid.grid, y1 = (gy + 1) * h / grid.grid;
        for (int gx = 0; gx < grid.grid; ++gx) {
            const int x0 = gx * w / grid.grid, x1 = (gx + 1) * w / grid.grid;
            double sum = 0.0;
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) sum += mask.at(x, y);
            }
            stored.fg_fraction[static_cast<std::size_t>(gy) * grid.grid + gx] =
                sum / (static_cast<double>(x1 - x0) * (y1 - y0));
        }
    }
    stored.grid = std::move(grid);
    grids_[frame_index] = std::move(stored);
}

void TrackerSession::prune_grids() {
    std::set<int> live;
    if (bank_.initial()) live.insert(bank_.initial()->frame_index);
    for (const auto& e : bank_.long_term()) live.insert(e.frame_index);
    for (const auto& e : bank_.short_term()) live.insert(e.frame_index);
    for (const auto& e : bank_.buffer()) live.insert(e.frame_index);
    for (auto it = grids_.begin(); it != grids_.end();) {
        it = live.count(it->first) ? std::next(it) : grids_.erase(it);
    }
}

void TrackerSession::begin(const Frame& frame0, const Prompt& prompt) {
    if (started_) throw ContractViolation("session already prompted");

    BinaryMask mask0 = decode_prompt(frame0, prompt, params_.color_tolerance);
    const SoftMask soft0 = SoftMask::from_binary(mask0);

    // Color model from the prompt frame: mean foreground and background color.
    double fg_sum[3] = {0, 0, 0}, bg_sum[3] = {0, 0, 0};
    std::size_t fg_n = 0, bg_n = 0;
    for (int y = 0; y < frame0.height; ++y) {
        for (int x = 0; x < frame0.width; ++x) {
            const bool fg = mask0.at(x, y);
            for (int c = 0; c < 3; ++c) {
                const double v = frame0.channel(x, y, c) / 255.0;
                (fg ? fg_sum[c] : bg_sum[c]) += v;
            }
            (fg ? fg_n : bg_n) += 1;
        }
    }
    for (int c = 0; c < 3; ++c) {
        fg_color_[c] = fg_n ? fg_sum[c] / static_cast<double>(fg_n) : 1.0;
        bg_color_[c] = bg_n ? bg_sum[c] / static_cast<double>(bg_n) : 0.0;
    }

    PatchGrid grid = embedder_(frame0);
    MemoryEntry entry(frame0.index, PatchEmbedder::flatten(grid), soft0, 1.0);
    const ObserveOutcome outcome = bank_.observe(std::move(entry));
    store_entry_grid(frame0.index, std::move(grid), soft0);

    std::ostringstream prompt_line;
    prompt_line << "prompt t=" << frame0.index << " kind=";
    switch (prompt.kind()) {
        case PromptKind::clicks: prompt_line << "clicks n=" << prompt.clicks().size(); break;
        case PromptKind::box: prompt_line << "box"; break;
        case PromptKind::mask: prompt_line << "mask"; break;
    }
    trace_.push_back(prompt_line.str());
    trace_.push_back(bank_.dump_state_line(outcome));

    prompt_mask_storage_.clear();
    prompt_mask_storage_.push_back(std::move(mask0));
    started_ = true;
}

std::vector<const MemoryEntry*> TrackerSession::context_for_mode() const {
    if (mode_ == MemoryMode::divemem) return bank_.assemble_context();

    std::vector<const MemoryEntry*> out;
    std::vector<int> seen;
    const auto emit = [&](const MemoryEntry& e) {
        for (const int f : seen) {
            if (f == e.frame_index) return;
        }
        seen.push_back(e.frame_index);
        out.push_back(&e);
    };
    if (mode_ == MemoryMode::greedy_recent && bank_.initial()) emit(*bank_.initial());
    for (const auto& e : bank_.short_term()) emit(e);
    return out;
}

std::pair<SoftMask, double> TrackerSession::propagate_frame(const Frame& frame) {
    if (!started_) throw ContractViolation("propagate_frame: session has no prompt");

    PatchGrid grid = embedder_(frame);
    const int g = grid.grid, dim = grid.dim;
    const auto context = context_for_mode();

    // Effective features per context entry: long-term entries get their
    // temporal embedding added to every patch feature.
    struct ContextGrid {
        std::vector<double> features;
        const std::vector<double>* fractions;
    };
    std::vector<ContextGrid> ctx_grids;
    ctx_grids.reserve(context.size());
    for (const auto* entry : context) {
        const auto it = grids_.find(entry->frame_index);
        if (it == grids_.end()) continue; // grid pruned; entry unusable
        ContextGrid cg;
        cg.features = it->second.grid.features;
        cg.fractions = &it->second.fg_fraction;
        if (entry->temporal_embedding_id && mode_ == MemoryMode::divemem &&
            static_cast<std::size_t>(*entry->temporal_embedding_id) <
                temporal_embeddings_.size()) {
            const auto& t = temporal_embeddings_[static_cast<std::size_t>(
                *entry->temporal_embedding_id)];
            const std::size_t use = std::min<std::size_t>(t.size(), static_cast<std::size_t>(dim));
            for (int p = 0; p < g * g; ++p) {
                double* f = cg.features.data() + static_cast<std::size_t>(p) * dim;
                for (std::size_t d = 0; d < use; ++d) f[d] += t[d];
            }
        }
        ctx_grids.push_back(std::move(cg));
    }

    // Patch vote: top-k most similar memory patches, exp-weighted by
    // similarity, each contributing its stored foreground fraction.
    const int n_patches = g * g;
    std::vector<double> vote(static_cast<std::size_t>(n_patches), 0.0);
    std::vector<double> top_sim(static_cast<std::size_t>(n_patches), -1.0);
    struct Match {
        double sim;
        double frac;
    };
    std::vector<Match> matches;
    for (int p = 0; p < n_patches; ++p) {
        const double* q = grid.features.data() + static_cast<std::size_t>(p) * dim;
        double qn = 0.0;
        for (int d = 0; d < dim; ++d) qn += q[d] * q[d];
        if (qn == 0.0) continue;

        matches.clear();
        for (const auto& cg : ctx_grids) {
            for (int mp = 0; mp < n_patches; ++mp) {
                const double* m = cg.features.data() + static_cast<std::size_t>(mp) * dim;
                double dot = 0.0, mn = 0.0;
                for (int d = 0; d < dim; ++d) {
                    dot += q[d] * m[d];
                    mn += m[d] * m[d];
                }
                if (mn == 0.0) continue;
                matches.push_back({dot / std::sqrt(qn * mn), (*cg.fractions)[mp]});
            }
        }
        if (matches.empty()) continue;

        const std::size_t k = std::min<std::size_t>(params_.top_k, matches.size());
        std::partial_sort(matches.begin(), matches.begin() + static_cast<std::ptrdiff_t>(k),
                          matches.end(),
                          [](const Match& a, const Match& b) { return a.sim > b.sim; });
        top_sim[p] = matches.front().sim;

        double weight_sum = 0.0, value_sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double wgt = std::exp(params_.vote_sharpness * (matches[i].sim - 1.0));
            weight_sum += wgt;
            value_sum += wgt * matches[i].frac;
        }
        vote[p] = weight_sum > 0.0 ? value_sum / weight_sum : 0.0;
    }

    // Active patch set, optionally dilated one patch outward so boundary
    // pixels spilling into weakly voting patches stay reachable.
    std::vector<std::uint8_t> active(static_cast<std::size_t>(n_patches), 0);
    for (int p = 0; p < n_patches; ++p) active[p] = vote[p] >= params_.active_threshold;
    std::vector<std::uint8_t> covered = active;
    if (params_.dilate_active) {
        for (int gy = 0; gy < g; ++gy) {
            for (int gx = 0; gx < g; ++gx) {
                if (!active[static_cast<std::size_t>(gy) * g + gx]) continue;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = gx + dx, ny = gy + dy;
                        if (nx < 0 || nx >= g || ny < 0 || ny >= g) continue;
                        covered[static_cast<std::size_t>(ny) * g + nx] = 1;
                    }
                }
            }
        }
    }

    // Pixel scores: color affinity inside covered patches, suppressed vote
    // outside. The color model separates object pixels from background at
    // pixel precision; the vote decides where the object can be at all.
    SoftMask soft(frame.width, frame.height);
    for (int y = 0; y < frame.height; ++y) {
        const int gy = std::min(g - 1, y * g / frame.height);
        for (int x = 0; x < frame.width; ++x) {
            const int gx = std::min(g - 1, x * g / frame.width);
            const int p = gy * g + gx;
            const double d_fg = color_distance_sq(frame, x, y, fg_color_);
            const double d_bg = color_distance_sq(frame, x, y, bg_color_);
            const double affinity =
                1.0 / (1.0 + std::exp(-params_.color_sharpness * (d_bg - d_fg)));
            const double score = covered[p] ? affinity
                                            : std::min(vote[p], params_.active_threshold * 0.98) *
                                                  affinity;
            soft.set(x, y, std::clamp(score, 0.0, 1.0));
        }
    }

    // Confidence: mean of the best similarity over vote-active patches,
    // clamped into [0, 1]. No active patch means no visible target.
    double conf = 0.0;
    int n_active = 0;
    for (int p = 0; p < n_patches; ++p) {
        if (active[p]) {
            conf += top_sim[p];
            ++n_active;
        }
    }
    conf = n_active > 0 ? std::clamp(conf / n_active, 0.0, 1.0) : 0.0;

    MemoryEntry entry(frame.index, PatchEmbedder::flatten(grid), soft, conf);
    const ObserveOutcome outcome = bank_.observe(std::move(entry));
    store_entry_grid(frame.index, std::move(grid), soft);
    prune_grids();
    trace_.push_back(bank_.dump_state_line(outcome));

    return {soft, conf};
}

} // namespace divetrack
