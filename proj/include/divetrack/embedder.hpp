#pragma once
// Toy frame embedder: an NxN patch grid where each patch carries its mean
// color, normalized center coordinates and intensity variance. Deterministic
// and dependency-free; any callable with the same shape can replace it.

#include <functional>
#include <vector>

#include "divetrack/types.hpp"

namespace divetrack {

struct PatchGrid {
    int grid = 8;
    int dim = 6;
    std::vector<double> features; // grid*grid*dim, row-major patches

    const double* patch(int gx, int gy) const {
        return features.data() + (static_cast<std::size_t>(gy) * grid + gx) * dim;
    }
    int patch_count() const noexcept { return grid * grid; }
};

using FrameEmbedder = std::function<PatchGrid(const Frame&)>;

class PatchEmbedder {
public:
    explicit PatchEmbedder(int grid = 8);

    PatchGrid operator()(const Frame& frame) const;

    int grid() const noexcept { return grid_; }
    static constexpr int kDim = 6;

    // Frame-level embedding for diversity selection: all patch features
    // concatenated, so layout changes register as direction changes.
    static Embedding flatten(const PatchGrid& grid);

private:
    int grid_;
};

} // namespace divetrack
