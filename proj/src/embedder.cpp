#include "divetrack/embedder.hpp"

#include "divetrack/errors.hpp"

namespace divetrack {

PatchEmbedder::PatchEmbedder(int grid) : grid_(grid) {
    if (grid < 1) throw ContractViolation("patch grid must be >= 1");
}

PatchGrid PatchEmbedder::operator()(const Frame& frame) const {
    if (frame.width < grid_ || frame.height < grid_) {
        throw ContractViolation("frame smaller than patch grid");
    }
    PatchGrid out;
    out.grid = grid_;
    out.dim = kDim;
    out.features.resize(static_cast<std::size_t>(grid_) * grid_ * kDim);

    for (int gy = 0; gy < grid_; ++gy) {
        const int y0 = gy * frame.height / grid_;
        const int y1 = (gy + 1) * frame.height / grid_;
        for (int gx = 0; gx < grid_; ++gx) {
            const int x0 = gx * frame.width / grid_;
            const int x1 = (gx + 1) * frame.width / grid_;

            double sum[3] = {0.0, 0.0, 0.0};
            double intensity_sum = 0.0, intensity_sq = 0.0;
            const double n = static_cast<double>(x1 - x0) * (y1 - y0);
            for (int y = y0; y < y1; ++y) {
                for (int x = x0; x < x1; ++x) {
                    double intensity = 0.0;
                    for (int c = 0; c < 3; ++c) {
                        const double v = frame.channel(x, y, c) / 255.0;
                        sum[c] += v;
                        intensity += v;
                    }
                    intensity /= 3.0;
                    intensity_sum += intensity;
                    intensity_sq += intensity * intensity;
                }
            }
            double* f = out.features.data() +
                        (static_cast<std::size_t>(gy) * grid_ + gx) * kDim;
            f[0] = sum[0] / n;
            f[1] = sum[1] / n;
            f[2] = sum[2] / n;
            f[3] = (gx + 0.5) / grid_;
            f[4] = (gy + 0.5) / grid_;
            const double mean_i = intensity_sum / n;
            f[5] = intensity_sq / n - mean_i * mean_i; // variance
        }
    }
    return out;
}

Embedding PatchEmbedder::flatten(const PatchGrid& grid) {
    return Embedding(grid.features);
}

} // namespace divetrack
