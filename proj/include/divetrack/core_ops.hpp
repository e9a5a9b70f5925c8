#pragma once
// Deterministic numeric primitives shared by the whole engine. All reductions
// use a fixed left-to-right summation order so repeated runs are bit-exact.

#include <vector>

#include "divetrack/mask.hpp"
#include "divetrack/types.hpp"

namespace divetrack {

struct Pixel {
    int x = 0;
    int y = 0;

    bool operator==(const Pixel&) const = default;
};

// a.b / (|a||b|), clamped into [-1, 1]. Throws ContractViolation on dimension
// mismatch and DegenerateInput when either vector is all-zero.
double cosine_similarity(const Embedding& a, const Embedding& b);

// |a n b| / |a u b|. Both masks empty returns `both_empty_value` (default 1.0:
// the two predictions agree that nothing is there).
double mask_iou(const BinaryMask& a, const BinaryMask& b, double both_empty_value = 1.0);

// Squared Euclidean distance from each pixel to the nearest background pixel,
// where everything outside the grid counts as background. Exact (Felzenszwalb-
// Huttenlocher lower envelope), row-major output.
std::vector<double> squared_distance_to_background(const BinaryMask& m);

// Squared Euclidean distance from each pixel to the nearest source pixel.
// Pixels outside the grid are not sources. Unreachable cells hold +inf
// when `sources` has no foreground.
std::vector<double> squared_distance_to_sources(const BinaryMask& sources);

// The foreground pixel deepest inside the mask: argmax of distance to the
// nearest background/boundary. Ties break toward smallest y, then smallest x.
// Throws DegenerateInput on an empty mask.
Pixel distance_transform_argmax(const BinaryMask& m);

// 4-connected foreground components in row-major discovery order.
struct Component {
    std::vector<Pixel> pixels; // row-major order
    std::size_t size() const noexcept { return pixels.size(); }
    BinaryMask to_mask(int width, int height) const;
};

std::vector<Component> connected_components(const BinaryMask& m);

// Foreground pixels with a 4-neighbour that is background or off the grid.
BinaryMask boundary_pixels(const BinaryMask& m);

} // namespace divetrack
