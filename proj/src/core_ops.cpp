#include "divetrack/core_ops.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace divetrack {

double cosine_similarity(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) {
        throw ContractViolation("cosine_similarity: dims " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) {
        throw DegenerateInput("cosine_similarity: zero vector has no direction");
    }
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double mask_iou(const BinaryMask& a, const BinaryMask& b, double both_empty_value) {
    if (!a.same_shape(b)) {
        throw ContractViolation("mask_iou: mask dimensions differ");
    }
    std::size_t inter = 0, uni = 0;
    const auto& ba = a.bits();
    const auto& bb = b.bits();
    for (std::size_t i = 0; i < ba.size(); ++i) {
        const bool va = ba[i] != 0, vb = bb[i] != 0;
        inter += (va && vb) ? 1 : 0;
        uni += (va || vb) ? 1 : 0;
    }
    if (uni == 0) return both_empty_value;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared distance transform of a sampled function (lower envelope of
// parabolas). n values in `f`, result written to `d`.
void dt_1d(const double* f, int n, double* d, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        double s = ((f[q] + static_cast<double>(q) * q) -
                    (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                   (2.0 * q - 2.0 * v[k]);
        while (s <= z[k]) {
            --k;
            s = ((f[q] + static_cast<double>(q) * q) -
                 (f[v[k]] + static_cast<double>(v[k]) * v[k])) /
                (2.0 * q - 2.0 * v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

// Exact 2D squared EDT over a w*h grid initialised with 0 at sources and
// +inf elsewhere. Operates in place.
void dt_2d(std::vector<double>& grid, int w, int h) {
    const int n = std::max(w, h);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);

    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = grid[static_cast<std::size_t>(y) * w + x];
        dt_1d(f.data(), h, d.data(), v.data(), z.data());
        for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[y];
    }
    for (int y = 0; y < h; ++y) {
        double* row = grid.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) f[x] = row[x];
        dt_1d(f.data(), w, d.data(), v.data(), z.data());
        for (int x = 0; x < w; ++x) row[x] = d[x];
    }
}

} // namespace

std::vector<double> squared_distance_to_background(const BinaryMask& m) {
    const int w = m.width(), h = m.height();
    // One extra ring of background around the grid so the image border counts.
    const int pw = w + 2, ph = h + 2;
    std::vector<double> padded(static_cast<std::size_t>(pw) * ph, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            padded[static_cast<std::size_t>(y + 1) * pw + (x + 1)] = m.at(x, y) ? kInf : 0.0;
        }
    }
    dt_2d(padded, pw, ph);
    std::vector<double> out(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            out[static_cast<std::size_t>(y) * w + x] =
                padded[static_cast<std::size_t>(y + 1) * pw + (x + 1)];
        }
    }
    return out;
}

std::vector<double> squared_distance_to_sources(const BinaryMask& sources) {
    const int w = sources.width(), h = sources.height();
    std::vector<double> grid(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            grid[static_cast<std::size_t>(y) * w + x] = sources.at(x, y) ? 0.0 : kInf;
        }
    }
    dt_2d(grid, w, h);
    return grid;
}

Pixel distance_transform_argmax(const BinaryMask& m) {
    if (!m.any_foreground()) {
        throw DegenerateInput("distance_transform_argmax: mask has no foreground");
    }
    const auto dist = squared_distance_to_background(m);
    Pixel best{0, 0};
    double best_d = -1.0;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (!m.at(x, y)) continue;
            const double d = dist[static_cast<std::size_t>(y) * m.width() + x];
            if (d > best_d) { // strict: keeps smallest y, then smallest x on ties
                best_d = d;
                best = Pixel{x, y};
            }
        }
    }
    return best;
}

BinaryMask Component::to_mask(int width, int height) const {
    BinaryMask m(width, height);
    for (const auto& p : pixels) m.set(p.x, p.y, true);
    return m;
}

std::vector<Component> connected_components(const BinaryMask& m) {
    const int w = m.width(), h = m.height();
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(w) * h, 0);
    std::vector<Component> out;

    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            const std::size_t si = static_cast<std::size_t>(sy) * w + sx;
            if (!m.at(sx, sy) || seen[si]) continue;

            Component comp;
            std::deque<Pixel> queue{{sx, sy}};
            seen[si] = 1;
            while (!queue.empty()) {
                const Pixel p = queue.front();
                queue.pop_front();
                comp.pixels.push_back(p);
                constexpr int dx[4] = {0, 0, -1, 1};
                constexpr int dy[4] = {-1, 1, 0, 0};
                for (int k = 0; k < 4; ++k) {
                    const int nx = p.x + dx[k], ny = p.y + dy[k];
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
                    if (!m.at(nx, ny) || seen[ni]) continue;
                    seen[ni] = 1;
                    queue.push_back(Pixel{nx, ny});
                }
            }
            std::sort(comp.pixels.begin(), comp.pixels.end(), [](const Pixel& a, const Pixel& b) {
                return a.y != b.y ? a.y < b.y : a.x < b.x;
            });
            out.push_back(std::move(comp));
        }
    }
    return out;
}

BinaryMask boundary_pixels(const BinaryMask& m) {
    const int w = m.width(), h = m.height();
    BinaryMask out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!m.at(x, y)) continue;
            const bool edge = x == 0 || x == w - 1 || y == 0 || y == h - 1;
            if (edge || !m.at(x - 1, y) || !m.at(x + 1, y) || !m.at(x, y - 1) ||
                !m.at(x, y + 1)) {
                out.set(x, y, true);
            }
        }
    }
    return out;
}

} // namespace divetrack
