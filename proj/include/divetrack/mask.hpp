#pragma once
// Mask representations: hard (binary) and soft (per-pixel probability).
// Both are row-major grids with immutable dimensions.

#include <cstdint>
#include <vector>

#include "divetrack/errors.hpp"

namespace divetrack {

class BinaryMask {
public:
    BinaryMask(int width, int height);
    static BinaryMask from_bits(int width, int height, std::vector<std::uint8_t> bits);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    // Unchecked access; callers stay in bounds.
    bool at(int x, int y) const { return bits_[static_cast<std::size_t>(y) * width_ + x] != 0; }
    void set(int x, int y, bool v) { bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }

    std::size_t foreground_count() const;
    bool any_foreground() const;
    bool same_shape(const BinaryMask& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }
    bool operator==(const BinaryMask&) const = default;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> bits_;
};

class SoftMask {
public:
    SoftMask(int width, int height, double fill = 0.0);
    static SoftMask from_values(int width, int height, std::vector<double> values);
    static SoftMask from_binary(const BinaryMask& m);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
    // Stored values stay in [0, 1]; out-of-range writes are a contract violation.
    void set(int x, int y, double v);

    bool same_shape(const SoftMask& other) const {
        return width_ == other.width_ && height_ == other.height_;
    }

    // Foreground at v >= threshold.
    BinaryMask threshold(double t = 0.5) const;
    bool any_foreground(double t = 0.5) const;

    const std::vector<double>& values() const noexcept { return values_; }
    bool operator==(const SoftMask&) const = default;

private:
    int width_;
    int height_;
    std::vector<double> values_;
};

} // namespace divetrack
