#include "divetrack/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace divetrack {

namespace {

void check_dims(int width, int height) {
    if (width <= 0 || height <= 0) {
        throw ContractViolation("mask dimensions must be positive, got " +
                                std::to_string(width) + "x" + std::to_string(height));
    }
}

} // namespace

BinaryMask::BinaryMask(int width, int height) : width_(width), height_(height) {
    check_dims(width, height);
    bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

BinaryMask BinaryMask::from_bits(int width, int height, std::vector<std::uint8_t> bits) {
    check_dims(width, height);
    if (bits.size() != static_cast<std::size_t>(width) * height) {
        throw ContractViolation("bit count " + std::to_string(bits.size()) +
                                " does not match " + std::to_string(width) + "x" +
                                std::to_string(height));
    }
    BinaryMask m(width, height);
    for (std::size_t i = 0; i < bits.size(); ++i) m.bits_[i] = bits[i] ? 1 : 0;
    return m;
}

std::size_t BinaryMask::foreground_count() const {
    std::size_t n = 0;
    for (const auto b : bits_) n += b;
    return n;
}

bool BinaryMask::any_foreground() const {
    return std::any_of(bits_.begin(), bits_.end(), [](std::uint8_t b) { return b != 0; });
}

SoftMask::SoftMask(int width, int height, double fill) : width_(width), height_(height) {
    check_dims(width, height);
    if (!(fill >= 0.0 && fill <= 1.0)) {
        throw ContractViolation("soft mask fill value " + std::to_string(fill) +
                                " outside [0,1]");
    }
    values_.assign(static_cast<std::size_t>(width) * height, fill);
}

SoftMask SoftMask::from_values(int width, int height, std::vector<double> values) {
    check_dims(width, height);
    if (values.size() != static_cast<std::size_t>(width) * height) {
        throw ContractViolation("value count " + std::to_string(values.size()) +
                                " does not match " + std::to_string(width) + "x" +
                                std::to_string(height));
    }
    for (const double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ContractViolation("soft mask value " + std::to_string(v) + " outside [0,1]");
        }
    }
    SoftMask m(width, height);
    m.values_ = std::move(values);
    return m;
}

SoftMask SoftMask::from_binary(const BinaryMask& src) {
    SoftMask m(src.width(), src.height());
    for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
            m.values_[static_cast<std::size_t>(y) * src.width() + x] = src.at(x, y) ? 1.0 : 0.0;
        }
    }
    return m;
}

void SoftMask::set(int x, int y, double v) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw ContractViolation("soft mask value " + std::to_string(v) + " outside [0,1]");
    }
    values_[static_cast<std::size_t>(y) * width_ + x] = v;
}

BinaryMask SoftMask::threshold(double t) const {
    BinaryMask out(width_, height_);
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            if (at(x, y) >= t) out.set(x, y, true);
        }
    }
    return out;
}

bool SoftMask::any_foreground(double t) const {
    return std::any_of(values_.begin(), values_.end(), [t](double v) { return v >= t; });
}

} // namespace divetrack
