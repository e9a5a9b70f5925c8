#pragma once
// Shared domain types: feature embeddings, raw video frames and user prompts.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "divetrack/errors.hpp"
#include "divetrack/mask.hpp"

namespace divetrack {

// Finite real vector of fixed dimension.
class Embedding {
public:
    explicit Embedding(std::vector<double> values);

    std::size_t dim() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    const std::vector<double>& values() const noexcept { return values_; }

    bool operator==(const Embedding&) const = default;

private:
    std::vector<double> values_;
};

// Interleaved RGB pixel grid with its temporal position in the video.
struct Frame {
    int index = 0;
    std::optional<double> timestamp; // seconds
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb; // 3 * width * height, row-major

    Frame() = default;
    Frame(int index, int width, int height);

    std::uint8_t channel(int x, int y, int c) const {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    void set_pixel(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        const std::size_t base = (static_cast<std::size_t>(y) * width + x) * 3;
        rgb[base] = r;
        rgb[base + 1] = g;
        rgb[base + 2] = b;
    }
};

enum class ClickPolarity { positive, negative };

struct Click {
    int x = 0;
    int y = 0;
    ClickPolarity polarity = ClickPolarity::positive;

    bool operator==(const Click&) const = default;
};

struct Box {
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;
};

enum class PromptKind { clicks, box, mask };

// First-frame user prompt. Exactly the fields for its kind are populated.
class Prompt {
public:
    static Prompt from_clicks(std::vector<Click> clicks);
    static Prompt from_box(Box box);
    static Prompt from_mask(BinaryMask mask);

    PromptKind kind() const noexcept { return kind_; }
    const std::vector<Click>& clicks() const;
    const Box& box() const;
    const BinaryMask& mask() const;

    // Coordinates must lie inside the prompted frame.
    void check_bounds(int frame_width, int frame_height) const;

private:
    explicit Prompt(PromptKind kind) : kind_(kind) {}

    PromptKind kind_;
    std::vector<Click> clicks_;
    std::optional<Box> box_;
    std::optional<BinaryMask> mask_;
};

} // namespace divetrack
