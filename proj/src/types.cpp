#include "divetrack/types.hpp"

#include <cmath>
#include <string>

namespace divetrack {

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw ContractViolation("embedding must have dim >= 1");
    for (const double v : values_) {
        if (!std::isfinite(v)) throw NumericError("embedding contains a non-finite value");
    }
}

Frame::Frame(int index, int width, int height) : index(index), width(width), height(height) {
    if (index < 0) throw ContractViolation("frame index must be non-negative");
    if (width <= 0 || height <= 0) throw ContractViolation("frame dimensions must be positive");
    rgb.assign(static_cast<std::size_t>(width) * height * 3, 0);
}

Prompt Prompt::from_clicks(std::vector<Click> clicks) {
    if (clicks.empty()) throw ContractViolation("click prompt needs at least one click");
    Prompt p(PromptKind::clicks);
    p.clicks_ = std::move(clicks);
    return p;
}

Prompt Prompt::from_box(Box box) {
    if (box.x_min > box.x_max || box.y_min > box.y_max) {
        throw ContractViolation("box prompt has inverted corners");
    }
    Prompt p(PromptKind::box);
    p.box_ = box;
    return p;
}

Prompt Prompt::from_mask(BinaryMask mask) {
    Prompt p(PromptKind::mask);
    p.mask_ = std::move(mask);
    return p;
}

const std::vector<Click>& Prompt::clicks() const {
    if (kind_ != PromptKind::clicks) throw ContractViolation("prompt is not a click prompt");
    return clicks_;
}

const Box& Prompt::box() const {
    if (kind_ != PromptKind::box) throw ContractViolation("prompt is not a box prompt");
    return *box_;
}

const BinaryMask& Prompt::mask() const {
    if (kind_ != PromptKind::mask) throw ContractViolation("prompt is not a mask prompt");
    return *mask_;
}

void Prompt::check_bounds(int frame_width, int frame_height) const {
    const auto inside = [&](int x, int y) {
        return x >= 0 && x < frame_width && y >= 0 && y < frame_height;
    };
    switch (kind_) {
        case PromptKind::clicks:
            for (const auto& c : clicks_) {
                if (!inside(c.x, c.y)) {
                    throw ContractViolation("click (" + std::to_string(c.x) + "," +
                                            std::to_string(c.y) + ") outside frame");
                }
            }
            break;
        case PromptKind::box:
            if (!inside(box_->x_min, box_->y_min) || !inside(box_->x_max, box_->y_max)) {
                throw ContractViolation("box prompt outside frame");
            }
            break;
        case PromptKind::mask:
            if (mask_->width() != frame_width || mask_->height() != frame_height) {
                throw ContractViolation("mask prompt resolution differs from frame");
            }
            break;
    }
}

} // namespace divetrack
