#include "divetrack/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "divetrack/core_ops.hpp"

namespace divetrack {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
constexpr double kProbEps = 1e-7;

double clamp_prob(double p) {
    return std::clamp(p, kProbEps, 1.0 - kProbEps);
}

} // namespace

GaussianKernel GaussianKernel::make(double sigma, int size) {
    if (sigma <= 0.0) throw ContractViolation("gaussian kernel sigma must be positive");
    if (size < 1 || size % 2 == 0) {
        throw ContractViolation("gaussian kernel size must be odd, got " + std::to_string(size));
    }
    const int r = size / 2;
    std::vector<double> w(static_cast<std::size_t>(size) * size);
    double sum = 0.0;
    for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
            const double v =
                std::exp(-(static_cast<double>(dx) * dx + static_cast<double>(dy) * dy) /
                         (2.0 * sigma * sigma)) /
                (kTwoPi * sigma * sigma);
            w[static_cast<std::size_t>(dy + r) * size + (dx + r)] = v;
            sum += v;
        }
    }
    for (auto& v : w) v /= sum;
    return GaussianKernel(sigma, size, std::move(w));
}

SoftMask gaussian_soften(const BinaryMask& hard_labels, const GaussianKernel& kernel) {
    const int w = hard_labels.width(), h = hard_labels.height();
    const int r = kernel.radius();
    SoftMask out(w, h);
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy) {
                const int j = std::clamp(v - dy, 0, h - 1); // replicate padding
                for (int dx = -r; dx <= r; ++dx) {
                    const int i = std::clamp(u - dx, 0, w - 1);
                    if (hard_labels.at(i, j)) acc += kernel.at(dx, dy);
                }
            }
            out.set(u, v, std::clamp(acc, 0.0, 1.0));
        }
    }
    return out;
}

double focal_arl_loss(const SoftMask& pred, const SoftMask& soft_target, double gamma) {
    if (!pred.same_shape(soft_target)) {
        throw ContractViolation("focal_arl_loss: mask dimensions differ");
    }
    if (gamma < 0.0) throw ContractViolation("focal_arl_loss: gamma must be >= 0");

    const auto& ps = pred.values();
    const auto& ys = soft_target.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double p = clamp_prob(ps[i]);
        const double y = ys[i];
        sum += -(y * std::pow(1.0 - p, gamma) * std::log(p) +
                 (1.0 - y) * std::pow(p, gamma) * std::log(1.0 - p));
    }
    return sum / static_cast<double>(ps.size());
}

double dice_loss(const SoftMask& pred, const BinaryMask& target, double smoothing) {
    if (pred.width() != target.width() || pred.height() != target.height()) {
        throw ContractViolation("dice_loss: mask dimensions differ");
    }
    const auto& ps = pred.values();
    const auto& ts = target.bits();
    double inter = 0.0, psum = 0.0, tsum = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const double t = ts[i] ? 1.0 : 0.0;
        inter += ps[i] * t;
        psum += ps[i];
        tsum += t;
    }
    return 1.0 - (2.0 * inter + smoothing) / (psum + tsum + smoothing);
}

double iou_regression_loss(double predicted_iou, double actual_iou) {
    if (!(predicted_iou >= 0.0 && predicted_iou <= 1.0)) {
        throw ContractViolation("iou_regression_loss: predicted value outside [0,1]");
    }
    if (!(actual_iou >= 0.0 && actual_iou <= 1.0)) {
        throw ContractViolation("iou_regression_loss: actual value outside [0,1]");
    }
    return std::abs(predicted_iou - actual_iou);
}

double occlusion_loss(double predicted_visible, bool actually_visible) {
    if (!(predicted_visible >= 0.0 && predicted_visible <= 1.0)) {
        throw ContractViolation("occlusion_loss: predicted value outside [0,1]");
    }
    const double p = clamp_prob(predicted_visible);
    return actually_visible ? -std::log(p) : -std::log(1.0 - p);
}

double tsl_contrastive_loss(const Embedding& x, std::size_t positive_index,
                            const std::vector<Embedding>& texts, double tau) {
    if (texts.empty()) throw ContractViolation("tsl_contrastive_loss: empty text list");
    if (positive_index >= texts.size()) {
        throw ContractViolation("tsl_contrastive_loss: positive index out of range");
    }
    if (!(tau > 0.0)) throw ContractViolation("tsl_contrastive_loss: tau must be positive");

    std::vector<double> logits(texts.size());
    for (std::size_t k = 0; k < texts.size(); ++k) {
        logits[k] = cosine_similarity(x, texts[k]) / tau;
    }
    double max_logit = logits[0];
    for (const double z : logits) max_logit = std::max(max_logit, z);
    double denom = 0.0;
    for (const double z : logits) denom += std::exp(z - max_logit);
    return -(logits[positive_index] - max_logit) + std::log(denom);
}

double effective_tau(TauMode mode, double value) {
    if (!(value > 0.0)) throw ContractViolation("temperature value must be positive");
    return mode == TauMode::inverse ? 1.0 / value : value;
}

void LossWeights::validate() const {
    if (lambda_arl < 0.0 || lambda_tsl < 0.0) {
        throw ContractViolation("loss weights must be non-negative");
    }
}

LossReport total_loss(const LossParts& parts, const LossWeights& weights,
                      bool has_semantic_label) {
    weights.validate();
    const double values[] = {parts.arl, parts.iou, parts.dice, parts.occ, parts.tsl};
    for (const double v : values) {
        if (!std::isfinite(v)) throw NumericError("total_loss: non-finite loss part");
        if (v < 0.0) throw ContractViolation("total_loss: loss parts must be >= 0");
    }

    LossReport r;
    r.l_arl = parts.arl;
    r.l_iou = parts.iou;
    r.l_dice = parts.dice;
    r.l_occ = parts.occ;
    r.l_tsl = has_semantic_label ? parts.tsl : 0.0;
    r.total = weights.lambda_arl * r.l_arl + r.l_iou + r.l_dice + r.l_occ +
              weights.lambda_tsl * r.l_tsl;
    return r;
}

} // namespace divetrack
