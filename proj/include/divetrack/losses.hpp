#pragma once
// Training objectives: Gaussian label softening feeding a soft-target focal
// loss, the standard dice / IoU-regression / occlusion terms, the
// category-contrastive loss over text embeddings, and the weighted total.

#include <vector>

#include "divetrack/mask.hpp"
#include "divetrack/types.hpp"

namespace divetrack {

// Truncated, renormalized Gaussian taps on an odd-sized square support.
// Renormalization makes the weights sum to exactly 1 so softening preserves
// constant regions and keeps outputs in [0, 1].
class GaussianKernel {
public:
    static GaussianKernel make(double sigma, int size);

    double sigma() const noexcept { return sigma_; }
    int size() const noexcept { return size_; }
    int radius() const noexcept { return size_ / 2; }

    // Offsets in [-radius, radius].
    double at(int dx, int dy) const {
        return weights_[static_cast<std::size_t>(dy + radius()) * size_ + (dx + radius())];
    }

    const std::vector<double>& weights() const noexcept { return weights_; }

private:
    GaussianKernel(double sigma, int size, std::vector<double> weights)
        : sigma_(sigma), size_(size), weights_(std::move(weights)) {}

    double sigma_;
    int size_;
    std::vector<double> weights_;
};

// Label softening by kernel convolution with replicate padding at borders.
SoftMask gaussian_soften(const BinaryMask& hard_labels, const GaussianKernel& kernel);

// Mean over pixels of the symmetric soft-target focal form
//   -[ y*(1-p)^gamma*log(p) + (1-y)*p^gamma*log(1-p) ]
// with predictions clamped into [1e-7, 1 - 1e-7]. gamma = 0 reduces to
// soft-target binary cross-entropy.
double focal_arl_loss(const SoftMask& pred, const SoftMask& soft_target, double gamma);

// 1 - (2*sum(p*t) + s) / (sum(p) + sum(t) + s), smoothing s.
double dice_loss(const SoftMask& pred, const BinaryMask& target, double smoothing = 1.0);

// L1 regression on the mask-quality score.
double iou_regression_loss(double predicted_iou, double actual_iou);

// Binary cross-entropy on the visibility prediction.
double occlusion_loss(double predicted_visible, bool actually_visible);

// -log softmax over cosine similarities divided by tau, evaluated at the
// positive index. Stabilized by max-subtraction before exponentiation.
double tsl_contrastive_loss(const Embedding& x, std::size_t positive_index,
                            const std::vector<Embedding>& texts, double tau);

// How a configured temperature value enters the logits. The "inverse" reading
// multiplies similarities by the value (value 100 -> effective tau 0.01); the
// "literal" reading divides by it.
enum class TauMode { inverse, literal };

double effective_tau(TauMode mode, double value);

struct LossWeights {
    double lambda_arl = 20.0;
    double lambda_tsl = 0.1;

    void validate() const;
};

struct LossParts {
    double arl = 0.0;
    double iou = 0.0;
    double dice = 0.0;
    double occ = 0.0;
    double tsl = 0.0;
};

struct LossReport {
    double l_arl = 0.0;
    double l_iou = 0.0;
    double l_dice = 0.0;
    double l_occ = 0.0;
    double l_tsl = 0.0;
    double total = 0.0;
};

// total = lambda_arl*l_arl + l_iou + l_dice + l_occ + lambda_tsl*l_tsl.
// Samples without a semantic label contribute no l_tsl.
LossReport total_loss(const LossParts& parts, const LossWeights& weights,
                      bool has_semantic_label);

} // namespace divetrack
