#pragma once
// Semantic head: a learnable CLS token runs single-head scaled dot-product
// attention over memory features (long-term entries get their learnable
// temporal embedding added first), then cross-attends to current-frame
// features. Both stages carry residual connections and no normalization
// layers. Gradients are computed analytically and are verified against
// central finite differences in the test suite.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "divetrack/types.hpp"

namespace divetrack {

// Query/key/value/output projections, each dim x dim row-major.
struct AttentionParams {
    std::vector<double> wq, wk, wv, wo;
};

class SemanticHead {
public:
    // Seeded Gaussian init (std 0.02) for the CLS token and projections;
    // temporal embeddings start at zero so they begin as no-ops.
    SemanticHead(int dim, int n_slots, std::uint64_t seed);

    int dim() const noexcept { return dim_; }
    int n_slots() const noexcept { return n_slots_; }
    std::uint64_t seed() const noexcept { return seed_; }

    std::vector<double>& cls_token() noexcept { return cls_token_; }
    const std::vector<double>& cls_token() const noexcept { return cls_token_; }
    AttentionParams& attn1() noexcept { return attn1_; }
    const AttentionParams& attn1() const noexcept { return attn1_; }
    AttentionParams& attn2() noexcept { return attn2_; }
    const AttentionParams& attn2() const noexcept { return attn2_; }
    std::vector<std::vector<double>>& temporal_embeddings() noexcept { return temporal_; }
    const std::vector<std::vector<double>>& temporal_embeddings() const noexcept {
        return temporal_;
    }

private:
    int dim_;
    int n_slots_;
    std::uint64_t seed_;
    std::vector<double> cls_token_;
    AttentionParams attn1_;
    AttentionParams attn2_;
    std::vector<std::vector<double>> temporal_;
};

// A memory feature vector, optionally tagged with a long-term slot whose
// temporal embedding is added before attention.
struct MemoryFeature {
    Embedding feat;
    std::optional<int> temporal_slot;
};

// Two-stage attention output x'_c.
Embedding tsl_forward(const SemanticHead& head, const std::vector<MemoryFeature>& memory_feats,
                      const std::vector<Embedding>& frame_feats);

// Category names with unit-norm text embeddings; the pluggable stand-in for a
// text encoder.
class CategoryRegistry {
public:
    static CategoryRegistry seeded_random(std::vector<std::string> names, int dim,
                                          std::uint64_t seed);
    static CategoryRegistry from_vectors(std::vector<std::string> names,
                                         std::vector<Embedding> embeddings,
                                         bool normalize = true);

    std::size_t size() const noexcept { return names_.size(); }
    int dim() const noexcept { return dim_; }
    const std::vector<std::string>& names() const noexcept { return names_; }
    const std::vector<Embedding>& embeddings() const noexcept { return embeddings_; }
    std::size_t index_of(const std::string& name) const;

    // One category per line: "<name> v0 v1 ... v{dim-1}".
    static CategoryRegistry load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    CategoryRegistry(std::vector<std::string> names, std::vector<Embedding> embeddings, int dim)
        : names_(std::move(names)), embeddings_(std::move(embeddings)), dim_(dim) {}

    std::vector<std::string> names_;
    std::vector<Embedding> embeddings_;
    int dim_ = 0;
};

struct HeadGradients {
    std::vector<double> cls_token;
    AttentionParams attn1;
    AttentionParams attn2;
    std::vector<std::vector<double>> temporal_embeddings;
    double loss = 0.0;
};

// Analytic gradients of tsl_contrastive_loss(tsl_forward(...)) with respect
// to the CLS token, all eight projections and the used temporal embeddings.
HeadGradients tsl_backward(const SemanticHead& head,
                           const std::vector<MemoryFeature>& memory_feats,
                           const std::vector<Embedding>& frame_feats,
                           const CategoryRegistry& registry, std::size_t positive_index,
                           double tau);

struct TrainSample {
    std::vector<MemoryFeature> memory_feats;
    std::vector<Embedding> frame_feats;
    std::string category;
};

struct TrainResult {
    std::vector<double> loss_curve; // full-batch loss before each update
};

// Plain full-batch gradient descent on the contrastive objective.
// Throws TrainingError (with the step index) if the loss turns non-finite.
TrainResult train_head(SemanticHead& head, const std::vector<TrainSample>& dataset,
                       const CategoryRegistry& registry, int steps, double lr, double tau);

// Checkpoints: a small text header (dim, categories, slots, seed) followed by
// the flat parameter arrays.
void save_head(const SemanticHead& head, const std::filesystem::path& path,
               int k_categories = 0);

struct LoadedHead {
    SemanticHead head;
    int k_categories = 0;
};

LoadedHead load_head(const std::filesystem::path& path);

} // namespace divetrack
