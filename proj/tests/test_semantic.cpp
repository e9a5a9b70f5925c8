#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "divetrack/losses.hpp"
#include "divetrack/semantic.hpp"
#include "oracles.hpp"

using namespace divetrack;

namespace {

void zero_projections(SemanticHead& head) {
    for (auto* attn : {&head.attn1(), &head.attn2()}) {
        std::fill(attn->wq.begin(), attn->wq.end(), 0.0);
        std::fill(attn->wk.begin(), attn->wk.end(), 0.0);
        std::fill(attn->wv.begin(), attn->wv.end(), 0.0);
        std::fill(attn->wo.begin(), attn->wo.end(), 0.0);
    }
}

void identity_projections(SemanticHead& head) {
    zero_projections(head);
    const std::size_t d = static_cast<std::size_t>(head.dim());
    for (auto* attn : {&head.attn1(), &head.attn2()}) {
        for (std::size_t i = 0; i < d; ++i) {
            attn->wq[i * d + i] = 1.0;
            attn->wk[i * d + i] = 1.0;
            attn->wv[i * d + i] = 1.0;
            attn->wo[i * d + i] = 1.0;
        }
    }
}

double loss_through_library(const SemanticHead& head,
                            const std::vector<MemoryFeature>& memory_feats,
                            const std::vector<Embedding>& frame_feats,
                            const CategoryRegistry& registry, std::size_t pos, double tau) {
    const Embedding out = tsl_forward(head, memory_feats, frame_feats);
    return tsl_contrastive_loss(out, pos, registry.embeddings(), tau);
}

// Central finite differences over every parameter of the head.
double max_gradient_error(SemanticHead& head, const std::vector<MemoryFeature>& memory_feats,
                          const std::vector<Embedding>& frame_feats,
                          const CategoryRegistry& registry, std::size_t pos, double tau) {
    const HeadGradients analytic =
        tsl_backward(head, memory_feats, frame_feats, registry, pos, tau);
    const double h = 1e-5;
    double worst = 0.0;

    const auto check_array = [&](std::vector<double>& param, const std::vector<double>& grad) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double saved = param[i];
            param[i] = saved + h;
            const double up = loss_through_library(head, memory_feats, frame_feats, registry,
                                                   pos, tau);
            param[i] = saved - h;
            const double down = loss_through_library(head, memory_feats, frame_feats, registry,
                                                     pos, tau);
            param[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double err = std::abs(numeric - grad[i]) /
                               std::max({1.0, std::abs(numeric), std::abs(grad[i])});
            worst = std::max(worst, err);
        }
    };

    check_array(head.cls_token(), analytic.cls_token);
    check_array(head.attn1().wq, analytic.attn1.wq);
    check_array(head.attn1().wk, analytic.attn1.wk);
    check_array(head.attn1().wv, analytic.attn1.wv);
    check_array(head.attn1().wo, analytic.attn1.wo);
    check_array(head.attn2().wq, analytic.attn2.wq);
    check_array(head.attn2().wk, analytic.attn2.wk);
    check_array(head.attn2().wv, analytic.attn2.wv);
    check_array(head.attn2().wo, analytic.attn2.wo);
    for (std::size_t s = 0; s < head.temporal_embeddings().size(); ++s) {
        check_array(head.temporal_embeddings()[s], analytic.temporal_embeddings[s]);
    }
    return worst;
}

struct RandomInstance {
    std::vector<MemoryFeature> memory;
    std::vector<Embedding> frame;
    std::size_t pos;
};

RandomInstance random_instance(std::mt19937_64& rng, int dim, int n_slots, std::size_t k) {
    RandomInstance inst;
    const int n_mem = uniform_int(rng, 1, 4);
    const int n_frame = uniform_int(rng, 1, 4);
    for (int i = 0; i < n_mem; ++i) {
        MemoryFeature f{oracle::random_embedding(rng, static_cast<std::size_t>(dim)),
                        std::nullopt};
        if (n_slots > 0 && uniform_double(rng) < 0.5) {
            f.temporal_slot = uniform_int(rng, 0, n_slots - 1);
        }
        inst.memory.push_back(std::move(f));
    }
    for (int i = 0; i < n_frame; ++i) {
        inst.frame.push_back(oracle::random_embedding(rng, static_cast<std::size_t>(dim)));
    }
    inst.pos = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(k) - 1));
    return inst;
}

} // namespace

TEST_CASE("zero projections leave the CLS token unchanged") {
    SemanticHead head(6, 2, 51);
    zero_projections(head);
    const Embedding v = Embedding({0.2, -0.1, 0.5, 0.0, 0.3, -0.4});
    const Embedding out = tsl_forward(head, {{v, std::nullopt}}, {v});
    for (std::size_t i = 0; i < out.dim(); ++i) {
        CHECK(out[i] == doctest::Approx(head.cls_token()[i]).epsilon(1e-15));
    }
}

TEST_CASE("identity projections add the attended vectors through the residuals") {
    SemanticHead head(4, 0, 52);
    identity_projections(head);
    const Embedding v({0.3, -0.2, 0.1, 0.4});
    const Embedding w({-0.5, 0.2, 0.25, 0.05});
    const Embedding out = tsl_forward(head, {{v, std::nullopt}}, {w});
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(out[i] == doctest::Approx(head.cls_token()[i] + v[i] + w[i]).epsilon(1e-12));
    }
}

TEST_CASE("attention is permutation-invariant over keys") {
    std::mt19937_64 rng(53);
    SemanticHead head(8, 2, 54);
    std::vector<MemoryFeature> memory;
    for (int i = 0; i < 4; ++i) {
        memory.push_back({oracle::random_embedding(rng, 8), i % 2 == 0
                                                                ? std::optional<int>(i / 2)
                                                                : std::nullopt});
    }
    std::vector<Embedding> frame;
    for (int i = 0; i < 5; ++i) frame.push_back(oracle::random_embedding(rng, 8));

    const Embedding base = tsl_forward(head, memory, frame);

    std::vector<MemoryFeature> memory_perm{memory[2], memory[0], memory[3], memory[1]};
    std::vector<Embedding> frame_perm{frame[4], frame[2], frame[0], frame[1], frame[3]};
    const Embedding permuted = tsl_forward(head, memory_perm, frame_perm);
    for (std::size_t i = 0; i < base.dim(); ++i) {
        CHECK(std::abs(base[i] - permuted[i]) <= 1e-9);
    }
}

TEST_CASE("tsl_forward input validation") {
    SemanticHead head(4, 1, 55);
    const Embedding ok({1, 2, 3, 4});
    const Embedding bad({1, 2, 3});
    CHECK_THROWS_AS(tsl_forward(head, {}, {ok}), ContractViolation);
    CHECK_THROWS_AS(tsl_forward(head, {{ok, std::nullopt}}, {}), ContractViolation);
    CHECK_THROWS_AS(tsl_forward(head, {{bad, std::nullopt}}, {ok}), ContractViolation);
    CHECK_THROWS_AS(tsl_forward(head, {{ok, 5}}, {ok}), ContractViolation);
}

TEST_CASE("K=1 loss is identically zero, so every gradient vanishes") {
    std::mt19937_64 rng(56);
    SemanticHead head(6, 2, 57);
    const auto registry = CategoryRegistry::seeded_random({"only"}, 6, 58);
    const auto inst = random_instance(rng, 6, 2, 1);
    const HeadGradients g = tsl_backward(head, inst.memory, inst.frame, registry, 0, 0.01);
    CHECK(g.loss == 0.0);
    for (const double v : g.cls_token) CHECK(v == 0.0);
    for (const auto* attn : {&g.attn1, &g.attn2}) {
        for (const auto* mat : {&attn->wq, &attn->wk, &attn->wv, &attn->wo}) {
            for (const double v : *mat) CHECK(v == 0.0);
        }
    }
    for (const auto& slot : g.temporal_embeddings) {
        for (const double v : slot) CHECK(v == 0.0);
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    std::mt19937_64 rng(59);
    const double taus[] = {1.0, 100.0, 0.05};
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        const int dim = uniform_int(rng, 2, 12);
        const int slots = uniform_int(rng, 0, 3);
        const std::size_t k = static_cast<std::size_t>(uniform_int(rng, 2, 4));
        std::vector<std::string> names;
        for (std::size_t i = 0; i < k; ++i) names.push_back("cat" + std::to_string(i));
        const auto registry = CategoryRegistry::seeded_random(names, dim, rng());
        SemanticHead head(dim, slots, rng());
        const auto inst = random_instance(rng, dim, slots, k);
        const double tau = taus[trial % 3];
        worst = std::max(worst,
                         max_gradient_error(head, inst.memory, inst.frame, registry, inst.pos,
                                            tau));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("registry normalization makes text-embedding scale irrelevant") {
    std::mt19937_64 rng(60);
    SemanticHead head(8, 2, 61);
    const auto inst = random_instance(rng, 8, 2, 3);

    std::vector<Embedding> raw;
    for (int i = 0; i < 3; ++i) raw.push_back(oracle::random_embedding(rng, 8));
    std::vector<Embedding> doubled = raw;
    std::vector<double> v = doubled[1].values();
    for (auto& x : v) x *= 2.0;
    doubled[1] = Embedding(v);

    const auto reg_a = CategoryRegistry::from_vectors({"a", "b", "c"}, raw, true);
    const auto reg_b = CategoryRegistry::from_vectors({"a", "b", "c"}, doubled, true);
    const HeadGradients ga = tsl_backward(head, inst.memory, inst.frame, reg_a, 1, 0.01);
    const HeadGradients gb = tsl_backward(head, inst.memory, inst.frame, reg_b, 1, 0.01);
    CHECK(std::abs(ga.loss - gb.loss) <= 1e-9);
    for (std::size_t i = 0; i < ga.cls_token.size(); ++i) {
        CHECK(std::abs(ga.cls_token[i] - gb.cls_token[i]) <= 1e-9);
    }
}

namespace {

std::vector<TrainSample> aligned_dataset(const CategoryRegistry& registry) {
    // Memory features equal to the category embedding: the objective only has
    // to align the attended output with the right text direction.
    std::vector<TrainSample> dataset;
    for (std::size_t k = 0; k < registry.size(); ++k) {
        TrainSample s;
        s.memory_feats.push_back({registry.embeddings()[k], std::nullopt});
        s.frame_feats.push_back(registry.embeddings()[k]);
        s.category = registry.names()[k];
        dataset.push_back(std::move(s));
    }
    return dataset;
}

} // namespace

TEST_CASE("training on aligned features starts near ln K and strictly decreases") {
    const auto registry = CategoryRegistry::seeded_random({"a", "b", "c"}, 8, 62);
    SemanticHead head(8, 0, 63);
    const auto dataset = aligned_dataset(registry);
    // Paper-literal temperature: logits within +-0.01, so the softmax starts
    // essentially uniform.
    const TrainResult result = train_head(head, dataset, registry, 50, 40.0, 100.0);
    REQUIRE(result.loss_curve.size() == 50);
    CHECK(std::abs(result.loss_curve.front() - std::log(3.0)) < 0.05);
    for (std::size_t i = 1; i < result.loss_curve.size(); ++i) {
        CHECK(result.loss_curve[i] < result.loss_curve[i - 1]);
    }
}

TEST_CASE("training with zero projections still progresses through the CLS residual") {
    const auto registry = CategoryRegistry::seeded_random({"a", "b", "c"}, 8, 64);
    SemanticHead head(8, 0, 65);
    zero_projections(head);
    const TrainResult result = train_head(head, aligned_dataset(registry), registry, 50, 40.0,
                                          100.0);
    CHECK(result.loss_curve.back() < result.loss_curve.front());
    // Projections received zero gradient and stayed zero.
    for (const double v : head.attn1().wq) CHECK(v == 0.0);
    for (const double v : head.attn2().wo) CHECK(v == 0.0);
}

TEST_CASE("training edge cases") {
    const auto registry = CategoryRegistry::seeded_random({"a", "b"}, 6, 66);
    SemanticHead head(6, 0, 67);

    SUBCASE("empty dataset returns an empty curve and an unchanged head") {
        const auto cls_before = head.cls_token();
        const TrainResult r = train_head(head, {}, registry, 10, 1.0, 0.01);
        CHECK(r.loss_curve.empty());
        CHECK(head.cls_token() == cls_before);
    }
    SUBCASE("zero learning rate keeps the loss curve constant") {
        const TrainResult r = train_head(head, aligned_dataset(registry), registry, 10, 0.0,
                                         0.01);
        REQUIRE(r.loss_curve.size() == 10);
        for (const double v : r.loss_curve) CHECK(v == r.loss_curve.front());
    }
    SUBCASE("divergence raises TrainingError with the step index") {
        try {
            train_head(head, aligned_dataset(registry), registry, 50, 1e30, 0.01);
            FAIL("expected TrainingError");
        } catch (const TrainingError& e) {
            CHECK(e.step() >= 0);
        }
    }
    SUBCASE("unknown category is a contract violation") {
        std::vector<TrainSample> bad = aligned_dataset(registry);
        bad[0].category = "nope";
        CHECK_THROWS_AS(train_head(head, bad, registry, 1, 0.1, 0.01), ContractViolation);
    }
}

TEST_CASE("registry and head persistence") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "divetrack_semantic_test";
    fs::create_directories(dir);

    const auto registry = CategoryRegistry::seeded_random({"grasper", "hook", "scissors"}, 8, 68);
    for (const auto& e : registry.embeddings()) {
        double norm = 0.0;
        for (std::size_t i = 0; i < e.dim(); ++i) norm += e[i] * e[i];
        CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-9);
    }
    registry.save(dir / "registry.txt");
    const auto loaded = CategoryRegistry::load(dir / "registry.txt");
    REQUIRE(loaded.size() == 3);
    CHECK(loaded.index_of("hook") == 1);
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(loaded.embeddings()[k][i] ==
                  doctest::Approx(registry.embeddings()[k][i]).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(registry.index_of("missing"), ContractViolation);
    CHECK_THROWS_AS(CategoryRegistry::load(dir / "absent.txt"), IoError);

    SemanticHead head(8, 4, 69);
    head.temporal_embeddings()[2][5] = 0.125;
    save_head(head, dir / "head.txt", 3);
    const LoadedHead reloaded = load_head(dir / "head.txt");
    CHECK(reloaded.k_categories == 3);
    CHECK(reloaded.head.dim() == 8);
    CHECK(reloaded.head.cls_token() == head.cls_token());
    CHECK(reloaded.head.attn1().wv == head.attn1().wv);
    CHECK(reloaded.head.temporal_embeddings()[2][5] == 0.125);
}
