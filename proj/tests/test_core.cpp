#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "divetrack/core_ops.hpp"
#include "divetrack/mask.hpp"
#include "divetrack/types.hpp"
#include "oracles.hpp"

using namespace divetrack;

TEST_CASE("cosine_similarity basic cases") {
    CHECK(cosine_similarity(Embedding({1, 0}), Embedding({0, 1})) == doctest::Approx(0.0));
    CHECK(cosine_similarity(Embedding({3, 4}), Embedding({3, 4})) == doctest::Approx(1.0));
    // 0.9 / sqrt(0.82), checked against the independent long-double oracle.
    const Embedding a({1, 0}), b({0.9, 0.1});
    const double expected = oracle::cosine(a.values(), b.values());
    CHECK(expected == doctest::Approx(0.9 / std::sqrt(0.82)).epsilon(1e-12));
    CHECK(cosine_similarity(a, b) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("cosine_similarity errors") {
    CHECK_THROWS_AS(cosine_similarity(Embedding({1, 0}), Embedding({1, 0, 0})),
                    ContractViolation);
    CHECK_THROWS_AS(cosine_similarity(Embedding({0, 0}), Embedding({1, 0})), DegenerateInput);
}

TEST_CASE("cosine_similarity symmetry and scale invariance") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = oracle::random_embedding(rng, 16);
        const auto b = oracle::random_embedding(rng, 16);
        CHECK(cosine_similarity(a, b) == cosine_similarity(b, a)); // bit-exact
        std::vector<double> scaled = a.values();
        const double k = 0.5 + uniform_double(rng) * 4.0;
        for (auto& v : scaled) v *= k;
        CHECK(cosine_similarity(a, Embedding(scaled)) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("mask_iou basic cases") {
    BinaryMask a(4, 4), b(4, 4);
    a.set(1, 1, true);
    a.set(2, 1, true);
    b.set(1, 1, true);
    b.set(2, 1, true);
    CHECK(mask_iou(a, b) == doctest::Approx(1.0));

    BinaryMask c(4, 4);
    c.set(0, 3, true);
    CHECK(mask_iou(a, c) == doctest::Approx(0.0));

    // a covers {p,q}, b covers {q,r} -> 1/3 by pixel counting.
    BinaryMask p(3, 1), q(3, 1);
    p.set(0, 0, true);
    p.set(1, 0, true);
    q.set(1, 0, true);
    q.set(2, 0, true);
    CHECK(mask_iou(p, q) == doctest::Approx(1.0 / 3.0));
    CHECK(mask_iou(p, q) == doctest::Approx(oracle::iou(p, q)));
}

TEST_CASE("mask_iou conventions and errors") {
    const BinaryMask empty_a(5, 5), empty_b(5, 5);
    CHECK(mask_iou(empty_a, empty_b) == doctest::Approx(1.0));
    CHECK(mask_iou(empty_a, empty_b, 0.0) == doctest::Approx(0.0)); // configurable
    CHECK_THROWS_AS(mask_iou(BinaryMask(3, 3), BinaryMask(4, 3)), ContractViolation);
}

TEST_CASE("mask_iou symmetry property") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto a = oracle::random_mask(rng, 9, 7);
        const auto b = oracle::random_mask(rng, 9, 7);
        CHECK(mask_iou(a, b) == mask_iou(b, a));
        CHECK(mask_iou(a, b) == doctest::Approx(oracle::iou(a, b)));
        if (a.any_foreground()) CHECK(mask_iou(a, a) == doctest::Approx(1.0));
    }
}

TEST_CASE("distance_transform_argmax simple shapes") {
    BinaryMask solid(5, 5);
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) solid.set(x, y, true);
    }
    CHECK(distance_transform_argmax(solid) == Pixel{2, 2});

    BinaryMask single(10, 10);
    single.set(7, 3, true);
    CHECK(distance_transform_argmax(single) == Pixel{7, 3});

    CHECK_THROWS_AS(distance_transform_argmax(BinaryMask(4, 4)), DegenerateInput);
}

TEST_CASE("distance_transform_argmax L-shape matches exhaustive scan") {
    BinaryMask l(12, 12);
    for (int y = 2; y <= 9; ++y) {
        for (int x = 2; x <= 4; ++x) l.set(x, y, true);
    }
    for (int y = 7; y <= 9; ++y) {
        for (int x = 2; x <= 9; ++x) l.set(x, y, true);
    }
    const auto [ex, ey] = oracle::exhaustive_center(l);
    CHECK(distance_transform_argmax(l) == Pixel{ex, ey});
}

TEST_CASE("distance transform equals exhaustive scan on random masks") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const auto m = oracle::random_mask(rng, 11, 8, 0.55);
        const auto dist = squared_distance_to_background(m);
        for (int y = 0; y < m.height(); ++y) {
            for (int x = 0; x < m.width(); ++x) {
                if (!m.at(x, y)) {
                    CHECK(dist[static_cast<std::size_t>(y) * m.width() + x] == 0.0);
                    continue;
                }
                CHECK(dist[static_cast<std::size_t>(y) * m.width() + x] ==
                      doctest::Approx(oracle::exhaustive_sqdist_to_background(m, x, y)));
            }
        }
        if (m.any_foreground()) {
            const auto [ex, ey] = oracle::exhaustive_center(m);
            CHECK(distance_transform_argmax(m) == Pixel{ex, ey});
        }
    }
}

TEST_CASE("argmax output is always a foreground pixel") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 100; ++trial) {
        auto m = oracle::random_mask(rng, 13, 9, 0.3);
        if (!m.any_foreground()) m.set(uniform_int(rng, 0, 12), uniform_int(rng, 0, 8), true);
        const Pixel p = distance_transform_argmax(m);
        CHECK(m.at(p.x, p.y));
    }
}

TEST_CASE("connected components and boundaries") {
    BinaryMask m(8, 5);
    m.set(1, 1, true);
    m.set(2, 1, true);
    m.set(1, 2, true);
    m.set(6, 3, true); // separate single pixel
    const auto comps = connected_components(m);
    REQUIRE(comps.size() == 2);
    CHECK(comps[0].size() == 3); // row-major discovery order
    CHECK(comps[1].size() == 1);
    CHECK(comps[1].pixels.front() == Pixel{6, 3});

    // Boundary of a 4x4 solid block inside a larger grid is its 12-pixel ring.
    BinaryMask block(8, 8);
    for (int y = 2; y <= 5; ++y) {
        for (int x = 2; x <= 5; ++x) block.set(x, y, true);
    }
    const BinaryMask ring = boundary_pixels(block);
    CHECK(ring.foreground_count() == 12);
    CHECK_FALSE(ring.at(3, 3));

    // Full-grid mask: the image border is the boundary.
    BinaryMask full(4, 4);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) full.set(x, y, true);
    }
    CHECK(boundary_pixels(full).foreground_count() == 12);
}

TEST_CASE("mask type invariants") {
    CHECK_THROWS_AS(BinaryMask(0, 4), ContractViolation);
    CHECK_THROWS_AS(BinaryMask(4, -1), ContractViolation);
    CHECK_THROWS_AS(BinaryMask::from_bits(2, 2, {1, 0, 1}), ContractViolation);
    CHECK_THROWS_AS(SoftMask::from_values(2, 1, {0.5, 1.2}), ContractViolation);
    CHECK_THROWS_AS(SoftMask(2, 2).set(0, 0, -0.1), ContractViolation);

    const SoftMask s = SoftMask::from_values(2, 1, {0.4, 0.6});
    const BinaryMask t = s.threshold(0.5);
    CHECK_FALSE(t.at(0, 0));
    CHECK(t.at(1, 0));
}

TEST_CASE("embedding and prompt invariants") {
    CHECK_THROWS_AS(Embedding({}), ContractViolation);
    CHECK_THROWS_AS(Embedding({1.0, std::nan("")}), NumericError);

    const Prompt p = Prompt::from_clicks({{3, 2, ClickPolarity::positive}});
    CHECK_NOTHROW(p.check_bounds(4, 4));
    CHECK_THROWS_AS(p.check_bounds(3, 2), ContractViolation);
    CHECK_THROWS_AS(p.box(), ContractViolation); // wrong-kind access
    CHECK_THROWS_AS(Prompt::from_clicks({}), ContractViolation);
    CHECK_THROWS_AS(Prompt::from_box({5, 5, 2, 2}), ContractViolation);
}
