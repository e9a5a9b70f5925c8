#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <vector>

#include "divetrack/metrics.hpp"
#include "oracles.hpp"

using namespace divetrack;

namespace {

BinaryMask square(int w, int h, int x0, int y0, int side) {
    BinaryMask m(w, h);
    for (int y = y0; y < y0 + side; ++y) {
        for (int x = x0; x < x0 + side; ++x) m.set(x, y, true);
    }
    return m;
}

// Independent boundary definition for the brute-force check.
std::vector<std::pair<int, int>> naive_boundary(const BinaryMask& m) {
    std::vector<std::pair<int, int>> out;
    for (int y = 0; y < m.height(); ++y) {
        for (int x = 0; x < m.width(); ++x) {
            if (!m.at(x, y)) continue;
            const bool touches_bg =
                x == 0 || y == 0 || x == m.width() - 1 || y == m.height() - 1 ||
                !m.at(x - 1, y) || !m.at(x + 1, y) || !m.at(x, y - 1) || !m.at(x, y + 1);
            if (touches_bg) out.emplace_back(x, y);
        }
    }
    return out;
}

bool all_within(const std::vector<std::pair<int, int>>& from,
                const std::vector<std::pair<int, int>>& to, double tol) {
    for (const auto& [ax, ay] : from) {
        double best = 1e18;
        for (const auto& [bx, by] : to) {
            const double dx = ax - bx, dy = ay - by;
            best = std::min(best, dx * dx + dy * dy);
        }
        if (best > tol * tol) return false;
    }
    return true;
}

} // namespace

TEST_CASE("region_j basic cases") {
    const BinaryMask a = square(10, 10, 2, 2, 4);
    CHECK(region_j(a, a) == doctest::Approx(100.0));
    CHECK(region_j(square(10, 10, 0, 0, 2), square(10, 10, 6, 6, 2)) == doctest::Approx(0.0));

    BinaryMask p(3, 1), q(3, 1);
    p.set(0, 0, true);
    p.set(1, 0, true);
    q.set(1, 0, true);
    q.set(2, 0, true);
    CHECK(region_j(p, q) == doctest::Approx(100.0 / 3.0));
    CHECK(region_j(p, q) == region_j(q, p));
}

TEST_CASE("boundary_f identical and disjoint masks") {
    const BinaryMask a = square(20, 20, 4, 4, 8);
    CHECK(boundary_f(a, a, 2.0) == doctest::Approx(100.0));
    CHECK(boundary_f(square(40, 40, 1, 1, 4), square(40, 40, 30, 30, 4), 2.0) ==
          doctest::Approx(0.0));

    const BinaryMask empty(20, 20);
    CHECK(boundary_f(empty, empty, 2.0) == doctest::Approx(100.0)); // identical empties
    CHECK(boundary_f(empty, a, 2.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(boundary_f(BinaryMask(3, 3), BinaryMask(4, 4), 1.0), ContractViolation);
}

TEST_CASE("boundary shifted by exactly the tolerance still scores 100") {
    const double tol = 2.0;
    const BinaryMask gt = square(24, 24, 6, 6, 9);
    const BinaryMask pred = square(24, 24, 8, 6, 9); // shifted +2 in x

    // Brute-force nearest-boundary search confirms the construction.
    CHECK(all_within(naive_boundary(pred), naive_boundary(gt), tol));
    CHECK(all_within(naive_boundary(gt), naive_boundary(pred), tol));

    CHECK(boundary_f(pred, gt, tol) == doctest::Approx(100.0));
    CHECK(boundary_f(pred, gt, 1.0) < 100.0); // tighter tolerance starts missing
}

TEST_CASE("boundary_f is monotonically non-decreasing in the tolerance") {
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = oracle::random_mask(rng, 14, 12, 0.45);
        const auto b = oracle::random_mask(rng, 14, 12, 0.45);
        double prev = -1.0;
        for (const double tol : {0.0, 1.0, 2.0, 4.0, 8.0, 20.0}) {
            const double f = boundary_f(a, b, tol);
            CHECK(f >= prev);
            prev = f;
        }
    }
}

TEST_CASE("default boundary tolerance is 0.8% of the diagonal, rounded up") {
    CHECK(default_boundary_tolerance(96, 96) == 2);   // diag 135.8 -> 1.086 -> 2
    CHECK(default_boundary_tolerance(480, 854) == 8); // diag 979.7 -> 7.84 -> 8
}

TEST_CASE("jf_evaluate perfect and empty predictions") {
    Masklet gt;
    gt.instance_id = 1;
    gt.track.emplace(0, square(12, 12, 3, 3, 5));
    gt.track.emplace(1, square(12, 12, 4, 3, 5));

    SUBCASE("perfect predictions score 100 everywhere") {
        const EvalResult r = jf_evaluate({gt}, {gt}, 2, 2.0);
        CHECK(r.j_mean == doctest::Approx(100.0));
        CHECK(r.f_mean == doctest::Approx(100.0));
        CHECK(r.jf_mean == doctest::Approx(100.0));
    }
    SUBCASE("all-empty prediction scores J = 0") {
        Masklet empty_pred;
        empty_pred.instance_id = 1;
        const EvalResult r = jf_evaluate({empty_pred}, {gt}, 2, 2.0);
        CHECK(r.j_mean == doctest::Approx(0.0));
    }
    SUBCASE("frames absent in both gt and prediction score as agreement") {
        Masklet pred = gt;
        const EvalResult r = jf_evaluate({pred}, {gt}, 4, 2.0); // frames 2,3 absent in both
        CHECK(r.j_mean == doctest::Approx(100.0));
    }
}

TEST_CASE("jf_mean is exactly the arithmetic mean over unweighted masklets") {
    Masklet gt1, gt2;
    gt1.instance_id = 1;
    gt1.track.emplace(0, square(12, 12, 3, 3, 5));
    gt2.instance_id = 2;
    gt2.track.emplace(0, square(12, 12, 1, 1, 3));

    Masklet pred1 = gt1; // (J, F) = (100, 100)
    Masklet pred2;       // (J, F) = (0, 0)
    pred2.instance_id = 2;
    pred2.track.emplace(0, square(12, 12, 8, 8, 3));

    const EvalResult r = jf_evaluate({pred1, pred2}, {gt1, gt2}, 1, 0.0);
    CHECK(r.j_mean == doctest::Approx(50.0));
    CHECK(r.jf_mean == doctest::Approx(50.0));
    CHECK(r.jf_mean == (r.j_mean + r.f_mean) / 2.0); // exact identity
    REQUIRE(r.per_masklet.size() == 2);
    CHECK(r.per_masklet[0].j == doctest::Approx(100.0));
    CHECK(r.per_masklet[1].j == doctest::Approx(0.0));
}

TEST_CASE("jf_evaluate reports unmatched instance ids") {
    Masklet gt;
    gt.instance_id = 7;
    gt.track.emplace(0, square(8, 8, 2, 2, 3));
    Masklet pred;
    pred.instance_id = 9;
    pred.track.emplace(0, square(8, 8, 2, 2, 3));
    try {
        jf_evaluate({pred}, {gt}, 1, 1.0);
        FAIL("expected alignment error");
    } catch (const ContractViolation& e) {
        const std::string what = e.what();
        CHECK(what.find("gt:7") != std::string::npos);
        CHECK(what.find("pred:9") != std::string::npos);
    }
}

TEST_CASE("simulate_clicks places the first click at the mask center") {
    const BinaryMask gt = square(15, 15, 4, 4, 7);
    const ClickSequence seq = simulate_clicks(gt, std::nullopt, 1);
    REQUIRE(seq.clicks.size() == 1);
    CHECK(seq.clicks[0].polarity == ClickPolarity::positive);
    const Pixel center = distance_transform_argmax(gt);
    CHECK(seq.clicks[0].x == center.x);
    CHECK(seq.clicks[0].y == center.y);
    CHECK(gt.at(seq.clicks[0].x, seq.clicks[0].y)); // inside the mask

    CHECK_THROWS_AS(simulate_clicks(BinaryMask(5, 5), std::nullopt, 1), DegenerateInput);
    CHECK_THROWS_AS(simulate_clicks(gt, std::nullopt, 0), ContractViolation);
}

TEST_CASE("simulate_clicks skips refinement when the prediction is already exact") {
    const BinaryMask gt = square(15, 15, 4, 4, 7);
    const ClickSequence seq = simulate_clicks(gt, SoftMask::from_binary(gt), 3);
    CHECK(seq.clicks.size() == 1);
}

TEST_CASE("a false-positive blob draws a negative click at its center") {
    const BinaryMask gt = square(30, 30, 3, 3, 8);
    BinaryMask pred_bits = gt;
    // Disjoint false-positive blob, larger than any residual error.
    for (int y = 18; y < 27; ++y) {
        for (int x = 18; x < 27; ++x) pred_bits.set(x, y, true);
    }
    const ClickSequence seq = simulate_clicks(gt, SoftMask::from_binary(pred_bits), 3);
    REQUIRE(seq.clicks.size() >= 2);
    CHECK(seq.clicks[1].polarity == ClickPolarity::negative);
    CHECK(seq.clicks[1].x == 22);
    CHECK(seq.clicks[1].y == 22);
}

TEST_CASE("simulate_clicks refines false negatives with positive clicks") {
    BinaryMask gt = square(30, 30, 2, 2, 6);
    for (int y = 20; y < 26; ++y) {
        for (int x = 20; x < 26; ++x) gt.set(x, y, true);
    }
    // Start from nothing: click 1 resolves one component, click 2 the other.
    const ClickSequence seq = simulate_clicks(gt, std::nullopt, 3);
    REQUIRE(seq.clicks.size() == 2);
    CHECK(seq.clicks[1].polarity == ClickPolarity::positive);
    CHECK(gt.at(seq.clicks[1].x, seq.clicks[1].y));
}

TEST_CASE("simulate_clicks is deterministic") {
    std::mt19937_64 rng(72);
    for (int trial = 0; trial < 30; ++trial) {
        auto gt = oracle::random_mask(rng, 18, 14, 0.35);
        if (!gt.any_foreground()) gt.set(3, 3, true);
        const auto pred = oracle::random_soft_mask(rng, 18, 14);
        const ClickSequence a = simulate_clicks(gt, pred, 4);
        const ClickSequence b = simulate_clicks(gt, pred, 4);
        CHECK(a.clicks == b.clicks);
    }
}

TEST_CASE("frames_per_second arithmetic and errors") {
    CHECK(frames_per_second(100, 2.0) == doctest::Approx(50.0));
    CHECK_THROWS_AS(frames_per_second(0, 1.0), DegenerateInput);
    CHECK_THROWS_AS(frames_per_second(10, 0.0), DegenerateInput);
}

TEST_CASE("fps timer produces finite positive throughput") {
    const auto workload = [] {
        volatile double sink = 0.0;
        for (int i = 1; i < 2000000; ++i) sink = sink + 1.0 / i;
        return sink;
    };

    FpsTimer single;
    single.start();
    workload();
    single.add_frames(1);
    const double one = single.fps();
    CHECK(one > 0.0);
    CHECK(std::isfinite(one));

    // Same workload twice on an idle machine lands in a loose 3x band.
    double fps[2];
    for (int run = 0; run < 2; ++run) {
        FpsTimer timer;
        timer.start();
        for (int f = 0; f < 20; ++f) {
            workload();
            timer.add_frames(1);
        }
        fps[run] = timer.fps();
    }
    const double ratio = fps[0] > fps[1] ? fps[0] / fps[1] : fps[1] / fps[0];
    CHECK(ratio < 3.0);
}
