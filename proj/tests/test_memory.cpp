#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "divetrack/memory.hpp"
#include "oracles.hpp"

using namespace divetrack;

namespace {

SoftMask present_mask() {
    SoftMask m(2, 2);
    m.set(0, 0, 1.0);
    return m;
}

SoftMask absent_mask() {
    return SoftMask(2, 2);
}

MemoryEntry entry_at(int frame, Embedding e, double conf, bool present = true) {
    return MemoryEntry(frame, std::move(e), present ? present_mask() : absent_mask(), conf);
}

Embedding angle_embedding(double theta) {
    return Embedding({std::cos(theta), std::sin(theta)});
}

// Independent formatter mirroring the documented trace layout.
std::string shadow_line(const oracle::ShadowBank& s, int frame, bool stable) {
    std::ostringstream line;
    char conf[32];
    std::snprintf(conf, sizeof(conf), "%.6f", s.short_term.back().confidence);
    line << "t=" << frame << " conf=" << conf << " stable=" << (stable ? 1 : 0)
         << " streak=" << s.streak << " buf=" << s.buffer.size() << " admit=";
    if (s.last_admitted) {
        line << s.last_admitted_frame;
    } else {
        line << "-";
    }
    line << " long=[";
    for (std::size_t i = 0; i < s.long_term.size(); ++i) {
        if (i) line << ",";
        line << s.long_term[i].frame_index;
    }
    line << "] short=[";
    for (std::size_t i = 0; i < s.short_term.size(); ++i) {
        if (i) line << ",";
        line << s.short_term[i].frame_index;
    }
    line << "]";
    return line.str();
}

} // namespace

TEST_CASE("select_diverse picks the least similar candidate") {
    const MemoryEntry latest = entry_at(0, Embedding({1.0, 0.0}), 1.0);
    std::vector<MemoryEntry> buffer;
    buffer.push_back(entry_at(1, Embedding({1.0, 0.0}), 1.0));
    buffer.push_back(entry_at(2, Embedding({0.9, 0.1}), 1.0));
    // cos values 1.0 vs 0.99388..: the off-axis candidate wins the argmin.
    CHECK(select_diverse(buffer, latest).frame_index == 2);

    const std::vector<MemoryEntry> single{entry_at(5, Embedding({0.3, 0.4}), 1.0)};
    CHECK(select_diverse(single, latest).frame_index == 5);

    CHECK_THROWS_AS(select_diverse({}, latest), ContractViolation);
}

TEST_CASE("select_diverse ties break toward the earliest frame") {
    const MemoryEntry latest = entry_at(0, Embedding({1.0, 0.0}), 1.0);
    std::vector<MemoryEntry> buffer;
    buffer.push_back(entry_at(3, Embedding({0.0, 1.0}), 1.0));
    buffer.push_back(entry_at(4, Embedding({0.0, 2.0}), 1.0)); // same direction, same cosine
    CHECK(select_diverse(buffer, latest).frame_index == 3);
}

TEST_CASE("select_diverse matches the exhaustive argmin over seeded buffers") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = uniform_int(rng, 1, 5);
        std::vector<MemoryEntry> buffer;
        for (int i = 0; i < n; ++i) {
            buffer.push_back(entry_at(i, oracle::random_embedding(rng, 64), 1.0));
        }
        const MemoryEntry latest = entry_at(100, oracle::random_embedding(rng, 64), 1.0);
        const int expected = oracle::exhaustive_diverse_pick(buffer, latest);
        CHECK(select_diverse(buffer, latest).frame_index == expected);
    }
}

TEST_CASE("twenty stable frames admit exactly four long-term entries") {
    MemoryBank bank(MemoryConfig{});
    std::mt19937_64 rng(32);
    int admissions = 0;
    for (int t = 0; t < 20; ++t) {
        const auto outcome = bank.observe(entry_at(t, oracle::random_embedding(rng, 8), 0.99));
        if (outcome.admitted) ++admissions;
    }
    CHECK(admissions == 4);
    CHECK(bank.long_term().size() == 4);
    REQUIRE(bank.initial().has_value());
    CHECK(bank.initial()->frame_index == 0); // permanent l0 on top of the queue
}

TEST_CASE("streak resets on a low-confidence frame and on an empty mask") {
    MemoryBank bank(MemoryConfig{});
    std::mt19937_64 rng(33);
    for (int t = 0; t < 4; ++t) {
        bank.observe(entry_at(t, oracle::random_embedding(rng, 8), 0.99));
    }
    CHECK(bank.stable_streak() == 4);
    bank.observe(entry_at(4, oracle::random_embedding(rng, 8), 0.5)); // gated by gamma_iou
    CHECK(bank.stable_streak() == 0);
    CHECK(bank.buffer().empty());
    CHECK(bank.long_term().empty()); // no admission from that window

    for (int t = 5; t < 9; ++t) {
        bank.observe(entry_at(t, oracle::random_embedding(rng, 8), 0.99));
    }
    bank.observe(entry_at(9, oracle::random_embedding(rng, 8), 0.99, /*present=*/false));
    CHECK(bank.stable_streak() == 0); // presence is part of the gate
    CHECK(bank.long_term().empty());
}

TEST_CASE("first frame becomes l0 and survives heavy volume") {
    MemoryBank bank(MemoryConfig{});
    std::mt19937_64 rng(34);
    for (int t = 0; t < 200; ++t) {
        bank.observe(entry_at(t, oracle::random_embedding(rng, 8), 0.99));
    }
    REQUIRE(bank.initial().has_value());
    CHECK(bank.initial()->frame_index == 0);
    CHECK(bank.long_term().size() == 4); // capacity holds
    const auto context = bank.assemble_context();
    REQUIRE(!context.empty());
    CHECK(context.front()->frame_index == 0);
}

TEST_CASE("observe rejects out-of-order frames") {
    MemoryBank bank(MemoryConfig{});
    std::mt19937_64 rng(35);
    bank.observe(entry_at(3, oracle::random_embedding(rng, 8), 0.99));
    CHECK_THROWS_AS(bank.observe(entry_at(3, oracle::random_embedding(rng, 8), 0.99)),
                    ContractViolation);
    CHECK_THROWS_AS(bank.observe(entry_at(1, oracle::random_embedding(rng, 8), 0.99)),
                    ContractViolation);
}

TEST_CASE("entry confidence outside [0,1] is rejected") {
    CHECK_THROWS_AS(entry_at(0, Embedding({1.0}), 1.5), ContractViolation);
    CHECK_THROWS_AS(entry_at(0, Embedding({1.0}), -0.1), ContractViolation);
}

TEST_CASE("assemble_context ordering with hand-picked diversity winners") {
    // Angles chosen so the diversity pick in each five-frame window is known:
    // picks are frames 2, 7, 12, 17.
    const double theta[20] = {0.0, 0.1,  1.0, 0.2,  0.15,  // window 1 -> 2 (vs l0 at 0.0)
                              1.1, 0.9,  2.5, 1.05, 0.95,  // window 2 -> 7 (vs 1.0)
                              2.4, 2.45, 0.2, 2.5,  2.55,  // window 3 -> 12 (vs 2.5)
                              0.3, 0.25, 2.2, 0.35, 0.28}; // window 4 -> 17 (vs 0.2)
    MemoryBank bank(MemoryConfig{});
    oracle::ShadowBank shadow{MemoryConfig{}};
    for (int t = 0; t < 20; ++t) {
        const auto e = entry_at(t, angle_embedding(theta[t]), 0.99);
        bank.observe(e);
        shadow.observe(e);
    }

    std::vector<int> long_frames;
    for (const auto& e : bank.long_term()) long_frames.push_back(e.frame_index);
    CHECK(long_frames == std::vector<int>{2, 7, 12, 17});

    // Context: l0, long-term oldest->newest, then the short-term frames not
    // already emitted (frame 17 sits in both and stays in its long-term slot).
    std::vector<int> context;
    for (const auto* e : bank.assemble_context()) context.push_back(e->frame_index);
    CHECK(context == std::vector<int>{0, 2, 7, 12, 17, 14, 15, 16, 18, 19});
    CHECK(context == shadow.context_frames());

    SUBCASE("fresh session context is just l0") {
        MemoryBank fresh(MemoryConfig{});
        fresh.observe(entry_at(0, angle_embedding(0.3), 0.99));
        const auto ctx = fresh.assemble_context();
        REQUIRE(ctx.size() == 1);
        CHECK(ctx.front()->frame_index == 0);
    }
}

TEST_CASE("long-term slots rotate and eviction drops the oldest non-initial entry") {
    MemoryBank bank(MemoryConfig{});
    std::mt19937_64 rng(36);
    for (int t = 0; t < 30; ++t) {
        bank.observe(entry_at(t, oracle::random_embedding(rng, 8), 0.99));
    }
    // Six admissions happened; the first two picks were evicted.
    REQUIRE(bank.long_term().size() == 4);
    for (std::size_t i = 1; i < bank.long_term().size(); ++i) {
        CHECK(bank.long_term()[i - 1].frame_index < bank.long_term()[i].frame_index);
    }
    for (const auto& e : bank.long_term()) {
        REQUIRE(e.temporal_embedding_id.has_value());
        CHECK(*e.temporal_embedding_id >= 0);
        CHECK(*e.temporal_embedding_id < 4);
    }
    CHECK(bank.initial()->frame_index == 0);
}

TEST_CASE("bank transitions match the shadow oracle under randomized sequences") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 300; ++trial) {
        const MemoryConfig cfg{uniform_int(rng, 1, 6), 0.95, uniform_int(rng, 1, 5),
                               uniform_int(rng, 1, 8)};
        MemoryBank bank(cfg);
        oracle::ShadowBank shadow(cfg);
        const int length = uniform_int(rng, 1, 40);
        for (int t = 0; t < length; ++t) {
            const double conf = uniform_double(rng);
            const bool present = uniform_double(rng) < 0.8;
            const auto e = entry_at(t, oracle::random_embedding(rng, 6), conf, present);
            const auto outcome = bank.observe(e);
            shadow.observe(e);

            CHECK(bank.dump_state_line(outcome) == shadow_line(shadow, t, outcome.stable));
            CHECK(static_cast<int>(bank.long_term().size()) <= cfg.n_long);
            CHECK(static_cast<int>(bank.short_term().size()) <=
                  std::min(t + 1, cfg.n_short));
            CHECK(static_cast<int>(bank.buffer().size()) <= cfg.delta);
            if (outcome.admitted) CHECK(bank.buffer().empty());

            std::vector<int> context;
            for (const auto* p : bank.assemble_context()) context.push_back(p->frame_index);
            CHECK(context == shadow.context_frames());
        }
    }
}

TEST_CASE("replaying a sequence yields bit-identical bank traces") {
    std::mt19937_64 rng(38);
    std::vector<MemoryEntry> entries;
    for (int t = 0; t < 40; ++t) {
        entries.push_back(
            entry_at(t, oracle::random_embedding(rng, 16), uniform_double(rng)));
    }
    MemoryBank a(MemoryConfig{}), b(MemoryConfig{});
    for (const auto& e : entries) {
        const auto oa = a.observe(e);
        const auto ob = b.observe(e);
        CHECK(a.dump_state_line(oa) == b.dump_state_line(ob));
    }
}

TEST_CASE("memory config validation") {
    CHECK_THROWS_AS(MemoryBank(MemoryConfig{0, 0.95, 4, 6}), ContractViolation);
    CHECK_THROWS_AS(MemoryBank(MemoryConfig{5, 1.5, 4, 6}), ContractViolation);
    CHECK_THROWS_AS(MemoryBank(MemoryConfig{5, 0.95, 0, 6}), ContractViolation);
    CHECK_THROWS_AS(MemoryBank(MemoryConfig{5, 0.95, 4, 0}), ContractViolation);
}
