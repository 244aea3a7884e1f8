#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "entrain/geometry.hpp"
#include "entrain/rng.hpp"
#include "oracle/reference_sampler.hpp"
#include "test_support.hpp"

using namespace entrain;
using entrain::testing::alternating;
using entrain::testing::make_session;

namespace {

EmbeddingSet random_embeddings(const Session& s, std::uint32_t dim, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> z;
    EmbeddingSet emb(Level::semantic, dim);
    for (const auto& t : s.turns) {
        std::vector<double> v(dim);
        for (auto& x : v) x = z(gen);
        emb.add(t.turn_key, v);
    }
    return emb;
}

double plain_cosine(std::span<const double> a, std::span<const double> b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

} // namespace

TEST(Cosine, HandComputed) {
    const std::vector<double> a = {1, 0, 0};
    const std::vector<double> b = {1, 1, 0};
    const std::vector<double> c = {-2, 0, 0};
    EXPECT_NEAR(cosine_similarity(a, b), 1 / std::sqrt(2.0), 1e-15);
    EXPECT_EQ(cosine_similarity(a, c), -1.0);
    EXPECT_EQ(cosine_similarity(a, a), 1.0);
    const std::vector<double> d = {3, 4};
    const std::vector<double> e = {4, 3};
    EXPECT_NEAR(cosine_similarity(d, e), 24.0 / 25.0, 1e-15);
    EXPECT_THROW(cosine_similarity(a, d), std::invalid_argument);
    EXPECT_THROW(cosine_similarity(a, std::vector<double>{0, 0, 0}), std::invalid_argument);
}

TEST(Cosine, ScaleInvariant) {
    const std::vector<double> a = {0.3, -1.2, 4.4, 0.01};
    std::vector<double> b = {2.0, 0.5, -0.7, 3.3};
    const double before = cosine_similarity(a, b);
    for (auto& x : b) x *= 7.3;
    EXPECT_NEAR(cosine_similarity(a, b), before, 1e-15);
}

TEST(AdjacentSeries, OnePointPerExchange) {
    const auto s = make_session("g", {"A", "B", "B", "A"});
    EmbeddingSet emb(Level::semantic, 2);
    emb.add("g_0", std::vector<double>{1, 0});
    emb.add("g_1", std::vector<double>{0, 1});
    emb.add("g_2", std::vector<double>{1, 1});
    emb.add("g_3", std::vector<double>{1, 0});
    const auto series = adjacent_series(s, emb);
    ASSERT_EQ(series.size(), 2u);
    EXPECT_EQ(series.points[0].value, 0.0);
    EXPECT_NEAR(series.points[1].value, 1 / std::sqrt(2.0), 1e-15);
    EXPECT_EQ(series.points[1].index, 1u);
}

TEST(Rng, MatchesReferenceStream) {
    for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, ~0ULL}) {
        for (std::uint64_t idx : {0ULL, 7ULL, 1000ULL}) {
            EXPECT_EQ(rng::stream_seed(seed, "sess", idx),
                      oracle::reference_stream_seed(seed, "sess", idx));
        }
        rng::SplitMix64 a(seed);
        oracle::ReferenceStream b{seed};
        for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b.next());
    }
}

TEST(Rng, UniformBelowInRangeAndBalanced) {
    rng::SplitMix64 g(9);
    std::vector<int> counts(7);
    for (int i = 0; i < 70000; ++i) {
        const auto v = g.uniform_below(7);
        ASSERT_LT(v, 7u);
        ++counts[v];
    }
    for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, NormalMoments) {
    rng::SplitMix64 g(3);
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double x = g.normal();
        s += x;
        s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
    for (int i = 0; i < 10000; ++i) EXPECT_LE(std::abs(g.truncated_normal(2.0)), 2.0);
}

TEST(Rng, SampleFrontDrawsDistinctItems) {
    std::vector<int> items(20);
    std::iota(items.begin(), items.end(), 0);
    rng::SplitMix64 g(5);
    const auto k = rng::sample_front(std::span<int>(items), 8, g);
    EXPECT_EQ(k, 8u);
    EXPECT_EQ(std::set<int>(items.begin(), items.begin() + 8).size(), 8u);
    std::vector<int> few = {1, 2, 3};
    EXPECT_EQ(rng::sample_front(std::span<int>(few), 10, g), 3u);
    EXPECT_EQ(few, (std::vector<int>{1, 2, 3}));
}

TEST(Baseline, MatchesReferenceSampler) {
    const auto s = make_session("ref", {"A", "B", "A", "A", "B", "A", "B", "B", "A", "B", "A", "B",
                                       "A", "B", "A", "B", "A", "B", "A", "B", "A", "B", "A", "B",
                                       "A", "B", "A", "B", "A", "B"});
    const auto emb = random_embeddings(s, 6, 77);
    for (auto anchor : {BaselineAnchor::prev, BaselineAnchor::next}) {
        for (std::size_t k : {1u, 4u, 10u, 40u}) {
            const BaselineOptions opts{k, 2024, anchor};
            const auto series = nonadjacent_baseline(s, emb, opts);
            const auto ex = exchanges(s);
            ASSERT_EQ(series.size(), ex.size());
            for (std::size_t e = 0; e < ex.size(); ++e) {
                const bool prev = anchor == BaselineAnchor::prev;
                const std::size_t a = prev ? ex[e].prev_turn : ex[e].next_turn;
                const std::size_t adj = prev ? ex[e].next_turn : ex[e].prev_turn;
                std::vector<std::size_t> pool;
                for (std::size_t i = 0; i < s.turns.size(); ++i) {
                    if (i != adj && s.turns[i].speaker == s.turns[adj].speaker) pool.push_back(i);
                }
                const auto drawn = oracle::reference_draw(pool, k, 2024, "ref", e);
                double sum = 0;
                for (auto i : drawn) {
                    sum += plain_cosine(emb.at(s.turns[a].turn_key), emb.at(s.turns[i].turn_key));
                }
                EXPECT_NEAR(series.points[e].value, sum / drawn.size(), 1e-14)
                    << "exchange " << e << " k " << k;
                EXPECT_EQ(series.points[e].index, e);
            }
        }
    }
}

TEST(Baseline, ExcludesAdjacentTurn) {
    // Only one B turn: every pool is empty.
    const auto s = make_session("x", {"A", "B", "A"});
    EmbeddingSet emb(Level::semantic, 2);
    emb.add("x_0", std::vector<double>{1, 0});
    emb.add("x_1", std::vector<double>{0, 1});
    emb.add("x_2", std::vector<double>{1, 1});
    const auto series = nonadjacent_baseline(s, emb, {10, 0, BaselineAnchor::prev});
    // Exchange 0 (A0,B1): pool of B minus B1 is empty. Exchange 1 (B1,A2): pool {A0}.
    ASSERT_EQ(series.size(), 1u);
    EXPECT_EQ(series.points[0].index, 1u);
    EXPECT_EQ(series.points[0].value, 0.0);
    EXPECT_FALSE(series.notes.empty());
}

TEST(Baseline, DeterministicAndSeedSensitive) {
    const auto s = make_session("d", alternating(60));
    const auto emb = random_embeddings(s, 8, 1);
    const auto a = nonadjacent_baseline(s, emb, {5, 11, BaselineAnchor::prev});
    const auto b = nonadjacent_baseline(s, emb, {5, 11, BaselineAnchor::prev});
    const auto c = nonadjacent_baseline(s, emb, {5, 12, BaselineAnchor::prev});
    EXPECT_EQ(a.points, b.points);
    EXPECT_NE(a.points, c.points);
}

TEST(Baseline, IndependentOfEmbeddingInsertionOrder) {
    const auto s = make_session("p", alternating(30));
    const auto emb = random_embeddings(s, 5, 3);
    EmbeddingSet shuffled(Level::semantic, 5);
    for (std::size_t i = s.turns.size(); i-- > 0;) {
        const auto row = emb.at(s.turns[i].turn_key);
        shuffled.add(s.turns[i].turn_key, std::vector<double>(row.begin(), row.end()));
    }
    EXPECT_EQ(nonadjacent_baseline(s, emb).points, nonadjacent_baseline(s, shuffled).points);
}

TEST(SelfSeries, ConsecutiveTurnsOfOneSpeaker) {
    const auto s = make_session("q", {"A", "B", "A", "B", "A"});
    EmbeddingSet emb(Level::semantic, 2);
    emb.add("q_0", std::vector<double>{1, 0});
    emb.add("q_1", std::vector<double>{1, 0});
    emb.add("q_2", std::vector<double>{0, 1});
    emb.add("q_3", std::vector<double>{1, 0});
    emb.add("q_4", std::vector<double>{0, -1});
    const auto a = self_distance_series(s, emb, "A");
    ASSERT_EQ(a.size(), 2u);
    EXPECT_EQ(a.kind, SeriesKind::self_a);
    EXPECT_EQ(a.points[0].value, 0.0);
    EXPECT_EQ(a.points[1].value, -1.0);
    const auto b = self_distance_series(s, emb, "B");
    EXPECT_EQ(b.kind, SeriesKind::self_b);
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(b.points[0].value, 1.0);
    EXPECT_THROW(self_distance_series(s, emb, "C"), InputError);
}
