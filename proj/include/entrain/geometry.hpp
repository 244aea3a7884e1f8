#pragma once

// Cosine similarity and the per-session similarity series.
//
// All series hold raw cosine similarity (higher = closer):
//   adjacent:   cos(A, B) for the two turns of each exchange
//   baseline:   mean of cos(anchor, B_rand) over up to k partner turns drawn
//               without replacement, excluding the adjacent turn
//   self:       cos(A_i, A_{i+1}) for one speaker's consecutive turns

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "entrain/corpus.hpp"
#include "entrain/error.hpp"
#include "entrain/rng.hpp"

namespace entrain {

enum class SeriesKind { adjacent, nonadjacent_baseline, self_a, self_b };

struct SeriesPoint {
    std::size_t index = 0;
    double value = 0.0;

    friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

struct SimilaritySeries {
    Level level = Level::semantic;
    SeriesKind kind = SeriesKind::adjacent;
    std::vector<SeriesPoint> points;
    std::vector<std::string> notes;

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }

    std::vector<double> values() const {
        std::vector<double> out;
        out.reserve(points.size());
        for (const auto& p : points) out.push_back(p.value);
        return out;
    }
};

inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw std::invalid_argument("cosine_similarity: dimension mismatch (" +
                                    std::to_string(u.size()) + " vs " + std::to_string(v.size()) +
                                    ")");
    }
    double uv = 0.0;
    double uu = 0.0;
    double vv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uv += u[i] * v[i];
        uu += u[i] * u[i];
        vv += v[i] * v[i];
    }
    if (!(uu > 0.0) || !(vv > 0.0)) {
        throw std::invalid_argument("cosine_similarity: zero-norm input");
    }
    return std::clamp(uv / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

inline SimilaritySeries adjacent_series(const Session& session, const EmbeddingSet& emb) {
    SimilaritySeries out{emb.level(), SeriesKind::adjacent, {}, {}};
    for (const auto& ex : exchanges(session)) {
        const auto& a = session.turns[ex.prev_turn];
        const auto& b = session.turns[ex.next_turn];
        out.points.push_back({ex.exchange_index,
                              cosine_similarity(emb.at(a.turn_key), emb.at(b.turn_key))});
    }
    return out;
}

enum class BaselineAnchor { prev, next };

struct BaselineOptions {
    std::size_t k = 10;
    std::uint64_t seed = 0;
    BaselineAnchor anchor = BaselineAnchor::prev;
};

// For each exchange: anchor = the earlier turn (or the later one with
// BaselineAnchor::next); pool = every turn of the other speaker in the session
// except the adjacent turn, in chronological order. min(k, |pool|) pool turns
// are drawn with rng::sample_front from the stream
// rng::stream_seed(seed, session_id, exchange_index), and the point value is
// the mean cosine between the anchor and the drawn turns, summed in draw
// order. Exchanges with an empty pool produce no point.
inline SimilaritySeries nonadjacent_baseline(const Session& session, const EmbeddingSet& emb,
                                             const BaselineOptions& options = {}) {
    if (options.k < 1) {
        throw std::invalid_argument("nonadjacent_baseline: k must be >= 1");
    }
    SimilaritySeries out{emb.level(), SeriesKind::nonadjacent_baseline, {}, {}};
    const auto exs = exchanges(session);
    std::size_t short_pools = 0;
    std::vector<std::size_t> pool;
    for (const auto& ex : exs) {
        const bool prev = options.anchor == BaselineAnchor::prev;
        const std::size_t anchor = prev ? ex.prev_turn : ex.next_turn;
        const std::size_t adjacent = prev ? ex.next_turn : ex.prev_turn;
        const std::string& partner = session.turns[adjacent].speaker;

        pool.clear();
        for (std::size_t i = 0; i < session.turns.size(); ++i) {
            if (i != adjacent && session.turns[i].speaker == partner) pool.push_back(i);
        }
        if (pool.empty()) continue;
        if (pool.size() < options.k) ++short_pools;

        rng::SplitMix64 gen(rng::stream_seed(options.seed, session.session_id, ex.exchange_index));
        const std::size_t taken = rng::sample_front(std::span<std::size_t>(pool), options.k, gen);

        const auto anchor_vec = emb.at(session.turns[anchor].turn_key);
        double sum = 0.0;
        for (std::size_t j = 0; j < taken; ++j) {
            sum += cosine_similarity(anchor_vec, emb.at(session.turns[pool[j]].turn_key));
        }
        out.points.push_back({ex.exchange_index, sum / static_cast<double>(taken)});
    }
    if (!exs.empty() && out.points.empty()) {
        out.notes.push_back("no exchange has non-adjacent partner turns; baseline is empty");
    } else if (short_pools > 0) {
        out.notes.push_back(std::to_string(short_pools) + " exchange(s) had fewer than k=" +
                            std::to_string(options.k) +
                            " non-adjacent partner turns; all available turns were used");
    }
    return out;
}

inline SimilaritySeries self_distance_series(const Session& session, const EmbeddingSet& emb,
                                             const std::string& speaker) {
    const auto speakers = session.speakers();
    const auto it = std::find(speakers.begin(), speakers.end(), speaker);
    if (it == speakers.end()) {
        throw InputError("unknown speaker '" + speaker + "' in session '" + session.session_id +
                         "'");
    }
    const auto kind = it == speakers.begin() ? SeriesKind::self_a : SeriesKind::self_b;
    SimilaritySeries out{emb.level(), kind, {}, {}};
    const TurnRecord* last = nullptr;
    for (const auto& t : session.turns) {
        if (t.speaker != speaker) continue;
        if (last != nullptr) {
            out.points.push_back(
                {out.points.size(), cosine_similarity(emb.at(last->turn_key), emb.at(t.turn_key))});
        }
        last = &t;
    }
    return out;
}

} // namespace entrain
