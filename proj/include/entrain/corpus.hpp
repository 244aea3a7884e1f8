#pragma once

// Sessions, turns, embedding sets, and turn exchanges.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "entrain/error.hpp"

namespace entrain {

enum class Level { semantic, auditory };

inline constexpr std::string_view level_name(Level level) noexcept {
    return level == Level::semantic ? "semantic" : "auditory";
}

inline std::optional<Level> parse_level(std::string_view name) noexcept {
    if (name == "semantic") return Level::semantic;
    if (name == "auditory") return Level::auditory;
    return std::nullopt;
}

// Expected vector widths of the reference sentence and audio encoders.
inline constexpr std::uint32_t default_dim(Level level) noexcept {
    return level == Level::semantic ? 768 : 512;
}

struct TurnRecord {
    std::string session_id;
    std::string speaker;
    std::size_t turn_index = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    std::string turn_key;
    std::optional<std::string> text;

    friend bool operator==(const TurnRecord&, const TurnRecord&) = default;
};

struct Session {
    std::string session_id;
    std::vector<TurnRecord> turns;

    // Speaker labels in order of first appearance.
    std::vector<std::string> speakers() const {
        std::vector<std::string> out;
        for (const auto& t : turns) {
            if (std::find(out.begin(), out.end(), t.speaker) == out.end()) {
                out.push_back(t.speaker);
            }
        }
        return out;
    }

    friend bool operator==(const Session&, const Session&) = default;
};

struct ExchangePair {
    std::size_t exchange_index = 0;
    std::size_t prev_turn = 0;  // position of the earlier turn in Session::turns
    std::size_t next_turn = 0;

    friend bool operator==(const ExchangePair&, const ExchangePair&) = default;
};

// One pair per consecutive turn pair whose speakers differ.
inline std::vector<ExchangePair> exchanges(const Session& session) {
    std::vector<ExchangePair> out;
    for (std::size_t i = 1; i < session.turns.size(); ++i) {
        if (session.turns[i - 1].speaker != session.turns[i].speaker) {
            out.push_back({out.size(), i - 1, i});
        }
    }
    return out;
}

// Fixed-width vectors keyed by turn_key, kept in insertion order. Values are
// held in double precision; the on-disk format is f32 and widens exactly.
class EmbeddingSet {
public:
    EmbeddingSet() = default;
    EmbeddingSet(Level level, std::uint32_t dim) : level_(level), dim_(dim) {
        if (dim == 0) {
            throw InputError("embedding dim must be positive");
        }
    }

    Level level() const noexcept { return level_; }
    std::uint32_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return keys_.size(); }
    bool empty() const noexcept { return keys_.empty(); }
    const std::vector<std::string>& keys() const noexcept { return keys_; }

    bool contains(std::string_view key) const {
        return index_.find(std::string(key)) != index_.end();
    }

    // Adds a vector after checking width, finiteness, and nonzero norm.
    template <typename T>
    void add(std::string key, std::span<const T> values) {
        if (values.size() != dim_) {
            throw InputError("embedding for turn_key '" + key + "' has " +
                             std::to_string(values.size()) + " entries, expected " +
                             std::to_string(dim_));
        }
        double norm2 = 0.0;
        for (T v : values) {
            if (!std::isfinite(static_cast<double>(v))) {
                throw InputError("non-finite value in embedding for turn_key '" + key + "'");
            }
            norm2 += static_cast<double>(v) * static_cast<double>(v);
        }
        if (!(norm2 > 0.0)) {
            throw InputError("zero vector for turn_key '" + key + "'");
        }
        if (!index_.emplace(key, keys_.size()).second) {
            throw InputError("duplicate turn_key '" + key + "' in embedding set");
        }
        keys_.push_back(std::move(key));
        data_.insert(data_.end(), values.begin(), values.end());
    }

    void add(std::string key, const std::vector<double>& values) {
        add(std::move(key), std::span<const double>(values));
    }

    std::span<const double> at(std::string_view key) const {
        const auto it = index_.find(std::string(key));
        if (it == index_.end()) {
            throw InputError("unresolved turn_key '" + std::string(key) + "' in " +
                             std::string(level_name(level_)) + " embeddings");
        }
        return row(it->second);
    }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }

private:
    Level level_ = Level::semantic;
    std::uint32_t dim_ = 0;
    std::vector<std::string> keys_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> data_;
};

struct Corpus {
    std::vector<Session> sessions;
    // Embedding file references exactly as written in the manifest header.
    std::map<Level, std::string> embedding_files;

    std::size_t turn_count() const {
        std::size_t n = 0;
        for (const auto& s : sessions) n += s.turns.size();
        return n;
    }

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Throws InputError describing the first violated TurnRecord/Session invariant.
inline void validate_session(const Session& session) {
    const std::string where = "session '" + session.session_id + "'";
    if (session.turns.empty()) {
        throw InputError(where + ": no turns");
    }
    for (std::size_t i = 0; i < session.turns.size(); ++i) {
        const TurnRecord& t = session.turns[i];
        if (t.session_id != session.session_id) {
            throw InputError(where + ": turn '" + t.turn_key + "' belongs to session '" +
                             t.session_id + "'");
        }
        if (t.turn_index != i) {
            throw InputError(where + ": turn_index values must be 0..N-1 without gaps (found " +
                             std::to_string(t.turn_index) + " at position " + std::to_string(i) +
                             ")");
        }
        if (!std::isfinite(t.start_s) || !std::isfinite(t.end_s) || t.start_s < 0.0) {
            throw InputError(where + ": turn '" + t.turn_key + "' has invalid time span");
        }
        if (!(t.end_s > t.start_s)) {
            throw InputError(where + ": turn '" + t.turn_key + "' must have end_s > start_s");
        }
        if (i > 0 && t.start_s < session.turns[i - 1].start_s) {
            throw InputError(where + ": non-monotone start_s at turn_index " +
                             std::to_string(i));
        }
        if (t.turn_key.empty()) {
            throw InputError(where + ": empty turn_key at turn_index " + std::to_string(i));
        }
    }
    const auto speakers = session.speakers();
    if (speakers.size() != 2) {
        throw InputError(where + ": speaker cardinality must be exactly 2, found " +
                         std::to_string(speakers.size()));
    }
}

inline void validate_corpus(const Corpus& corpus) {
    std::unordered_set<std::string> keys;
    std::unordered_set<std::string> ids;
    for (const auto& s : corpus.sessions) {
        if (!ids.insert(s.session_id).second) {
            throw InputError("duplicate session_id '" + s.session_id + "'");
        }
        validate_session(s);
        for (const auto& t : s.turns) {
            if (!keys.insert(t.turn_key).second) {
                throw InputError("duplicate turn_key '" + t.turn_key + "'");
            }
        }
    }
}

// Every turn of every session must resolve in `emb`.
inline void check_coverage(const Corpus& corpus, const EmbeddingSet& emb) {
    for (const auto& s : corpus.sessions) {
        for (const auto& t : s.turns) {
            if (!emb.contains(t.turn_key)) {
                throw InputError("unresolved turn_key '" + t.turn_key + "' (session '" +
                                 s.session_id + "') in " +
                                 std::string(level_name(emb.level())) + " embeddings");
            }
        }
    }
}

// Optional policy: runs of consecutive same-speaker turns collapse into one
// turn spanning the run. The merged turn_key joins the constituent keys with
// '+', and its vector is the sum of the constituents' unit-normalized vectors.
inline Session merge_same_speaker(const Session& session) {
    Session out{session.session_id, {}};
    for (const auto& t : session.turns) {
        if (!out.turns.empty() && out.turns.back().speaker == t.speaker) {
            TurnRecord& last = out.turns.back();
            last.end_s = std::max(last.end_s, t.end_s);
            last.turn_key += "+" + t.turn_key;
            if (t.text) {
                last.text = last.text ? *last.text + " " + *t.text : *t.text;
            }
        } else {
            TurnRecord merged = t;
            merged.turn_index = out.turns.size();
            out.turns.push_back(std::move(merged));
        }
    }
    return out;
}

// Copy of `emb` extended with a vector for every merged turn_key in `merged`.
inline EmbeddingSet merge_embeddings(std::span<const Session> merged, const EmbeddingSet& emb) {
    EmbeddingSet out = emb;
    std::vector<double> acc(emb.dim());
    for (const auto& session : merged) {
        for (const auto& t : session.turns) {
            if (out.contains(t.turn_key)) continue;
            std::fill(acc.begin(), acc.end(), 0.0);
            std::size_t begin = 0;
            while (begin <= t.turn_key.size()) {
                std::size_t end = t.turn_key.find('+', begin);
                if (end == std::string::npos) end = t.turn_key.size();
                const auto v = emb.at(std::string_view(t.turn_key).substr(begin, end - begin));
                double norm2 = 0.0;
                for (double x : v) norm2 += x * x;
                const double inv = 1.0 / std::sqrt(norm2);
                for (std::size_t i = 0; i < v.size(); ++i) acc[i] += v[i] * inv;
                begin = end + 1;
            }
            out.add(t.turn_key, acc);
        }
    }
    return out;
}

} // namespace entrain
