#pragma once

// Synthetic sessions with planted entrainment effects.
//
// Effects are planted directly in cosine space. Speakers A and B alternate
// (A on even turns). Target values are drawn first:
//
//   adjacent  a_t = delta + slope * t + sigma * z_t          t = 0 .. n-2
//   self      s^A_j = sigma * u_j,  s^B_j = sigma * (rho u_j + sqrt(1-rho^2) w_j)
//
// with z, u, w independent standard normals truncated at |4|. Unit vectors are
// then built turn by turn on the sphere so that
//
//   cos(v_t, v_{t+1}) = a_t        (every exchange)
//   cos(v_t, v_{t+2}) = s_j        (same speaker, consecutive turns)
//
// hold exactly: v_t = x e1 + y e2 + z u, where e1 = v_{t-1}, e2 is v_{t-2}
// orthonormalized against e1, x = a_{t-1}, y solves the self constraint, and u
// is a uniformly random unit direction orthogonal to both. Pairs further apart
// get no planted structure, so non-adjacent partner turns have expected
// cosine ~0 and the adjacent/baseline gap is ~delta. The exchange immediately
// before the anchor also sits in the baseline pool, which shrinks the gap by
// about delta * k / |pool|. Stored values are rounded to f32 so in-memory and
// on-disk corpora are bit-identical.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "entrain/corpus.hpp"
#include "entrain/corpus_io.hpp"
#include "entrain/error.hpp"
#include "entrain/rng.hpp"

namespace entrain::synth {

struct SynthSpec {
    std::size_t n_turns = 100;
    std::size_t dim = 16;
    double base_noise_sigma = 0.05;
    double proximity_delta = 0.0;
    double convergence_slope = 0.0;
    double synchrony_coupling = 0.0;
    std::uint64_t seed = 0;
};

inline constexpr double truncation = 4.0;

// Throws InputError when the spec is malformed or when some planted cosine
// could leave [-1, 1] (or the sequential construction could run out of room).
inline void check_feasible(const SynthSpec& spec) {
    if (spec.n_turns < 4) throw InputError("infeasible synth spec: n_turns must be >= 4");
    if (spec.dim < 3) throw InputError("infeasible synth spec: dim must be >= 3");
    if (!(spec.base_noise_sigma >= 0.0) || !std::isfinite(spec.base_noise_sigma)) {
        throw InputError("infeasible synth spec: base_noise_sigma must be finite and >= 0");
    }
    if (!std::isfinite(spec.proximity_delta) || !std::isfinite(spec.convergence_slope)) {
        throw InputError("infeasible synth spec: effect sizes must be finite");
    }
    const double rho = spec.synchrony_coupling;
    if (!(rho >= -1.0 && rho <= 1.0)) {
        throw InputError("infeasible synth spec: synchrony_coupling must lie in [-1, 1]");
    }
    const double sigma = spec.base_noise_sigma;
    const double last = static_cast<double>(spec.n_turns - 2);
    const double drift = std::max(std::abs(spec.proximity_delta),
                                  std::abs(spec.proximity_delta + spec.convergence_slope * last));
    const double a_max = drift + truncation * sigma;
    const double s_max = truncation * sigma * (std::abs(rho) + std::sqrt(1.0 - rho * rho));
    if (!(a_max < 1.0)) {
        throw InputError("infeasible synth spec: adjacent similarity can reach " +
                         std::to_string(a_max) + " (must stay below 1)");
    }
    const double y_max = (s_max + a_max * a_max) / std::sqrt(1.0 - a_max * a_max);
    if (!(a_max * a_max + y_max * y_max < 1.0)) {
        throw InputError("infeasible synth spec: adjacent/self similarity targets cannot be "
                         "realized together (reduce delta, slope, or sigma)");
    }
}

namespace detail {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Uniform random unit vector orthogonal to every vector in `basis`
// (orthonormal).
inline Vec random_orthogonal(std::size_t dim, const std::vector<const Vec*>& basis,
                             rng::SplitMix64& gen) {
    Vec g(dim);
    for (;;) {
        for (auto& x : g) x = gen.normal();
        for (int pass = 0; pass < 2; ++pass) {
            for (const Vec* e : basis) {
                const double c = dot(g, *e);
                for (std::size_t i = 0; i < dim; ++i) g[i] -= c * (*e)[i];
            }
        }
        const double norm = std::sqrt(dot(g, g));
        if (norm > 1e-6) {
            for (auto& x : g) x /= norm;
            return g;
        }
    }
}

inline std::string turn_key(const std::string& session_id, std::size_t t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%04zu", t);
    return session_id + buf;
}

} // namespace detail

struct GeneratedSession {
    Session session;
    EmbeddingSet embeddings;
};

// Alternating A/B session; turn t spans [2t, 2t + 1.5) seconds. The random
// stream is keyed by (seed, session_id, level), so two levels generated from
// one spec are independent.
inline GeneratedSession generate_session(const SynthSpec& spec, const std::string& session_id = "synth",
                                         Level level = Level::semantic) {
    check_feasible(spec);
    const std::size_t n = spec.n_turns;
    const std::size_t dim = spec.dim;
    const double sigma = spec.base_noise_sigma;
    const double rho = spec.synchrony_coupling;
    rng::SplitMix64 gen(rng::stream_seed(
        spec.seed, "synth/" + session_id + "/" + std::string(level_name(level)), 0));

    std::vector<double> adjacent(n - 1);
    for (std::size_t t = 0; t + 1 < n; ++t) {
        adjacent[t] = spec.proximity_delta + spec.convergence_slope * static_cast<double>(t) +
                      sigma * gen.truncated_normal(truncation);
    }
    // self[0][j]: A's j-th self similarity; self[1][j]: B's.
    const std::size_t n_self = n / 2;
    std::vector<double> self[2] = {std::vector<double>(n_self), std::vector<double>(n_self)};
    for (std::size_t j = 0; j < n_self; ++j) {
        const double u = gen.truncated_normal(truncation);
        const double w = gen.truncated_normal(truncation);
        self[0][j] = sigma * u;
        self[1][j] = sigma * (rho * u + std::sqrt(1.0 - rho * rho) * w);
    }

    std::vector<detail::Vec> v(n);
    v[0] = detail::random_orthogonal(dim, {}, gen);
    {
        const double x = adjacent[0];
        const auto u = detail::random_orthogonal(dim, {&v[0]}, gen);
        const double z = std::sqrt(std::max(0.0, 1.0 - x * x));
        v[1].resize(dim);
        for (std::size_t i = 0; i < dim; ++i) v[1][i] = x * v[0][i] + z * u[i];
    }
    detail::Vec e2(dim);
    for (std::size_t t = 2; t < n; ++t) {
        const detail::Vec& e1 = v[t - 1];
        const double c = detail::dot(v[t - 2], e1);
        const double s = std::sqrt(std::max(1e-300, 1.0 - c * c));
        for (std::size_t i = 0; i < dim; ++i) e2[i] = (v[t - 2][i] - c * e1[i]) / s;
        const double x = adjacent[t - 1];
        const double target = self[t % 2][t / 2 - 1];
        const double y = (target - c * x) / s;
        const double z = std::sqrt(std::max(0.0, 1.0 - x * x - y * y));
        const auto u = detail::random_orthogonal(dim, {&e1, &e2}, gen);
        v[t].resize(dim);
        for (std::size_t i = 0; i < dim; ++i) v[t][i] = x * e1[i] + y * e2[i] + z * u[i];
    }

    GeneratedSession out{{session_id, {}}, EmbeddingSet(level, static_cast<std::uint32_t>(dim))};
    std::vector<double> rounded(dim);
    for (std::size_t t = 0; t < n; ++t) {
        TurnRecord rec;
        rec.session_id = session_id;
        rec.speaker = t % 2 == 0 ? "A" : "B";
        rec.turn_index = t;
        rec.start_s = 2.0 * static_cast<double>(t);
        rec.end_s = rec.start_s + 1.5;
        rec.turn_key = detail::turn_key(session_id, t);
        for (std::size_t i = 0; i < dim; ++i) {
            rounded[i] = static_cast<double>(static_cast<float>(v[t][i]));
        }
        out.embeddings.add(rec.turn_key, rounded);
        out.session.turns.push_back(std::move(rec));
    }
    return out;
}

// One session of a synthetic corpus: a spec per generated level. All levels
// must agree on n_turns.
struct SessionPlan {
    std::string session_id;
    std::map<Level, SynthSpec> levels;
};

struct CorpusFiles {
    std::string manifest = "manifest.jsonl";
    std::map<Level, std::string> embeddings = {{Level::semantic, "semantic.emb"},
                                               {Level::auditory, "auditory.emb"}};
};

// Generates every planned session in memory.
inline LoadedCorpus build_corpus(const std::vector<SessionPlan>& plans,
                                 const CorpusFiles& files = {}) {
    if (plans.empty()) throw InputError("synth: no sessions planned");
    LoadedCorpus out;
    const auto& first_levels = plans.front().levels;
    for (const auto& [level, _] : first_levels) {
        out.corpus.embedding_files[level] = files.embeddings.at(level);
    }
    for (const auto& plan : plans) {
        if (plan.levels.empty()) throw InputError("synth: session '" + plan.session_id + "' has no levels");
        std::optional<std::size_t> n_turns;
        for (const auto& [level, spec] : plan.levels) {
            if (!first_levels.contains(level)) {
                throw InputError("synth: every session must generate the same levels");
            }
            if (n_turns && *n_turns != spec.n_turns) {
                throw InputError("synth: levels of session '" + plan.session_id +
                                 "' disagree on n_turns");
            }
            n_turns = spec.n_turns;
            auto g = generate_session(spec, plan.session_id, level);
            auto [it, inserted] = out.embeddings.try_emplace(level, level, g.embeddings.dim());
            if (it->second.dim() != g.embeddings.dim()) {
                throw InputError("synth: sessions disagree on " + std::string(level_name(level)) +
                                 " dim");
            }
            for (const auto& key : g.embeddings.keys()) {
                const auto row = g.embeddings.at(key);
                it->second.add(key, std::span<const double>(row));
            }
            if (level == plan.levels.begin()->first) out.corpus.sessions.push_back(std::move(g.session));
        }
        if (plan.levels.size() != first_levels.size()) {
            throw InputError("synth: every session must generate the same levels");
        }
    }
    validate_corpus(out.corpus);
    return out;
}

// Generates the corpus and writes the manifest plus one binary embedding file
// per level into `dir`. Output bytes depend only on the plans.
inline LoadedCorpus generate_corpus(const std::vector<SessionPlan>& plans, const fs::path& dir,
                                    const CorpusFiles& files = {}) {
    LoadedCorpus out = build_corpus(plans, files);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InputError("cannot create '" + dir.string() + "': " + ec.message());
    save_manifest(out.corpus, dir / files.manifest);
    for (const auto& [level, emb] : out.embeddings) {
        save_embeddings(emb, dir / files.embeddings.at(level));
    }
    return out;
}

namespace detail {

inline void apply_fields(SynthSpec& spec, const nlohmann::json& j, const std::string& where) {
    static const char* const known[] = {"n_turns",           "dim",
                                        "base_noise_sigma",  "proximity_delta",
                                        "convergence_slope", "synchrony_coupling",
                                        "seed",              "session_id",
                                        "semantic",          "auditory"};
    for (const auto& [k, _] : j.items()) {
        if (std::find(std::begin(known), std::end(known), k) == std::end(known)) {
            throw InputError(where + ": unknown field '" + k + "'");
        }
    }
    auto get_count = [&](const char* f, std::size_t& dst) {
        if (!j.contains(f)) return;
        if (!j[f].is_number_unsigned()) throw InputError(where + ": '" + f + "' must be a non-negative integer");
        dst = j[f].get<std::size_t>();
    };
    auto get_real = [&](const char* f, double& dst) {
        if (!j.contains(f)) return;
        if (!j[f].is_number()) throw InputError(where + ": '" + f + "' must be a number");
        dst = j[f].get<double>();
    };
    get_count("n_turns", spec.n_turns);
    get_count("dim", spec.dim);
    get_real("base_noise_sigma", spec.base_noise_sigma);
    get_real("proximity_delta", spec.proximity_delta);
    get_real("convergence_slope", spec.convergence_slope);
    get_real("synchrony_coupling", spec.synchrony_coupling);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw InputError(where + ": 'seed' must be a non-negative integer");
        spec.seed = j["seed"].get<std::uint64_t>();
    }
}

} // namespace detail

// Parses a synth spec document:
//   {"levels": ["semantic", "auditory"],          (default: both)
//    "defaults": {SynthSpec fields},
//    "sessions": [{"session_id": "s01", SynthSpec fields,
//                  "semantic": {overrides}, "auditory": {overrides}}, ...]}
// Unset dims default to the level's standard width (768 / 512); unset seeds
// default to the session's 1-based position; unset session ids to "sNN".
inline std::vector<SessionPlan> parse_plan(const nlohmann::json& doc) {
    if (!doc.is_object()) throw InputError("synth spec: expected a JSON object");
    for (const auto& [k, _] : doc.items()) {
        if (k != "levels" && k != "defaults" && k != "sessions") {
            throw InputError("synth spec: unknown field '" + k + "'");
        }
    }
    std::vector<Level> levels = {Level::semantic, Level::auditory};
    if (doc.contains("levels")) {
        levels.clear();
        if (!doc["levels"].is_array()) throw InputError("synth spec: 'levels' must be an array");
        for (const auto& l : doc["levels"]) {
            const auto level = l.is_string() ? parse_level(l.get<std::string>()) : std::nullopt;
            if (!level) throw InputError("synth spec: unknown level " + l.dump());
            levels.push_back(*level);
        }
        if (levels.empty()) throw InputError("synth spec: 'levels' is empty");
    }
    const nlohmann::json defaults = doc.value("defaults", nlohmann::json::object());
    if (!defaults.is_object()) throw InputError("synth spec: 'defaults' must be an object");
    if (!doc.contains("sessions") || !doc["sessions"].is_array() || doc["sessions"].empty()) {
        throw InputError("synth spec: 'sessions' must be a non-empty array");
    }
    std::vector<SessionPlan> plans;
    std::size_t pos = 0;
    for (const auto& s : doc["sessions"]) {
        ++pos;
        const std::string where = "synth spec: sessions[" + std::to_string(pos - 1) + "]";
        if (!s.is_object()) throw InputError(where + ": expected an object");
        SessionPlan plan;
        char id[16];
        std::snprintf(id, sizeof id, "s%02zu", pos);
        plan.session_id = s.contains("session_id") && s["session_id"].is_string()
                              ? s["session_id"].get<std::string>()
                              : std::string(id);
        for (Level level : levels) {
            SynthSpec spec;
            spec.dim = default_dim(level);
            spec.seed = pos;
            detail::apply_fields(spec, defaults, "synth spec: defaults");
            detail::apply_fields(spec, s, where);
            const std::string lname(level_name(level));
            if (s.contains(lname)) {
                if (!s[lname].is_object()) throw InputError(where + ": '" + lname + "' must be an object");
                detail::apply_fields(spec, s[lname], where + "." + lname);
            }
            check_feasible(spec);
            plan.levels.emplace(level, spec);
        }
        plans.push_back(std::move(plan));
    }
    return plans;
}

} // namespace entrain::synth
