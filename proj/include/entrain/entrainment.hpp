#pragma once

// Session-level entrainment metrics.
//
//   proximity    paired t-test of adjacent vs. non-adjacent baseline similarity
//                over the exchanges where both are defined; t > 0 means partners
//                are closer at exchanges than to random partner turns
//   convergence  Pearson r of adjacent similarity against time (exchange index,
//                or the earlier turn's start time); r > 0 means rising similarity
//   synchrony    Pearson r between the two speakers' self-similarity series,
//                paired by index and truncated to the shorter one
//   cross-level  Pearson r between the auditory and semantic adjacent series

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "entrain/corpus.hpp"
#include "entrain/error.hpp"
#include "entrain/geometry.hpp"
#include "entrain/stats.hpp"

namespace entrain {

using stats::Tier;

enum class Direction { positive, negative };
enum class TimeAxis { index, seconds };

struct Significance {
    double alpha = 0.05;
    std::size_t m = 1;

    Tier classify(double p) const { return stats::classify_significance(p, alpha, m); }
};

struct ProximityResult {
    std::string session_id;
    Level level = Level::semantic;
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;
    double mean_adjacent = 0.0;
    double mean_nonadjacent = 0.0;
    Tier tier = Tier::none;
    Direction direction = Direction::negative;
    std::vector<std::string> notes;
};

struct CorrelationResult {
    std::string session_id;
    std::string subject;  // level name, or "auditory~semantic" for the cross-level pair
    double r = 0.0;
    std::size_t n = 0;
    double p = 1.0;
    Tier tier = Tier::none;
};

inline constexpr std::string_view cross_level_subject = "auditory~semantic";

inline CorrelationResult make_correlation(std::string session_id, std::string subject,
                                          const stats::TestResult& res, const Significance& sig) {
    return {std::move(session_id), std::move(subject), res.statistic,
            static_cast<std::size_t>(res.df_or_n), res.p_two_tailed, sig.classify(res.p_two_tailed)};
}

inline ProximityResult proximity(const Session& session, const EmbeddingSet& emb,
                                 const BaselineOptions& baseline = {},
                                 const Significance& sig = {}) {
    const auto adjacent = adjacent_series(session, emb);
    const auto random = nonadjacent_baseline(session, emb, baseline);
    std::vector<double> adj;
    std::vector<double> base;
    std::size_t j = 0;
    for (const auto& pt : random.points) {
        while (adjacent.points[j].index != pt.index) ++j;
        adj.push_back(adjacent.points[j].value);
        base.push_back(pt.value);
    }
    if (adj.size() < 2) {
        throw DegenerateError("proximity: fewer than 2 usable exchanges (" +
                              std::to_string(adj.size()) + ")");
    }
    const auto res = stats::paired_t_test(adj, base);
    ProximityResult out;
    out.session_id = session.session_id;
    out.level = emb.level();
    out.t = res.statistic;
    out.df = res.df_or_n;
    out.p = res.p_two_tailed;
    out.mean_adjacent = stats::detail::mean(adj);
    out.mean_nonadjacent = stats::detail::mean(base);
    out.tier = sig.classify(out.p);
    out.direction = out.t > 0.0 ? Direction::positive : Direction::negative;
    out.notes = random.notes;
    return out;
}

inline CorrelationResult convergence(const Session& session, const EmbeddingSet& emb,
                                     TimeAxis axis = TimeAxis::index,
                                     const Significance& sig = {}) {
    const auto adjacent = adjacent_series(session, emb);
    if (adjacent.size() < 3) {
        throw DegenerateError("convergence: fewer than 3 exchanges (" +
                              std::to_string(adjacent.size()) + ")");
    }
    std::vector<double> time;
    if (axis == TimeAxis::index) {
        for (const auto& pt : adjacent.points) time.push_back(static_cast<double>(pt.index));
    } else {
        for (const auto& ex : exchanges(session)) time.push_back(session.turns[ex.prev_turn].start_s);
    }
    return make_correlation(session.session_id, std::string(level_name(emb.level())),
                            stats::pearson(time, adjacent.values()), sig);
}

// Index-order pairing: the i-th value of `a` pairs with the i-th value of `b`,
// truncated to the shorter series.
inline std::pair<std::vector<double>, std::vector<double>>
pair_by_index(const SimilaritySeries& a, const SimilaritySeries& b) {
    const std::size_t n = std::min(a.size(), b.size());
    std::pair<std::vector<double>, std::vector<double>> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.first.push_back(a.points[i].value);
        out.second.push_back(b.points[i].value);
    }
    return out;
}

inline CorrelationResult synchrony(const Session& session, const EmbeddingSet& emb,
                                   const Significance& sig = {}) {
    const auto speakers = session.speakers();
    if (speakers.size() != 2) {
        throw DegenerateError("synchrony: session needs exactly 2 speakers");
    }
    const auto self_a = self_distance_series(session, emb, speakers[0]);
    const auto self_b = self_distance_series(session, emb, speakers[1]);
    const auto [xs, ys] = pair_by_index(self_a, self_b);
    if (xs.size() < 3) {
        throw DegenerateError("synchrony: both speakers need at least 4 turns");
    }
    return make_correlation(session.session_id, std::string(level_name(emb.level())),
                            stats::pearson(xs, ys), sig);
}

inline CorrelationResult cross_level_correlation(const Session& session,
                                                 const EmbeddingSet& semantic,
                                                 const EmbeddingSet& auditory,
                                                 const Significance& sig = {}) {
    const auto sem = adjacent_series(session, semantic);
    const auto aud = adjacent_series(session, auditory);
    if (sem.size() < 3) {
        throw DegenerateError("cross-level: fewer than 3 exchanges (" +
                              std::to_string(sem.size()) + ")");
    }
    return make_correlation(session.session_id, std::string(cross_level_subject),
                            stats::pearson(aud.values(), sem.values()), sig);
}

struct AnalysisConfig {
    std::vector<Level> levels = {Level::semantic, Level::auditory};
    std::size_t k = 10;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    std::optional<std::size_t> m;  // Bonferroni family size; defaults to the session count
    BaselineAnchor anchor = BaselineAnchor::prev;
    TimeAxis time_axis = TimeAxis::index;
    bool merge_same_speaker = false;
};

struct LevelReport {
    Level level = Level::semantic;
    std::optional<ProximityResult> proximity;
    std::optional<CorrelationResult> convergence;
    std::optional<CorrelationResult> synchrony;
};

struct SessionReport {
    std::string session_id;
    std::vector<LevelReport> levels;
    std::optional<CorrelationResult> cross_level;
    std::vector<std::string> diagnostics;

    bool complete(bool expect_cross_level) const {
        for (const auto& l : levels) {
            if (!l.proximity || !l.convergence || !l.synchrony) return false;
        }
        return !expect_cross_level || cross_level.has_value();
    }
};

struct MetricSummary {
    std::string metric;   // proximity | convergence | synchrony | cross_level
    std::string subject;  // level name or cross_level_subject
    std::size_t sessions = 0;
    double mean_statistic = 0.0;  // mean t for proximity, mean r otherwise
    std::size_t star = 0;
    std::size_t plus = 0;
    std::size_t none = 0;
    std::size_t positive = 0;
    std::size_t negative = 0;
};

struct CorpusAnalysis {
    AnalysisConfig config;
    std::size_t m = 1;
    std::vector<SessionReport> reports;
    std::vector<MetricSummary> summary;
    std::vector<std::string> diagnostics;

    bool has_cross_level() const { return config.levels.size() == 2; }
};

namespace detail {

template <typename F>
void record(SessionReport& report, const char* what, F&& compute) {
    try {
        compute();
    } catch (const DegenerateError& e) {
        report.diagnostics.push_back(std::string(what) + ": " + e.what());
    }
}

inline void tally(MetricSummary& s, double statistic, Tier tier) {
    ++s.sessions;
    s.mean_statistic += statistic;
    (tier == Tier::star ? s.star : tier == Tier::plus ? s.plus : s.none) += 1;
    (statistic > 0.0 ? s.positive : s.negative) += 1;
}

inline std::vector<MetricSummary> summarize(const CorpusAnalysis& a) {
    std::vector<MetricSummary> out;
    for (std::size_t li = 0; li < a.config.levels.size(); ++li) {
        const std::string name(level_name(a.config.levels[li]));
        MetricSummary prox{"proximity", name};
        MetricSummary conv{"convergence", name};
        MetricSummary sync{"synchrony", name};
        for (const auto& r : a.reports) {
            const auto& l = r.levels[li];
            if (l.proximity) tally(prox, l.proximity->t, l.proximity->tier);
            if (l.convergence) tally(conv, l.convergence->r, l.convergence->tier);
            if (l.synchrony) tally(sync, l.synchrony->r, l.synchrony->tier);
        }
        out.push_back(prox);
        out.push_back(conv);
        out.push_back(sync);
    }
    if (a.has_cross_level()) {
        MetricSummary cross{"cross_level", std::string(cross_level_subject)};
        for (const auto& r : a.reports) {
            if (r.cross_level) tally(cross, r.cross_level->r, r.cross_level->tier);
        }
        out.push_back(cross);
    }
    for (auto& s : out) {
        if (s.sessions > 0) s.mean_statistic /= static_cast<double>(s.sessions);
    }
    return out;
}

} // namespace detail

// Runs every configured metric on every session. Metric failures caused by
// the data (degenerate or too-short series) become per-session diagnostics;
// unresolved turn keys and configuration errors propagate.
inline CorpusAnalysis analyze_corpus(const Corpus& corpus,
                                     const std::map<Level, EmbeddingSet>& embeddings,
                                     const AnalysisConfig& config) {
    if (config.levels.empty() || config.levels.size() > 2 ||
        (config.levels.size() == 2 && config.levels[0] == config.levels[1])) {
        throw InputError("analysis needs one or two distinct levels");
    }
    if (config.k < 1) throw InputError("k must be >= 1");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
    if (corpus.sessions.empty()) throw InputError("corpus has no sessions");
    if (config.m && *config.m < 1) throw InputError("m must be >= 1");

    CorpusAnalysis out;
    out.config = config;
    out.m = config.m.value_or(corpus.sessions.size());
    const Significance sig{config.alpha, out.m};
    const BaselineOptions baseline{config.k, config.seed, config.anchor};

    std::vector<Session> sessions = corpus.sessions;
    std::map<Level, EmbeddingSet> merged;
    const std::map<Level, EmbeddingSet>* emb = &embeddings;
    if (config.merge_same_speaker) {
        for (auto& s : sessions) s = merge_same_speaker(s);
        for (Level level : config.levels) {
            merged.emplace(level, merge_embeddings(sessions, embeddings.at(level)));
        }
        emb = &merged;
    }
    for (Level level : config.levels) {
        if (!emb->contains(level)) {
            throw InputError("no " + std::string(level_name(level)) + " embeddings loaded");
        }
    }

    for (const auto& session : sessions) {
        SessionReport report;
        report.session_id = session.session_id;
        for (Level level : config.levels) {
            const EmbeddingSet& e = emb->at(level);
            LevelReport lr;
            lr.level = level;
            const std::string lname(level_name(level));
            detail::record(report, ("proximity/" + lname).c_str(), [&] {
                lr.proximity = proximity(session, e, baseline, sig);
                for (const auto& note : lr.proximity->notes) report.diagnostics.push_back(note);
            });
            detail::record(report, ("convergence/" + lname).c_str(),
                           [&] { lr.convergence = convergence(session, e, config.time_axis, sig); });
            detail::record(report, ("synchrony/" + lname).c_str(),
                           [&] { lr.synchrony = synchrony(session, e, sig); });
            report.levels.push_back(std::move(lr));
        }
        if (out.has_cross_level()) {
            detail::record(report, "cross_level", [&] {
                report.cross_level = cross_level_correlation(
                    session, emb->at(Level::semantic), emb->at(Level::auditory), sig);
            });
        }
        for (const auto& d : report.diagnostics) {
            out.diagnostics.push_back("session '" + session.session_id + "': " + d);
        }
        out.reports.push_back(std::move(report));
    }
    out.summary = detail::summarize(out);
    return out;
}

} // namespace entrain
