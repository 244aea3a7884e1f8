#pragma once

// Rendering of corpus analyses as text tables, CSV, and JSON.
//
// Text is for people: statistics at 2 decimals with the tier symbol appended
// ("4.04 *"), p-values at 3 decimals. It is not a stability contract.
//
// CSV has the fixed header
//   session,level,metric,statistic,p,tier,n
// with one row per computed metric; `statistic` carries full precision and
// `p` is rounded to 3 decimals. The cross-level row uses level
// "auditory~semantic" and metric "cross_level". For proximity, n is the
// number of paired exchanges (df + 1).
//
// JSON mirrors the data model with full double precision; the schema is
// documented in README.md and read back by parse_report_json().

#include <charconv>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "entrain/entrainment.hpp"
#include "entrain/error.hpp"
#include "entrain/stats.hpp"

namespace entrain::report {

enum class Format { text, csv, json };

// Every metric per level, or the cross-level correlation only.
enum class Layout { full, cross_level };

inline std::optional<Format> parse_format(std::string_view name) {
    if (name == "text") return Format::text;
    if (name == "csv") return Format::csv;
    if (name == "json") return Format::json;
    return std::nullopt;
}

inline constexpr std::string_view csv_header = "session,level,metric,statistic,p,tier,n";

// Fixed-point rendering, independent of the C locale. "-0.00" collapses to "0.00".
inline std::string fixed(double value, int decimals) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, decimals);
    std::string s(buf, res.ptr);
    if (s.starts_with('-') && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

// Shortest representation that parses back to the same double.
inline std::string exact(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return {buf, res.ptr};
}

inline std::string stat_cell(double value, Tier tier) {
    std::string cell = fixed(value, 2);
    const auto sym = stats::tier_symbol(tier);
    if (!sym.empty()) {
        cell += ' ';
        cell += sym;
    }
    return cell;
}

inline std::string_view tier_name(Tier tier) { return stats::tier_symbol(tier); }

inline Tier parse_tier(std::string_view s) {
    if (s == "*") return Tier::star;
    if (s == "+") return Tier::plus;
    if (s.empty()) return Tier::none;
    throw InputError("report: unknown tier symbol '" + std::string(s) + "'");
}

namespace detail {

inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void csv_row(std::string& out, const std::string& session, std::string_view level,
                    std::string_view metric, double statistic, double p, Tier tier,
                    std::size_t n) {
    out += csv_field(session) + ',' + csv_field(level) + ',' + std::string(metric) + ',' +
           exact(statistic) + ',' + fixed(p, 3) + ',' + std::string(tier_name(tier)) + ',' +
           std::to_string(n) + '\n';
}

inline std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        if (width.size() < r.size()) width.resize(r.size(), 0);
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    std::string out;
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i > 0) line += " | ";
            line += r[i];
            if (i + 1 < r.size()) line.append(width[i] - r[i].size(), ' ');
        }
        out += line + '\n';
    }
    return out;
}

inline std::string anchor_name(BaselineAnchor a) { return a == BaselineAnchor::prev ? "prev" : "next"; }
inline std::string axis_name(TimeAxis a) { return a == TimeAxis::index ? "index" : "seconds"; }

inline nlohmann::ordered_json correlation_json(const std::optional<CorrelationResult>& c) {
    if (!c) return nullptr;
    nlohmann::ordered_json j;
    j["r"] = c->r;
    j["n"] = c->n;
    j["p"] = c->p;
    j["tier"] = tier_name(c->tier);
    return j;
}

inline std::optional<CorrelationResult> correlation_from(const nlohmann::json& j,
                                                         const std::string& session,
                                                         const std::string& subject) {
    if (j.is_null()) return std::nullopt;
    CorrelationResult c;
    c.session_id = session;
    c.subject = subject;
    c.r = j.at("r").get<double>();
    c.n = j.at("n").get<std::size_t>();
    c.p = j.at("p").get<double>();
    c.tier = parse_tier(j.at("tier").get<std::string>());
    return c;
}

} // namespace detail

struct ReportMeta {
    std::string name = "corpus";
};

inline std::string header_line(const CorpusAnalysis& a, const ReportMeta& meta) {
    return "# corpus: " + meta.name + "  sessions=" + std::to_string(a.reports.size()) +
           "  alpha=" + exact(a.config.alpha) + "  m=" + std::to_string(a.m) +
           "  bonferroni=" + fixed(stats::bonferroni_threshold(a.config.alpha, a.m), 6) +
           "  seed=" + std::to_string(a.config.seed) + "  k=" + std::to_string(a.config.k) +
           "  anchor=" + detail::anchor_name(a.config.anchor) +
           "  time-axis=" + detail::axis_name(a.config.time_axis) + "\n";
}

inline const MetricSummary* find_summary(const CorpusAnalysis& a, std::string_view metric,
                                         std::string_view subject) {
    for (const auto& s : a.summary) {
        if (s.metric == metric && s.subject == subject) return &s;
    }
    return nullptr;
}

inline std::string render_text(const CorpusAnalysis& a, const ReportMeta& meta, Layout layout) {
    std::string out = header_line(a, meta);
    const bool cross = a.has_cross_level();
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head = {"Session"};
    if (layout == Layout::full) {
        for (Level l : a.config.levels) {
            const std::string n(level_name(l));
            head.push_back(n + " Prox t");
            head.push_back(n + " Conv r");
            head.push_back(n + " Sync r");
        }
    }
    if (cross) {
        head.push_back("Cross r");
        head.push_back("Cross p");
        head.push_back("Sig");
    }
    rows.push_back(head);
    for (const auto& r : a.reports) {
        std::vector<std::string> row = {r.session_id};
        if (layout == Layout::full) {
            for (const auto& l : r.levels) {
                row.push_back(l.proximity ? stat_cell(l.proximity->t, l.proximity->tier) : "-");
                row.push_back(l.convergence ? stat_cell(l.convergence->r, l.convergence->tier) : "-");
                row.push_back(l.synchrony ? stat_cell(l.synchrony->r, l.synchrony->tier) : "-");
            }
        }
        if (cross) {
            if (r.cross_level) {
                row.push_back(fixed(r.cross_level->r, 2));
                row.push_back(fixed(r.cross_level->p, 3));
                row.push_back(std::string(tier_name(r.cross_level->tier)));
            } else {
                row.insert(row.end(), {"-", "-", ""});
            }
        }
        rows.push_back(std::move(row));
    }
    out += detail::render_table(rows);
    out += "\n";
    for (const auto& s : a.summary) {
        if (layout == Layout::cross_level && s.metric != "cross_level") continue;
        const char* stat = s.metric == "proximity" ? "t" : "r";
        out += s.metric + "/" + s.subject + ": mean " + stat + " = " + fixed(s.mean_statistic, 2) +
               " over " + std::to_string(s.sessions) + " sessions; tiers * " +
               std::to_string(s.star) + ", + " + std::to_string(s.plus) + ", none " +
               std::to_string(s.none) + "; positive " + std::to_string(s.positive) +
               ", negative " + std::to_string(s.negative) + "\n";
    }
    if (!a.diagnostics.empty()) {
        out += "\ndiagnostics:\n";
        for (const auto& d : a.diagnostics) out += "  " + d + "\n";
    }
    return out;
}

inline std::string render_csv(const CorpusAnalysis& a, Layout layout) {
    std::string out(csv_header);
    out += '\n';
    for (const auto& r : a.reports) {
        if (layout == Layout::full) {
            for (const auto& l : r.levels) {
                const auto name = level_name(l.level);
                if (l.proximity) {
                    detail::csv_row(out, r.session_id, name, "proximity", l.proximity->t,
                                    l.proximity->p, l.proximity->tier,
                                    static_cast<std::size_t>(l.proximity->df) + 1);
                }
                if (l.convergence) {
                    detail::csv_row(out, r.session_id, name, "convergence", l.convergence->r,
                                    l.convergence->p, l.convergence->tier, l.convergence->n);
                }
                if (l.synchrony) {
                    detail::csv_row(out, r.session_id, name, "synchrony", l.synchrony->r,
                                    l.synchrony->p, l.synchrony->tier, l.synchrony->n);
                }
            }
        }
        if (r.cross_level) {
            detail::csv_row(out, r.session_id, cross_level_subject, "cross_level", r.cross_level->r,
                            r.cross_level->p, r.cross_level->tier, r.cross_level->n);
        }
    }
    return out;
}

inline nlohmann::ordered_json to_json(const CorpusAnalysis& a, const ReportMeta& meta) {
    nlohmann::ordered_json doc;
    auto& c = doc["corpus"];
    c["name"] = meta.name;
    c["sessions"] = a.reports.size();
    c["alpha"] = a.config.alpha;
    c["m"] = a.m;
    c["bonferroni_threshold"] = stats::bonferroni_threshold(a.config.alpha, a.m);
    c["seed"] = a.config.seed;
    c["k"] = a.config.k;
    c["baseline_anchor"] = detail::anchor_name(a.config.anchor);
    c["time_axis"] = detail::axis_name(a.config.time_axis);
    c["merge_same_speaker"] = a.config.merge_same_speaker;
    c["levels"] = nlohmann::ordered_json::array();
    for (Level l : a.config.levels) c["levels"].push_back(level_name(l));

    doc["sessions"] = nlohmann::ordered_json::array();
    for (const auto& r : a.reports) {
        nlohmann::ordered_json s;
        s["session_id"] = r.session_id;
        s["levels"] = nlohmann::ordered_json::array();
        for (const auto& l : r.levels) {
            nlohmann::ordered_json lj;
            lj["level"] = level_name(l.level);
            if (l.proximity) {
                const auto& p = *l.proximity;
                nlohmann::ordered_json pj;
                pj["t"] = p.t;
                pj["df"] = p.df;
                pj["p"] = p.p;
                pj["mean_adjacent"] = p.mean_adjacent;
                pj["mean_nonadjacent"] = p.mean_nonadjacent;
                pj["tier"] = tier_name(p.tier);
                pj["direction"] = p.direction == Direction::positive ? "positive" : "negative";
                lj["proximity"] = pj;
            } else {
                lj["proximity"] = nullptr;
            }
            lj["convergence"] = detail::correlation_json(l.convergence);
            lj["synchrony"] = detail::correlation_json(l.synchrony);
            s["levels"].push_back(lj);
        }
        s["cross_level"] = detail::correlation_json(r.cross_level);
        s["diagnostics"] = r.diagnostics;
        doc["sessions"].push_back(s);
    }
    doc["summary"] = nlohmann::ordered_json::array();
    for (const auto& m : a.summary) {
        nlohmann::ordered_json sj;
        sj["metric"] = m.metric;
        sj["subject"] = m.subject;
        sj["sessions"] = m.sessions;
        sj["mean_statistic"] = m.mean_statistic;
        sj["star"] = m.star;
        sj["plus"] = m.plus;
        sj["none"] = m.none;
        sj["positive"] = m.positive;
        sj["negative"] = m.negative;
        doc["summary"].push_back(sj);
    }
    doc["diagnostics"] = a.diagnostics;
    return doc;
}

// Reads a document produced by to_json() back into an analysis.
inline CorpusAnalysis parse_report_json(const nlohmann::json& doc, ReportMeta* meta = nullptr) {
    try {
        CorpusAnalysis a;
        const auto& c = doc.at("corpus");
        if (meta) meta->name = c.at("name").get<std::string>();
        a.config.alpha = c.at("alpha").get<double>();
        a.m = c.at("m").get<std::size_t>();
        a.config.m = a.m;
        a.config.seed = c.at("seed").get<std::uint64_t>();
        a.config.k = c.at("k").get<std::size_t>();
        a.config.anchor = c.at("baseline_anchor") == "next" ? BaselineAnchor::next : BaselineAnchor::prev;
        a.config.time_axis = c.at("time_axis") == "seconds" ? TimeAxis::seconds : TimeAxis::index;
        a.config.merge_same_speaker = c.at("merge_same_speaker").get<bool>();
        a.config.levels.clear();
        for (const auto& l : c.at("levels")) {
            const auto level = parse_level(l.get<std::string>());
            if (!level) throw InputError("report: unknown level");
            a.config.levels.push_back(*level);
        }
        for (const auto& s : doc.at("sessions")) {
            SessionReport r;
            r.session_id = s.at("session_id").get<std::string>();
            for (const auto& lj : s.at("levels")) {
                LevelReport l;
                const std::string lname = lj.at("level").get<std::string>();
                l.level = parse_level(lname).value();
                if (!lj.at("proximity").is_null()) {
                    const auto& pj = lj.at("proximity");
                    ProximityResult p;
                    p.session_id = r.session_id;
                    p.level = l.level;
                    p.t = pj.at("t").get<double>();
                    p.df = pj.at("df").get<double>();
                    p.p = pj.at("p").get<double>();
                    p.mean_adjacent = pj.at("mean_adjacent").get<double>();
                    p.mean_nonadjacent = pj.at("mean_nonadjacent").get<double>();
                    p.tier = parse_tier(pj.at("tier").get<std::string>());
                    p.direction = pj.at("direction") == "positive" ? Direction::positive : Direction::negative;
                    l.proximity = p;
                }
                l.convergence = detail::correlation_from(lj.at("convergence"), r.session_id, lname);
                l.synchrony = detail::correlation_from(lj.at("synchrony"), r.session_id, lname);
                r.levels.push_back(std::move(l));
            }
            r.cross_level = detail::correlation_from(s.at("cross_level"), r.session_id,
                                                     std::string(cross_level_subject));
            r.diagnostics = s.at("diagnostics").get<std::vector<std::string>>();
            a.reports.push_back(std::move(r));
        }
        for (const auto& sj : doc.at("summary")) {
            MetricSummary m;
            m.metric = sj.at("metric").get<std::string>();
            m.subject = sj.at("subject").get<std::string>();
            m.sessions = sj.at("sessions").get<std::size_t>();
            m.mean_statistic = sj.at("mean_statistic").get<double>();
            m.star = sj.at("star").get<std::size_t>();
            m.plus = sj.at("plus").get<std::size_t>();
            m.none = sj.at("none").get<std::size_t>();
            m.positive = sj.at("positive").get<std::size_t>();
            m.negative = sj.at("negative").get<std::size_t>();
            a.summary.push_back(std::move(m));
        }
        a.diagnostics = doc.at("diagnostics").get<std::vector<std::string>>();
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("report: malformed JSON document: ") + e.what());
    }
}

inline std::string render_json(const CorpusAnalysis& a, const ReportMeta& meta, Layout layout) {
    if (layout == Layout::full) return to_json(a, meta).dump(2) + "\n";
    nlohmann::ordered_json doc;
    doc["corpus"] = to_json(a, meta)["corpus"];
    doc["sessions"] = nlohmann::ordered_json::array();
    for (const auto& r : a.reports) {
        nlohmann::ordered_json s;
        s["session_id"] = r.session_id;
        s["cross_level"] = detail::correlation_json(r.cross_level);
        doc["sessions"].push_back(s);
    }
    const auto* s = find_summary(a, "cross_level", cross_level_subject);
    doc["mean_r"] = s ? nlohmann::ordered_json(s->mean_statistic) : nlohmann::ordered_json(nullptr);
    doc["diagnostics"] = a.diagnostics;
    return doc.dump(2) + "\n";
}

inline std::string render(const CorpusAnalysis& a, Format format, const ReportMeta& meta = {},
                          Layout layout = Layout::full) {
    if (a.reports.empty()) {
        throw InputError("report: nothing to render (no session reports)");
    }
    if (layout == Layout::cross_level && !a.has_cross_level()) {
        throw InputError("report: cross-level layout needs both semantic and auditory levels");
    }
    switch (format) {
    case Format::text:
        return render_text(a, meta, layout);
    case Format::csv:
        return render_csv(a, layout);
    case Format::json:
        return render_json(a, meta, layout);
    }
    return {};
}

} // namespace entrain::report
