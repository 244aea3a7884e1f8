// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "entrain/cli.hpp"
#include "entrain/entrain.hpp"
#include "oracle/reference_stats.hpp"
#include "test_support.hpp"

using namespace entrain;
using Clock = std::chrono::steady_clock;

namespace {

struct IbetaCase {
    double a, b, x, value;
};

const IbetaCase ibeta_grid[] = {
#include "oracle/ibeta_grid.inc"
};

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

Outcome stats_oracle() {
    constexpr int instances = 1000;
    constexpr double tol = 1e-9;
    std::mt19937_64 gen(20240601);
    std::uniform_int_distribution<std::size_t> size(3, 500);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    std::vector<std::vector<double>> xs(instances);
    std::vector<std::vector<double>> ys(instances);
    for (int i = 0; i < instances; ++i) {
        const std::size_t n = size(gen);
        const double rho = unif(gen);
        const double shift = 0.3 * z(gen) / std::sqrt(static_cast<double>(n));
        const double scale = std::exp(2.0 * unif(gen));
        xs[i].resize(n);
        ys[i].resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            xs[i][j] = scale * z(gen);
            ys[i][j] = scale * (rho * xs[i][j] / scale + std::sqrt(1 - rho * rho) * z(gen)) + shift;
        }
    }

    const auto t0 = Clock::now();
    std::vector<stats::TestResult> t_res(instances);
    std::vector<stats::TestResult> r_res(instances);
    for (int i = 0; i < instances; ++i) {
        t_res[i] = stats::paired_t_test(xs[i], ys[i]);
        r_res[i] = stats::pearson(xs[i], ys[i]);
    }
    const double runtime = seconds_since(t0);

    double worst = 0.0;
    for (int i = 0; i < instances; ++i) {
        const auto rt = oracle::paired_t(xs[i], ys[i]);
        const auto rr = oracle::pearson(xs[i], ys[i]);
        for (double d : {t_res[i].statistic - rt.statistic, t_res[i].p_two_tailed - rt.p,
                         r_res[i].statistic - rr.statistic, r_res[i].p_two_tailed - rr.p}) {
            worst = std::max(worst, std::abs(d));
        }
    }
    return {worst <= tol && runtime < 10.0,
            std::to_string(instances) + " instances, n in [3, 500]; max abs error " +
                fmt("%.3g", worst) + " (tol 1e-9); runtime " + fmt("%.3f", runtime) + " s (limit 10 s)"};
}

Outcome special_functions() {
    double worst_rel = 0.0;
    for (const auto& c : ibeta_grid) {
        const double got = stats::regularized_incomplete_beta(c.a, c.b, c.x);
        worst_rel = std::max(worst_rel, std::abs(got - c.value) / c.value);
    }
    const double g1 = std::abs(stats::ln_gamma(1.0) - 0.0);
    const double ghalf = std::abs(stats::ln_gamma(0.5) - 0.5 * std::log(std::numbers::pi));
    const double g10 = std::abs(stats::ln_gamma(10.0) - std::log(362880.0));
    const double worst_lg = std::max({g1, ghalf, g10});
    const std::size_t cells = std::size(ibeta_grid);
    return {cells == 325 && worst_rel <= 1e-10 && worst_lg <= 1e-12,
            "incomplete beta: " + std::to_string(cells) + " grid cells, max rel error " +
                fmt("%.3g", worst_rel) + " (tol 1e-10); ln_gamma(1, 1/2, 10) max abs error " +
                fmt("%.3g", worst_lg) + " (tol 1e-12)"};
}

Outcome bonferroni() {
    const double t12 = stats::bonferroni_threshold(0.05, 12);
    const double t9 = stats::bonferroni_threshold(0.05, 9);
    // Also checked as quoted to three decimals (truncated, not rounded).
    auto cut3 = [](double v) { return std::floor(v * 1000.0) / 1000.0; };
    const bool values = std::abs(t12 - 0.0041667) < 5e-8 && std::abs(t9 - 0.0055556) < 5e-8;
    const bool quoted = cut3(t12) == 0.004 && cut3(t9) == 0.005;
    return {values && quoted, "(0.05, 12) -> " + fmt("%.7f", t12) + ", (0.05, 9) -> " +
                                   fmt("%.7f", t9) + "; to 3 decimals " + fmt("%.3f", cut3(t12)) +
                                   " and " + fmt("%.3f", cut3(t9))};
}

// Central interval [lo, hi] of Binomial(n, p) with at most (1 - level)/2 of
// the mass below lo and at most (1 - level)/2 above hi.
std::pair<int, int> binomial_interval(int n, double p, double level) {
    const double tail = (1.0 - level) / 2.0;
    std::vector<double> pmf(n + 1);
    for (int k = 0; k <= n; ++k) {
        pmf[k] = std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                          k * std::log(p) + (n - k) * std::log1p(-p));
    }
    int lo = 0;
    double below = 0.0;
    while (lo < n && below + pmf[lo] <= tail) below += pmf[lo++];
    int hi = n;
    double above = 0.0;
    while (hi > 0 && above + pmf[hi] <= tail) above += pmf[hi--];
    return {lo, hi};
}

Outcome null_calibration() {
    constexpr int corpora = 100;
    const auto [lo, hi] = binomial_interval(corpora, 0.05, 0.99);
    const auto t0 = Clock::now();
    std::map<std::string, int> hits;
    std::map<std::string, int> computed;
    for (int c = 0; c < corpora; ++c) {
        synth::SessionPlan plan{"null" + std::to_string(c), {}};
        for (Level level : {Level::semantic, Level::auditory}) {
            synth::SynthSpec spec;
            spec.n_turns = 201;  // 200 exchanges
            spec.dim = default_dim(level);
            spec.base_noise_sigma = 0.05;
            spec.seed = 1000 + c;
            plan.levels[level] = spec;
        }
        const auto loaded = synth::build_corpus({plan});
        AnalysisConfig cfg;
        cfg.seed = 1000 + c;
        const auto a = analyze_corpus(loaded.corpus, loaded.embeddings, cfg);
        const auto& r = a.reports.front();
        auto count = [&](const std::string& name, double p) {
            ++computed[name];
            if (p < 0.05) ++hits[name];
        };
        for (const auto& l : r.levels) {
            const std::string n(level_name(l.level));
            if (l.proximity) count("proximity/" + n, l.proximity->p);
            if (l.convergence) count("convergence/" + n, l.convergence->p);
            if (l.synchrony) count("synchrony/" + n, l.synchrony->p);
        }
        if (r.cross_level) count("cross_level", r.cross_level->p);
    }
    const double runtime = seconds_since(t0);
    bool pass = runtime < 120.0 && computed.size() == 7;
    std::string detail = "p<0.05 counts out of " + std::to_string(corpora) + " (99% interval [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "]):";
    for (const auto& [name, n] : computed) {
        const int k = hits[name];
        pass = pass && n == corpora && k >= lo && k <= hi;
        detail += " " + name + "=" + std::to_string(k);
    }
    detail += "; runtime " + fmt("%.1f", runtime) + " s (limit 120 s)";
    return {pass, detail};
}

Outcome planted_power() {
    constexpr int seeds = 100;
    int prox = 0;
    int conv = 0;
    int sync = 0;
    for (int s = 0; s < seeds; ++s) {
        synth::SynthSpec p;
        p.n_turns = 101;  // 100 exchanges
        p.dim = default_dim(Level::semantic);
        p.base_noise_sigma = 0.05;
        p.proximity_delta = 0.1;
        p.seed = 5000 + s;
        const auto gp = synth::generate_session(p);
        const auto rp = proximity(gp.session, gp.embeddings, {10, p.seed, BaselineAnchor::prev});
        if (rp.t > 0 && rp.p < 0.05) ++prox;

        synth::SynthSpec c;
        c.n_turns = 201;  // 200 exchanges
        c.dim = default_dim(Level::semantic);
        c.base_noise_sigma = 0.02;
        c.convergence_slope = 0.001;
        c.seed = 6000 + s;
        const auto gc = synth::generate_session(c);
        const auto rc = convergence(gc.session, gc.embeddings);
        if (rc.r > 0 && rc.p < 0.05) ++conv;

        synth::SynthSpec y;
        y.n_turns = 150;
        y.dim = default_dim(Level::semantic);
        y.base_noise_sigma = 0.05;
        y.synchrony_coupling = 0.6;
        y.seed = 7000 + s;
        const auto gy = synth::generate_session(y);
        const auto ry = synchrony(gy.session, gy.embeddings);
        if (ry.r > 0 && ry.p < 0.05) ++sync;
    }
    return {prox >= 95 && conv >= 95 && sync >= 95,
            "detected with correct sign and p<0.05: proximity " + std::to_string(prox) +
                "/100, convergence " + std::to_string(conv) + "/100, synchrony " +
                std::to_string(sync) + "/100 (need >= 95 each)"};
}

std::vector<double> flatten(const CorpusAnalysis& a) {
    std::vector<double> out;
    auto corr = [&](const std::optional<CorrelationResult>& c) {
        if (c) out.insert(out.end(), {c->r, c->p});
    };
    for (const auto& r : a.reports) {
        for (const auto& l : r.levels) {
            if (l.proximity) {
                out.insert(out.end(), {l.proximity->t, l.proximity->p, l.proximity->mean_adjacent,
                                       l.proximity->mean_nonadjacent});
            }
            corr(l.convergence);
            corr(l.synchrony);
        }
        corr(r.cross_level);
    }
    for (const auto& s : a.summary) out.push_back(s.mean_statistic);
    return out;
}

std::vector<synth::SessionPlan> mixed_plans(std::size_t sessions, std::size_t dim_override = 0) {
    std::vector<synth::SessionPlan> plans;
    for (std::size_t i = 0; i < sessions; ++i) {
        synth::SessionPlan plan{"m" + std::to_string(i), {}};
        for (Level level : {Level::semantic, Level::auditory}) {
            synth::SynthSpec spec;
            spec.n_turns = 60 + 10 * i;
            spec.dim = dim_override ? dim_override : default_dim(level);
            spec.base_noise_sigma = 0.04;
            spec.proximity_delta = 0.05 * static_cast<double>(i % 3);
            spec.convergence_slope = i % 2 ? 0.001 : -0.0005;
            spec.synchrony_coupling = 0.3 * static_cast<double>(i % 4) - 0.4;
            spec.seed = 40 + i;
            plan.levels[level] = spec;
        }
        plans.push_back(plan);
    }
    return plans;
}

Outcome scale_invariance() {
    const auto loaded = synth::build_corpus(mixed_plans(6));
    std::map<Level, EmbeddingSet> scaled;
    for (const auto& [level, emb] : loaded.embeddings) {
        EmbeddingSet s(level, emb.dim());
        std::vector<double> v(emb.dim());
        for (std::size_t i = 0; i < emb.size(); ++i) {
            for (std::size_t j = 0; j < v.size(); ++j) v[j] = emb.row(i)[j] * 7.3;
            s.add(emb.keys()[i], v);
        }
        scaled.emplace(level, std::move(s));
    }
    const AnalysisConfig cfg;
    const auto base = flatten(analyze_corpus(loaded.corpus, loaded.embeddings, cfg));
    const auto big = flatten(analyze_corpus(loaded.corpus, scaled, cfg));
    double worst = base.size() == big.size() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < std::min(base.size(), big.size()); ++i) {
        worst = std::max(worst, std::abs(base[i] - big[i]));
    }
    return {!base.empty() && worst <= 1e-9,
            std::to_string(base.size()) + " reported values compared after x7.3 scaling; max change " +
                fmt("%.3g", worst) + " (tol 1e-9)"};
}

Outcome determinism() {
    entrain::testing::TempDir dir;
    synth::generate_corpus(mixed_plans(4, 32), dir.path());
    const std::string manifest = (dir / "manifest.jsonl").string();
    bool same = true;
    std::string detail;
    for (const char* format : {"csv", "json"}) {
        std::string outputs[2];
        for (int run = 0; run < 2; ++run) {
            const std::string out = (dir / ("run" + std::to_string(run) + "." + format)).string();
            std::ostringstream so;
            std::ostringstream se;
            const int code = cli::run({"analyze", "--manifest", manifest, "--allow-any-dim", "--format",
                                       format, "--seed", "11", "--out", out},
                                      so, se);
            if (code != 0) return {false, std::string(format) + " run failed: " + se.str()};
            outputs[run] = entrain::testing::read_text(out);
        }
        const bool eq = !outputs[0].empty() && outputs[0] == outputs[1];
        same = same && eq;
        detail += std::string(detail.empty() ? "" : ", ") + format + " " +
                  std::to_string(outputs[0].size()) + " bytes " + (eq ? "identical" : "DIFFER");
    }
    return {same, "two analyze runs: " + detail};
}

Outcome report_format() {
    CorpusAnalysis a;
    a.config.levels = {Level::semantic};
    a.m = 12;
    const Significance sig{a.config.alpha, a.m};
    SessionReport r;
    r.session_id = "1";
    LevelReport l;
    ProximityResult p;
    p.session_id = "1";
    p.t = 4.04;
    p.df = 120;
    p.p = 0.0001;
    p.tier = sig.classify(p.p);
    l.proximity = p;
    r.levels.push_back(l);
    a.reports.push_back(r);
    a.summary = entrain::detail::summarize(a);
    const std::string text = report::render(a, report::Format::text);
    std::string row;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (line.starts_with("1 ")) row = line;
    }
    const bool below = p.p < stats::bonferroni_threshold(0.05, 12);
    const bool found = row.find("| 4.04 *") != std::string::npos;
    return {below && found, "p=0.0001 < " + fmt("%.7f", stats::bonferroni_threshold(0.05, 12)) +
                                "; rendered row: \"" + row + "\""};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"stats-oracle-equivalence", stats_oracle},
        {"special-functions", special_functions},
        {"bonferroni-thresholds", bonferroni},
        {"null-calibration", null_calibration},
        {"planted-effect-power", planted_power},
        {"scale-invariance", scale_invariance},
        {"determinism", determinism},
        {"report-format", report_format},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed;
}
