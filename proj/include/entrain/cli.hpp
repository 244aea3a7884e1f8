#pragma once

// Command-line front end: validate, analyze, crosslevel, synth.
// Exit codes: 0 success, 1 input or usage error, 2 internal error.

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "entrain/corpus_io.hpp"
#include "entrain/entrainment.hpp"
#include "entrain/error.hpp"
#include "entrain/report.hpp"
#include "entrain/synth.hpp"

namespace entrain::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_input = 1;
inline constexpr int exit_internal = 2;

struct RunConfig {
    std::string manifest;
    std::string levels = "semantic,auditory";
    std::size_t k = 10;
    std::uint64_t seed = 0;
    double alpha = 0.05;
    std::size_t m = 0;  // 0: number of sessions
    std::string anchor = "prev";
    std::string time_axis = "index";
    std::string format = "text";
    std::string out;
    bool merge_same_speaker = false;
    bool allow_any_dim = false;
    std::uint32_t semantic_dim = default_dim(Level::semantic);
    std::uint32_t auditory_dim = default_dim(Level::auditory);
};

namespace detail {

inline std::vector<Level> parse_levels(const std::string& spec) {
    std::vector<Level> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto level = parse_level(item);
        if (!level) {
            throw InputError("unknown level '" + item + "' (expected semantic or auditory)");
        }
        if (std::find(out.begin(), out.end(), *level) != out.end()) {
            throw InputError("level '" + item + "' listed twice");
        }
        out.push_back(*level);
    }
    if (out.empty()) throw InputError("no levels given");
    return out;
}

inline DimPolicy dim_policy(const RunConfig& cfg) {
    DimPolicy p;
    p.expected[Level::semantic] = cfg.semantic_dim;
    p.expected[Level::auditory] = cfg.auditory_dim;
    p.allow_any_dim = cfg.allow_any_dim;
    return p;
}

inline AnalysisConfig analysis_config(const RunConfig& cfg, std::vector<Level> levels) {
    AnalysisConfig a;
    a.levels = std::move(levels);
    a.k = cfg.k;
    a.seed = cfg.seed;
    a.alpha = cfg.alpha;
    if (cfg.m > 0) a.m = cfg.m;
    a.anchor = cfg.anchor == "next" ? BaselineAnchor::next : BaselineAnchor::prev;
    a.time_axis = cfg.time_axis == "seconds" ? TimeAxis::seconds : TimeAxis::index;
    a.merge_same_speaker = cfg.merge_same_speaker;
    return a;
}

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write '" + path + "'");
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw InputError("write failed for '" + path + "'");
}

inline void add_corpus_options(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--manifest", cfg.manifest, "Manifest (JSON lines)")->required();
    cmd->add_flag("--allow-any-dim", cfg.allow_any_dim,
                  "Accept embedding widths other than the expected ones");
    cmd->add_option("--semantic-dim", cfg.semantic_dim, "Expected semantic width")
        ->capture_default_str();
    cmd->add_option("--auditory-dim", cfg.auditory_dim, "Expected auditory width")
        ->capture_default_str();
}

inline void add_analysis_options(CLI::App* cmd, RunConfig& cfg) {
    add_corpus_options(cmd, cfg);
    cmd->add_option("--k", cfg.k, "Non-adjacent turns sampled per exchange")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", cfg.seed, "Seed for baseline sampling")->capture_default_str();
    cmd->add_option("--alpha", cfg.alpha, "Significance level")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--m", cfg.m, "Bonferroni family size (default: session count)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--baseline-anchor", cfg.anchor, "Baseline anchor turn")
        ->capture_default_str()
        ->check(CLI::IsMember({"prev", "next"}));
    cmd->add_option("--time-axis", cfg.time_axis, "Convergence time axis")
        ->capture_default_str()
        ->check(CLI::IsMember({"index", "seconds"}));
    cmd->add_option("--format", cfg.format, "Output format")
        ->capture_default_str()
        ->check(CLI::IsMember({"text", "csv", "json"}));
    cmd->add_option("--out", cfg.out, "Output file (default: stdout)");
    cmd->add_flag("--merge-same-speaker", cfg.merge_same_speaker,
                  "Merge consecutive turns of the same speaker");
}

inline int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto loaded = load_corpus(cfg.manifest, {}, dim_policy(cfg));
    std::string levels;
    for (const auto& [level, emb] : loaded.embeddings) {
        if (!levels.empty()) levels += ", ";
        levels += std::string(level_name(level)) + " (dim " + std::to_string(emb.dim()) + ")";
    }
    out << "ok: " << loaded.corpus.sessions.size() << " sessions, " << loaded.corpus.turn_count()
        << " turns; levels: " << levels << "\n";
    (void)err;
    return exit_ok;
}

inline int run_analysis(const RunConfig& cfg, const std::vector<Level>& levels,
                        report::Layout layout, std::ostream& out, std::ostream& err) {
    const auto loaded = load_corpus(cfg.manifest, levels, dim_policy(cfg));
    const auto analysis = analyze_corpus(loaded.corpus, loaded.embeddings, analysis_config(cfg, levels));
    for (const auto& d : analysis.diagnostics) err << "diagnostic: " << d << "\n";
    const report::ReportMeta meta{fs::path(cfg.manifest).stem().string()};
    const auto format = report::parse_format(cfg.format).value();
    emit(report::render(analysis, format, meta, layout), cfg.out, out);
    return exit_ok;
}

inline int cmd_synth(const std::string& spec_path, const std::string& out_dir, std::ostream& out) {
    std::ifstream in(spec_path);
    if (!in) throw InputError("cannot open synth spec '" + spec_path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(spec_path + ": parse error: " + e.what());
    }
    const auto plans = synth::parse_plan(doc);
    const auto corpus = synth::generate_corpus(plans, out_dir);
    out << "wrote " << corpus.corpus.sessions.size() << " sessions, "
        << corpus.corpus.turn_count() << " turns to " << out_dir << "\n";
    return exit_ok;
}

} // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Conversational entrainment analysis on per-turn embeddings"};
    app.require_subcommand(1);

    RunConfig validate_cfg;
    auto* validate = app.add_subcommand("validate", "Load and check a manifest and its embeddings");
    detail::add_corpus_options(validate, validate_cfg);

    RunConfig analyze_cfg;
    auto* analyze = app.add_subcommand("analyze", "Proximity, convergence, synchrony per session");
    detail::add_analysis_options(analyze, analyze_cfg);
    analyze->add_option("--levels", analyze_cfg.levels, "Comma-separated levels")
        ->capture_default_str();

    RunConfig cross_cfg;
    auto* crosslevel =
        app.add_subcommand("crosslevel", "Correlation of semantic and auditory adjacent similarity");
    detail::add_analysis_options(crosslevel, cross_cfg);

    std::string spec_path;
    std::string out_dir;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted effects");
    synth->add_option("--spec", spec_path, "Synth spec (JSON)")->required();
    synth->add_option("--out-dir", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_input;
    }

    try {
        if (*validate) return detail::cmd_validate(validate_cfg, out, err);
        if (*analyze) {
            return detail::run_analysis(analyze_cfg, detail::parse_levels(analyze_cfg.levels),
                                        report::Layout::full, out, err);
        }
        if (*crosslevel) {
            return detail::run_analysis(cross_cfg, {Level::semantic, Level::auditory},
                                        report::Layout::cross_level, out, err);
        }
        if (*synth) return detail::cmd_synth(spec_path, out_dir, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
    return exit_internal;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("entrain");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace entrain::cli
