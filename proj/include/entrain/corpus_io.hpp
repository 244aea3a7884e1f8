#pragma once

// Manifest and embedding file formats.
//
// Manifest (JSON lines, UTF-8). The first non-blank line is the header:
//   {"type":"header","embedding_files":{"semantic":"sem.emb","auditory":"aud.emb"}}
// Every following line is one turn:
//   {"session_id":"s01","speaker":"A","turn_index":0,"start_s":0.0,"end_s":1.2,
//    "turn_key":"s01_0000","text":"okay"}
// `text` is optional. Relative embedding paths resolve against the manifest's
// directory. Blank lines are ignored.
//
// Embedding binary format (all integers little-endian):
//   "EMB1" | u32 dim | u64 count | count x { u16 key_len | key bytes | dim x f32 }
// JSON-lines fallback, one record per line: {"key": "s01_0000", "vec": [0.1, ...]}

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "entrain/corpus.hpp"
#include "entrain/error.hpp"

namespace entrain {

namespace fs = std::filesystem;

struct DimPolicy {
    std::map<Level, std::uint32_t> expected = {{Level::semantic, default_dim(Level::semantic)},
                                               {Level::auditory, default_dim(Level::auditory)}};
    bool allow_any_dim = false;
};

struct ManifestOptions {
    bool require_embedding_files = true;
};

namespace detail {

inline std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& bytes, std::string name)
        : bytes_(bytes), name_(std::move(name)) {}

    template <typename UInt>
    UInt read_le() {
        need(sizeof(UInt));
        UInt v = 0;
        for (std::size_t i = 0; i < sizeof(UInt); ++i) {
            v |= static_cast<UInt>(static_cast<UInt>(bytes_[pos_ + i]) << (8 * i));
        }
        pos_ += sizeof(UInt);
        return v;
    }

    float read_f32() { return std::bit_cast<float>(read_le<std::uint32_t>()); }

    std::string read_string(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (remaining() < n) {
            throw InputError(name_ + ": truncated embedding file at byte " + std::to_string(pos_));
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    std::string name_;
    std::size_t pos_ = 0;
};

template <typename UInt>
void write_le(std::string& out, UInt v) {
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
}

inline void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw InputError("write failed for '" + path.string() + "'");
    }
}

inline void check_dim(Level level, std::uint32_t dim, const DimPolicy& policy,
                      const std::string& name) {
    if (policy.allow_any_dim) return;
    const auto it = policy.expected.find(level);
    if (it != policy.expected.end() && it->second != dim) {
        throw InputError(name + ": dimension policy: " + std::string(level_name(level)) +
                         " embeddings must have dim " + std::to_string(it->second) +
                         ", file has " + std::to_string(dim) + " (use --allow-any-dim)");
    }
}

inline EmbeddingSet parse_binary(const std::vector<std::uint8_t>& bytes, Level level,
                                 const DimPolicy& policy, const std::string& name) {
    ByteReader in(bytes, name);
    const std::string magic = in.read_string(4);
    if (magic != "EMB1") {
        if (magic.starts_with("EMB")) {
            throw InputError(name + ": unsupported embedding format version '" + magic + "'");
        }
        throw InputError(name + ": bad magic bytes");
    }
    const auto dim = in.read_le<std::uint32_t>();
    const auto count = in.read_le<std::uint64_t>();
    if (dim == 0) {
        throw InputError(name + ": header dim is 0");
    }
    check_dim(level, dim, policy, name);
    // Each record needs at least 2 + 4*dim bytes; reject impossible counts early.
    if (count > in.remaining() / (2 + 4ULL * dim)) {
        throw InputError(name + ": header count " + std::to_string(count) +
                         " does not match payload size");
    }
    EmbeddingSet set(level, dim);
    std::vector<float> vec(dim);
    for (std::uint64_t r = 0; r < count; ++r) {
        const auto key_len = in.read_le<std::uint16_t>();
        std::string key = in.read_string(key_len);
        for (auto& v : vec) v = in.read_f32();
        set.add(std::move(key), std::span<const float>(vec));
    }
    if (in.remaining() != 0) {
        throw InputError(name + ": " + std::to_string(in.remaining()) +
                         " trailing bytes after declared records (dim mismatch?)");
    }
    return set;
}

inline EmbeddingSet parse_jsonl(const std::vector<std::uint8_t>& bytes, Level level,
                                const DimPolicy& policy, const std::string& name) {
    std::istringstream in(std::string(bytes.begin(), bytes.end()));
    std::optional<EmbeddingSet> set;
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> vec;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string at = name + ":" + std::to_string(line_no);
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError(at + ": parse error: " + e.what());
        }
        if (!rec.is_object() || !rec.contains("key") || !rec["key"].is_string() ||
            !rec.contains("vec") || !rec["vec"].is_array()) {
            throw InputError(at + ": expected {\"key\": string, \"vec\": [numbers]}");
        }
        const std::string key = rec["key"].get<std::string>();
        vec.clear();
        for (const auto& v : rec["vec"]) {
            if (!v.is_number()) {
                throw InputError(at + ": non-finite value in embedding for turn_key '" + key + "'");
            }
            vec.push_back(v.get<double>());
        }
        if (!set) {
            if (vec.empty()) throw InputError(at + ": empty vector");
            const auto dim = static_cast<std::uint32_t>(vec.size());
            check_dim(level, dim, policy, name);
            set.emplace(level, dim);
        }
        try {
            set->add(key, vec);
        } catch (const InputError& e) {
            throw InputError(at + ": " + e.what());
        }
    }
    if (!set) {
        throw InputError(name + ": no embedding records");
    }
    return *set;
}

inline nlohmann::ordered_json turn_to_json(const TurnRecord& t) {
    nlohmann::ordered_json j;
    j["session_id"] = t.session_id;
    j["speaker"] = t.speaker;
    j["turn_index"] = t.turn_index;
    j["start_s"] = t.start_s;
    j["end_s"] = t.end_s;
    j["turn_key"] = t.turn_key;
    if (t.text) j["text"] = *t.text;
    return j;
}

inline TurnRecord turn_from_json(const nlohmann::json& j, const std::string& at) {
    static const std::set<std::string> known = {"type",  "session_id", "speaker",  "turn_index",
                                                "start_s", "end_s",    "turn_key", "text"};
    for (const auto& [k, _] : j.items()) {
        if (!known.contains(k)) {
            throw InputError(at + ": unknown field '" + k + "'");
        }
    }
    auto str = [&](const char* field) {
        if (!j.contains(field) || !j[field].is_string()) {
            throw InputError(at + ": field '" + std::string(field) + "' must be a string");
        }
        return j[field].get<std::string>();
    };
    auto num = [&](const char* field) {
        if (!j.contains(field) || !j[field].is_number()) {
            throw InputError(at + ": field '" + std::string(field) + "' must be a number");
        }
        return j[field].get<double>();
    };
    TurnRecord t;
    t.session_id = str("session_id");
    t.speaker = str("speaker");
    if (!j.contains("turn_index") || !j["turn_index"].is_number_unsigned()) {
        throw InputError(at + ": field 'turn_index' must be a non-negative integer");
    }
    t.turn_index = j["turn_index"].get<std::size_t>();
    t.start_s = num("start_s");
    t.end_s = num("end_s");
    t.turn_key = str("turn_key");
    if (j.contains("text") && !j["text"].is_null()) {
        t.text = str("text");
    }
    return t;
}

} // namespace detail

// Reads a binary or JSON-lines embedding file (detected from the first bytes).
inline EmbeddingSet load_embeddings(const fs::path& path, Level expected_level,
                                    const DimPolicy& policy = {}) {
    if (!fs::exists(path)) {
        throw InputError("embedding file not found: '" + path.string() + "'");
    }
    const auto bytes = detail::read_bytes(path);
    const std::string name = path.string();
    if (bytes.size() >= 3 && bytes[0] == 'E' && bytes[1] == 'M' && bytes[2] == 'B') {
        return detail::parse_binary(bytes, expected_level, policy, name);
    }
    const auto first = std::find_if(bytes.begin(), bytes.end(),
                                    [](std::uint8_t c) { return !std::isspace(c); });
    if (first != bytes.end() && *first == '{') {
        return detail::parse_jsonl(bytes, expected_level, policy, name);
    }
    throw InputError(name + ": bad magic bytes (neither EMB1 binary nor JSON lines)");
}

inline std::string encode_embeddings_binary(const EmbeddingSet& set) {
    std::string out = "EMB1";
    detail::write_le<std::uint32_t>(out, set.dim());
    detail::write_le<std::uint64_t>(out, set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        const std::string& key = set.keys()[i];
        if (key.size() > 0xFFFF) {
            throw InputError("turn_key longer than 65535 bytes");
        }
        detail::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(key.size()));
        out += key;
        for (double v : set.row(i)) {
            detail::write_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        }
    }
    return out;
}

inline void save_embeddings(const EmbeddingSet& set, const fs::path& path) {
    detail::write_file(path, encode_embeddings_binary(set));
}

inline void save_embeddings_jsonl(const EmbeddingSet& set, const fs::path& path) {
    std::string out;
    for (std::size_t i = 0; i < set.size(); ++i) {
        nlohmann::ordered_json rec;
        rec["key"] = set.keys()[i];
        const auto row = set.row(i);
        rec["vec"] = std::vector<double>(row.begin(), row.end());
        out += rec.dump() + "\n";
    }
    detail::write_file(path, out);
}

inline fs::path resolve_embedding_path(const fs::path& manifest_path, const std::string& ref) {
    const fs::path p(ref);
    return p.is_absolute() ? p : manifest_path.parent_path() / p;
}

inline std::string encode_manifest(const Corpus& corpus) {
    nlohmann::ordered_json header;
    header["type"] = "header";
    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    for (const auto& [level, path] : corpus.embedding_files) {
        files[std::string(level_name(level))] = path;
    }
    header["embedding_files"] = files;
    std::string out = header.dump() + "\n";
    for (const auto& s : corpus.sessions) {
        for (const auto& t : s.turns) {
            out += detail::turn_to_json(t).dump() + "\n";
        }
    }
    return out;
}

inline void save_manifest(const Corpus& corpus, const fs::path& path) {
    detail::write_file(path, encode_manifest(corpus));
}

// Parses and validates a manifest. Any malformed line or invariant violation
// throws InputError; a partially loaded corpus is never returned.
inline Corpus load_manifest(const fs::path& path, const ManifestOptions& options = {}) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open manifest '" + path.string() + "'");
    }
    Corpus corpus;
    bool have_header = false;
    std::map<std::string, std::size_t> session_pos;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string at = path.string() + ":" + std::to_string(line_no);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw InputError(at + ": parse error: " + e.what());
        }
        if (!j.is_object()) {
            throw InputError(at + ": parse error: expected a JSON object");
        }
        const bool is_header = j.contains("type") && j["type"] == "header";
        if (!have_header) {
            if (!is_header) {
                throw InputError(at + ": first line must be the header ({\"type\":\"header\",...})");
            }
            if (!j.contains("embedding_files") || !j["embedding_files"].is_object() ||
                j["embedding_files"].empty()) {
                throw InputError(at + ": header needs a non-empty 'embedding_files' object");
            }
            for (const auto& [name, ref] : j["embedding_files"].items()) {
                const auto level = parse_level(name);
                if (!level) throw InputError(at + ": unknown level '" + name + "'");
                if (!ref.is_string()) throw InputError(at + ": embedding path must be a string");
                corpus.embedding_files[*level] = ref.get<std::string>();
            }
            have_header = true;
            continue;
        }
        if (is_header) {
            throw InputError(at + ": duplicate header line");
        }
        if (j.contains("type") && j["type"] != "turn") {
            throw InputError(at + ": unknown record type");
        }
        TurnRecord t = detail::turn_from_json(j, at);
        auto [it, inserted] = session_pos.emplace(t.session_id, corpus.sessions.size());
        if (inserted) {
            corpus.sessions.push_back({t.session_id, {}});
        }
        corpus.sessions[it->second].turns.push_back(std::move(t));
    }
    if (!have_header) {
        throw InputError(path.string() + ": empty manifest (missing header)");
    }
    if (corpus.sessions.empty()) {
        throw InputError(path.string() + ": manifest has no turns");
    }
    for (auto& s : corpus.sessions) {
        std::stable_sort(s.turns.begin(), s.turns.end(),
                         [](const TurnRecord& a, const TurnRecord& b) {
                             return a.turn_index < b.turn_index;
                         });
    }
    validate_corpus(corpus);
    if (options.require_embedding_files) {
        for (const auto& [level, ref] : corpus.embedding_files) {
            const fs::path p = resolve_embedding_path(path, ref);
            if (!fs::exists(p)) {
                throw InputError("dangling embedding reference: " + std::string(level_name(level)) +
                                 " file '" + p.string() + "' not found");
            }
        }
    }
    return corpus;
}

struct LoadedCorpus {
    Corpus corpus;
    std::map<Level, EmbeddingSet> embeddings;
};

// Manifest plus the embedding sets of `levels` (all declared levels when
// empty), with every turn_key checked against every loaded set.
inline LoadedCorpus load_corpus(const fs::path& manifest_path, const std::vector<Level>& levels = {},
                                const DimPolicy& policy = {}) {
    LoadedCorpus out;
    out.corpus = load_manifest(manifest_path);
    std::vector<Level> wanted = levels;
    if (wanted.empty()) {
        for (const auto& [level, _] : out.corpus.embedding_files) wanted.push_back(level);
    }
    for (Level level : wanted) {
        const auto it = out.corpus.embedding_files.find(level);
        if (it == out.corpus.embedding_files.end()) {
            throw InputError("manifest declares no " + std::string(level_name(level)) +
                             " embedding file");
        }
        EmbeddingSet emb =
            load_embeddings(resolve_embedding_path(manifest_path, it->second), level, policy);
        check_coverage(out.corpus, emb);
        out.embeddings.emplace(level, std::move(emb));
    }
    return out;
}

} // namespace entrain
