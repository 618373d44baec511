#pragma once

#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sandhi/rng.hpp"
#include "sandhi/utf8.hpp"

namespace sandhi {

// Datasets of sandhied sentences with gold segmentations and, optionally,
// per-word analyses. File format: UTF-8 JSON lines, one object per sentence
// with keys `sandhied` (string), `segmentation` (array of strings), optional
// `analyses` (array of [word, stem, tag] string triples) and optional
// `strata` (string, used for stratified evaluation).

struct CorpusError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Analysis {
    std::u32string word;
    std::u32string stem;
    std::string tag;  // opaque tag string, e.g. "pr. [1] ac. sg. 3"
};

struct SentenceRecord {
    std::u32string sandhied;
    std::vector<std::u32string> segmentation;
    std::vector<Analysis> analyses;  // empty when the corpus carries task-1 data only
    std::string strata;

    bool has_analyses() const { return !analyses.empty(); }
};

struct CorpusStats {
    size_t total = 0;
    size_t removed_corrupt = 0;
    std::map<std::string, size_t> rule_counts;
};

inline std::u32string join_words(const std::vector<std::u32string>& words) {
    std::u32string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) out.push_back(U' ');
        out.append(words[i]);
    }
    return out;
}

namespace detail {

inline void validate_record(const SentenceRecord& r, const std::string& where) {
    for (const auto& w : r.segmentation) {
        if (w.empty()) throw CorpusError(where + ": empty word in segmentation");
        if (w.find(U' ') != std::u32string::npos)
            throw CorpusError(where + ": segmentation word contains a space");
    }
    if (!r.analyses.empty()) {
        if (r.analyses.size() != r.segmentation.size())
            throw CorpusError(where + ": analyses length does not match segmentation");
        for (size_t i = 0; i < r.analyses.size(); ++i) {
            if (r.analyses[i].word != r.segmentation[i])
                throw CorpusError(where + ": analysis word " + std::to_string(i) +
                                  " does not match segmentation");
        }
    }
}

}  // namespace detail

inline SentenceRecord record_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) throw CorpusError(where + ": expected a JSON object");
    if (!j.contains("sandhied") || !j["sandhied"].is_string())
        throw CorpusError(where + ": missing string field 'sandhied'");
    if (!j.contains("segmentation") || !j["segmentation"].is_array())
        throw CorpusError(where + ": missing array field 'segmentation'");
    SentenceRecord r;
    r.sandhied = utf8_decode(j["sandhied"].get<std::string>());
    for (const auto& w : j["segmentation"]) {
        if (!w.is_string()) throw CorpusError(where + ": segmentation entries must be strings");
        r.segmentation.push_back(utf8_decode(w.get<std::string>()));
    }
    if (j.contains("analyses")) {
        if (!j["analyses"].is_array()) throw CorpusError(where + ": 'analyses' must be an array");
        for (const auto& a : j["analyses"]) {
            if (!a.is_array() || a.size() != 3 || !a[0].is_string() || !a[1].is_string() || !a[2].is_string())
                throw CorpusError(where + ": analyses entries must be [word, stem, tag] string triples");
            r.analyses.push_back({utf8_decode(a[0].get<std::string>()),
                                  utf8_decode(a[1].get<std::string>()),
                                  a[2].get<std::string>()});
        }
    }
    if (j.contains("strata")) {
        if (!j["strata"].is_string()) throw CorpusError(where + ": 'strata' must be a string");
        r.strata = j["strata"].get<std::string>();
    }
    detail::validate_record(r, where);
    return r;
}

inline nlohmann::ordered_json record_to_json(const SentenceRecord& r) {
    nlohmann::ordered_json j;
    j["sandhied"] = utf8_encode(r.sandhied);
    auto seg = nlohmann::ordered_json::array();
    for (const auto& w : r.segmentation) seg.push_back(utf8_encode(w));
    j["segmentation"] = std::move(seg);
    if (!r.analyses.empty()) {
        auto an = nlohmann::ordered_json::array();
        for (const auto& a : r.analyses)
            an.push_back({utf8_encode(a.word), utf8_encode(a.stem), a.tag});
        j["analyses"] = std::move(an);
    }
    if (!r.strata.empty()) j["strata"] = r.strata;
    return j;
}

// One record per line, file order preserved. Errors carry the line number.
inline std::vector<SentenceRecord> load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorpusError("cannot open dataset: " + path);
    std::vector<SentenceRecord> records;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(lineno);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw CorpusError(where + ": " + e.what());
        }
        if (j.is_object() && j.contains("_meta")) continue;  // embedded artifact header
        records.push_back(record_from_json(j, where));
    }
    return records;
}

inline void save_dataset(const std::string& path, const std::vector<SentenceRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CorpusError("cannot write dataset: " + path);
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

// Drops records whose sandhied string is longer (in code points) than the
// space-joined segmentation; those cannot be produced by sandhi and mark
// corrupted gold data.
inline std::pair<std::vector<SentenceRecord>, CorpusStats> filter_corrupt(
    const std::vector<SentenceRecord>& records) {
    std::vector<SentenceRecord> kept;
    kept.reserve(records.size());
    CorpusStats stats;
    stats.total = records.size();
    for (const auto& r : records) {
        if (r.sandhied.size() > join_words(r.segmentation).size())
            ++stats.removed_corrupt;
        else
            kept.push_back(r);
    }
    return {std::move(kept), stats};
}

// ---------------------------------------------------------------------------
// Synthetic corpus generation. Forward generation is deterministic: words are
// joined left to right and at each boundary the fusion keyed on
// (final char of left word, initial char of right word) applies if present,
// otherwise the boundary keeps its space.

struct Inflection {
    size_t strip = 0;       // code points removed from the stem's tail
    std::u32string add;     // ending appended afterwards
    std::string tag;
};

struct LexEntry {
    std::u32string stem;
    std::vector<Inflection> forms;
};

struct SandhiFusion {
    char32_t left;          // final char of the left word
    char32_t right;         // initial char of the right word
    std::u32string fused;   // replaces both, no space
};

inline std::u32string inflect(const LexEntry& e, const Inflection& f) {
    if (f.strip > e.stem.size())
        throw CorpusError("inflection strips more characters than the stem has");
    return e.stem.substr(0, e.stem.size() - f.strip) + f.add;
}

// Joins words applying at most one fusion per boundary; `fusion_at`, when
// given, records the sandhied-string index of each fused region.
inline std::u32string apply_sandhi(const std::vector<std::u32string>& words,
                                   const std::vector<SandhiFusion>& table,
                                   std::vector<std::pair<size_t, SandhiFusion>>* fusion_at = nullptr) {
    std::u32string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i == 0) {
            out = words[0];
            continue;
        }
        const std::u32string& w = words[i];
        const SandhiFusion* hit = nullptr;
        for (const auto& f : table) {
            if (!out.empty() && out.back() == f.left && !w.empty() && w.front() == f.right) {
                hit = &f;
                break;
            }
        }
        if (hit) {
            out.pop_back();
            if (fusion_at) fusion_at->push_back({out.size(), *hit});
            out.append(hit->fused);
            out.append(w.substr(1));
        } else {
            out.push_back(U' ');
            out.append(w);
        }
    }
    return out;
}

inline nlohmann::ordered_json lexicon_to_json(const std::vector<LexEntry>& lexicon) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& e : lexicon) {
        nlohmann::ordered_json j;
        j["stem"] = utf8_encode(e.stem);
        auto forms = nlohmann::ordered_json::array();
        for (const auto& f : e.forms)
            forms.push_back({{"strip", f.strip}, {"add", utf8_encode(f.add)}, {"tag", f.tag}});
        j["forms"] = std::move(forms);
        arr.push_back(std::move(j));
    }
    return arr;
}

inline std::vector<LexEntry> lexicon_from_json(const nlohmann::json& arr) {
    std::vector<LexEntry> lexicon;
    for (const auto& j : arr) {
        LexEntry e;
        e.stem = utf8_decode(j.at("stem").get<std::string>());
        for (const auto& f : j.at("forms"))
            e.forms.push_back({f.at("strip").get<size_t>(),
                               utf8_decode(f.at("add").get<std::string>()),
                               f.at("tag").get<std::string>()});
        lexicon.push_back(std::move(e));
    }
    return lexicon;
}

inline nlohmann::ordered_json sandhi_table_to_json(const std::vector<SandhiFusion>& table) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& f : table)
        arr.push_back({{"left", utf8_encode(f.left)},
                       {"right", utf8_encode(f.right)},
                       {"fused", utf8_encode(f.fused)}});
    return arr;
}

inline std::vector<SandhiFusion> sandhi_table_from_json(const nlohmann::json& arr) {
    std::vector<SandhiFusion> table;
    for (const auto& j : arr) {
        std::u32string left = utf8_decode(j.at("left").get<std::string>());
        std::u32string right = utf8_decode(j.at("right").get<std::string>());
        if (left.size() != 1 || right.size() != 1)
            throw CorpusError("sandhi table left/right contexts must be single characters");
        table.push_back({left[0], right[0], utf8_decode(j.at("fused").get<std::string>())});
    }
    return table;
}

inline std::vector<SentenceRecord> synth_corpus(const std::vector<LexEntry>& lexicon,
                                                const std::vector<SandhiFusion>& table,
                                                size_t n, uint64_t seed,
                                                size_t min_words = 3, size_t max_words = 6) {
    if (n > 0 && lexicon.empty()) throw CorpusError("cannot synthesize from an empty lexicon");
    Rng rng(seed);
    std::vector<SentenceRecord> records;
    records.reserve(n);
    for (size_t s = 0; s < n; ++s) {
        size_t len = min_words + rng.below(max_words - min_words + 1);
        SentenceRecord r;
        for (size_t w = 0; w < len; ++w) {
            const LexEntry& e = lexicon[rng.below(lexicon.size())];
            const Inflection& f = e.forms[rng.below(e.forms.size())];
            std::u32string word = inflect(e, f);
            r.segmentation.push_back(word);
            r.analyses.push_back({std::move(word), e.stem, f.tag});
        }
        r.sandhied = apply_sandhi(r.segmentation, table);
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace sandhi
