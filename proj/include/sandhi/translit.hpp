#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "sandhi/utf8.hpp"

namespace sandhi {

// Conversion between IAST and an internal scheme with exactly one code point
// per phoneme. IAST spells aspirated consonants and diphthongs with two code
// points; the internal scheme packs each of these into a single private-use
// code point so that downstream per-character labelling sees one symbol per
// phonemic unit.

struct TranslitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TranslitTable {
    struct Pair {
        std::u32string iast;  // one or more code points
        char32_t internal;    // exactly one code point
    };

    std::string version;
    std::vector<Pair> pairs;  // matched in order; keep longest units first

    // Built-in mapping, version "builtin-1". Private-use code points, one per
    // two-code-point IAST unit.
    static TranslitTable builtin() {
        TranslitTable t;
        t.version = "builtin-1";
        auto add = [&t](std::u32string iast, char32_t internal) {
            t.pairs.push_back({std::move(iast), internal});
        };
        add(U"kh", 0xE001);
        add(U"gh", 0xE002);
        add(U"ch", 0xE003);
        add(U"jh", 0xE004);
        add(std::u32string{0x1E6D, U'h'}, 0xE005);  // ṭh
        add(std::u32string{0x1E0D, U'h'}, 0xE006);  // ḍh
        add(U"th", 0xE007);
        add(U"dh", 0xE008);
        add(U"ph", 0xE009);
        add(U"bh", 0xE00A);
        add(U"ai", 0xE00B);
        add(U"au", 0xE00C);
        t.validate();
        return t;
    }

    // TSV override: two columns `iast` and `internal`, file order defines
    // matching precedence. A leading "iast\tinternal" header line is skipped.
    static TranslitTable from_tsv(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw TranslitError("cannot open transliteration table: " + path);
        TranslitTable t;
        t.version = "tsv:" + path;
        std::string line;
        size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos)
                throw TranslitError(path + ":" + std::to_string(lineno) + ": expected two tab-separated columns");
            std::string a = line.substr(0, tab);
            std::string b = line.substr(tab + 1);
            if (lineno == 1 && a == "iast" && b == "internal") continue;
            std::u32string iast = utf8_decode(a);
            std::u32string internal = utf8_decode(b);
            if (iast.empty())
                throw TranslitError(path + ":" + std::to_string(lineno) + ": empty iast column");
            if (internal.size() != 1)
                throw TranslitError(path + ":" + std::to_string(lineno) + ": internal column must be a single code point");
            t.pairs.push_back({std::move(iast), internal[0]});
        }
        t.validate();
        return t;
    }

    void validate() const {
        std::unordered_set<char32_t> seen;
        for (const auto& p : pairs) {
            if (p.iast.empty()) throw TranslitError("empty IAST unit in table");
            if (!seen.insert(p.internal).second)
                throw TranslitError("duplicate internal symbol " + utf8_encode(p.internal));
        }
    }
};

// Greedy left-to-right substitution; the first table entry whose IAST unit is
// a prefix at the current position wins. Unknown sequences pass through.
inline std::u32string to_internal(std::u32string_view text, const TranslitTable& table) {
    std::u32string out;
    out.reserve(text.size());
    size_t i = 0;
    while (i < text.size()) {
        const TranslitTable::Pair* hit = nullptr;
        for (const auto& p : table.pairs) {
            if (p.iast.size() <= text.size() - i &&
                text.compare(i, p.iast.size(), p.iast) == 0) {
                hit = &p;
                break;  // table order is precedence; first match wins
            }
        }
        if (hit) {
            out.push_back(hit->internal);
            i += hit->iast.size();
        } else {
            out.push_back(text[i]);
            ++i;
        }
    }
    return out;
}

inline std::u32string to_iast(std::u32string_view text, const TranslitTable& table) {
    std::u32string out;
    out.reserve(text.size() * 2);
    for (char32_t c : text) {
        bool hit = false;
        for (const auto& p : table.pairs) {
            if (p.internal == c) {
                out.append(p.iast);
                hit = true;
                break;
            }
        }
        if (!hit) out.push_back(c);
    }
    return out;
}

inline std::string to_internal(std::string_view utf8_text, const TranslitTable& table) {
    return utf8_encode(to_internal(utf8_decode(utf8_text), table));
}

inline std::string to_iast(std::string_view utf8_text, const TranslitTable& table) {
    return utf8_encode(to_iast(utf8_decode(utf8_text), table));
}

}  // namespace sandhi
