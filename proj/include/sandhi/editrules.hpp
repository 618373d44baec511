#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sandhi/corpus.hpp"
#include "sandhi/utf8.hpp"

namespace sandhi {

// Per-character edit operations that turn a sandhied sentence into its
// space-joined segmentation. COPY and INSERT_SPACE_AFTER abstract away from
// the concrete character; REPLACE carries literal (source, target) ngrams.

enum class EditKind : uint8_t { Pad, Unk, Copy, InsertSpaceAfter, Replace };

struct EditRule {
    EditKind kind = EditKind::Copy;
    std::u32string source;  // REPLACE only, never empty
    std::u32string target;  // REPLACE only, may be empty or contain spaces

    static EditRule copy() { return {EditKind::Copy, {}, {}}; }
    static EditRule insert_space_after() { return {EditKind::InsertSpaceAfter, {}, {}}; }
    static EditRule replace(std::u32string src, std::u32string tgt) {
        return {EditKind::Replace, std::move(src), std::move(tgt)};
    }
    static EditRule pad() { return {EditKind::Pad, {}, {}}; }
    static EditRule unk() { return {EditKind::Unk, {}, {}}; }

    bool operator==(const EditRule& o) const {
        return kind == o.kind && source == o.source && target == o.target;
    }
    bool operator!=(const EditRule& o) const { return !(*this == o); }
    bool operator<(const EditRule& o) const {
        if (kind != o.kind) return kind < o.kind;
        if (source != o.source) return source < o.source;
        return target < o.target;
    }

    std::string display() const {
        switch (kind) {
            case EditKind::Pad: return "PAD";
            case EditKind::Unk: return "UNK";
            case EditKind::Copy: return "COPY";
            case EditKind::InsertSpaceAfter: return "INSERT_SPACE_AFTER";
            case EditKind::Replace: return utf8_encode(source) + " -> " + utf8_encode(target);
        }
        return "?";
    }
};

struct EditRuleHash {
    size_t operator()(const EditRule& r) const {
        size_t h = static_cast<size_t>(r.kind);
        for (char32_t c : r.source) h = h * 1000003u + c;
        h = h * 1000003u + 0xFFFF;
        for (char32_t c : r.target) h = h * 1000003u + c;
        return h;
    }
};

using EditLabelSequence = std::vector<EditRule>;  // one label per source character

struct AlignChunk {
    enum Kind : uint8_t { Match, Diff } kind;
    size_t src_begin, src_end;  // half-open span in the source
    size_t tgt_begin, tgt_end;  // half-open span in the target
};

struct AlignError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Alignment {
    std::vector<AlignChunk> chunks;
    size_t cost = 0;  // unit-cost edit distance realized by the chunks
};

// Minimal unit-cost alignment. The backtrace scans left to right and prefers
// match > substitution > insertion > deletion at equal cost, so rule
// inventories extracted from it are reproducible.
inline Alignment align(const std::u32string& source, const std::u32string& target) {
    if (source.size() > target.size())
        throw AlignError("source is longer than target; filter corrupt records first");
    const size_t n = source.size(), m = target.size();

    // d[i][j] = edit distance between source[i:] and target[j:]
    std::vector<uint32_t> d((n + 1) * (m + 1));
    auto at = [&](size_t i, size_t j) -> uint32_t& { return d[i * (m + 1) + j]; };
    for (size_t j = 0; j <= m; ++j) at(n, j) = static_cast<uint32_t>(m - j);
    for (size_t i = 0; i < n; ++i) at(i, m) = static_cast<uint32_t>(n - i);
    for (size_t i = n; i-- > 0;) {
        for (size_t j = m; j-- > 0;) {
            uint32_t best = 1 + std::min(at(i + 1, j + 1), std::min(at(i, j + 1), at(i + 1, j)));
            if (source[i] == target[j]) best = std::min(best, at(i + 1, j + 1));
            at(i, j) = best;
        }
    }

    Alignment out;
    out.cost = at(0, 0);
    size_t i = 0, j = 0;
    size_t chunk_si = 0, chunk_ti = 0;
    bool in_chunk = false;
    bool chunk_match = false;
    auto flush = [&](size_t si, size_t ti) {
        if (!in_chunk) return;
        out.chunks.push_back({chunk_match ? AlignChunk::Match : AlignChunk::Diff,
                              chunk_si, si, chunk_ti, ti});
        in_chunk = false;
    };
    auto step = [&](bool is_match, size_t ni, size_t nj) {
        if (!in_chunk || chunk_match != is_match) {
            flush(i, j);
            chunk_si = i;
            chunk_ti = j;
            chunk_match = is_match;
            in_chunk = true;
        }
        i = ni;
        j = nj;
    };
    while (i < n || j < m) {
        if (i < n && j < m && source[i] == target[j] && at(i, j) == at(i + 1, j + 1)) {
            step(true, i + 1, j + 1);
        } else if (i < n && j < m && at(i, j) == 1 + at(i + 1, j + 1)) {
            step(false, i + 1, j + 1);
        } else if (j < m && at(i, j) == 1 + at(i, j + 1)) {
            step(false, i, j + 1);
        } else {
            step(false, i + 1, j);
        }
    }
    flush(i, j);
    return out;
}

struct DeriveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Turns an aligned pair into one edit label per source character. Match
// chars become COPY; a Diff chunk becomes one REPLACE rule stamped on each
// of its source characters. A Diff with empty source cannot carry a label of
// its own, so its target is concatenated onto the rule of the character to
// its left; the single-space case is the abstract INSERT_SPACE_AFTER rule.
inline EditLabelSequence derive_labels(const std::u32string& source, const std::u32string& target) {
    Alignment al = align(source, target);
    EditLabelSequence labels(source.size(), EditRule::copy());
    for (const auto& c : al.chunks) {
        if (c.kind == AlignChunk::Match) continue;
        std::u32string tgt = target.substr(c.tgt_begin, c.tgt_end - c.tgt_begin);
        if (c.src_begin == c.src_end) {
            if (c.src_begin == 0)
                throw DeriveError("insertion before the first character has no rule to attach to");
            size_t left = c.src_begin - 1;
            EditRule& lr = labels[left];
            if (tgt == U" " && lr.kind == EditKind::Copy) {
                lr = EditRule::insert_space_after();
            } else {
                switch (lr.kind) {
                    case EditKind::Copy:
                        lr = EditRule::replace(std::u32string(1, source[left]),
                                               std::u32string(1, source[left]) + tgt);
                        break;
                    case EditKind::InsertSpaceAfter:
                        lr = EditRule::replace(std::u32string(1, source[left]),
                                               std::u32string(1, source[left]) + U" " + tgt);
                        break;
                    case EditKind::Replace:
                        lr.target += tgt;
                        break;
                    default:
                        throw DeriveError("cannot attach insertion to PAD/UNK label");
                }
            }
        } else {
            EditRule rule = EditRule::replace(
                source.substr(c.src_begin, c.src_end - c.src_begin), std::move(tgt));
            for (size_t k = c.src_begin; k < c.src_end; ++k) labels[k] = rule;
        }
    }
    return labels;
}

struct ApplyDiagnostics {
    size_t rule_mismatches = 0;   // REPLACE whose source did not match the span
    size_t non_rule_labels = 0;   // PAD/UNK labels treated as COPY
    std::vector<std::string> messages;
};

// Applies a label sequence to the source. Consecutive equal REPLACE labels
// contract into a single application covering their span; a REPLACE whose
// source ngram does not match the span falls back to COPY and is flagged.
inline std::vector<std::u32string> apply_labels(const std::u32string& source,
                                                const EditLabelSequence& labels,
                                                ApplyDiagnostics* diag = nullptr) {
    if (labels.size() != source.size())
        throw DeriveError("label sequence length does not match source length");
    std::u32string out;
    out.reserve(source.size() + source.size() / 4);
    size_t i = 0;
    while (i < source.size()) {
        const EditRule& r = labels[i];
        switch (r.kind) {
            case EditKind::Copy:
                out.push_back(source[i]);
                ++i;
                break;
            case EditKind::InsertSpaceAfter:
                out.push_back(source[i]);
                out.push_back(U' ');
                ++i;
                break;
            case EditKind::Replace: {
                size_t j = i + 1;
                while (j < source.size() && labels[j] == r) ++j;
                if (source.compare(i, j - i, r.source) == 0) {
                    out.append(r.target);
                } else {
                    out.append(source, i, j - i);
                    if (diag) {
                        ++diag->rule_mismatches;
                        diag->messages.push_back("rule '" + r.display() + "' does not match span '" +
                                                 utf8_encode(source.substr(i, j - i)) +
                                                 "' at index " + std::to_string(i) + "; copied");
                    }
                }
                i = j;
                break;
            }
            default:
                out.push_back(source[i]);
                if (diag) ++diag->non_rule_labels;
                ++i;
                break;
        }
    }
    std::vector<std::u32string> words;
    std::u32string cur;
    for (char32_t c : out) {
        if (c == U' ') {
            if (!cur.empty()) words.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

// ---------------------------------------------------------------------------

struct EditRuleVocab {
    std::vector<EditRule> rules;                           // index = class id
    std::vector<size_t> freq;                              // parallel to rules
    std::unordered_map<EditRule, int, EditRuleHash> index;
    std::vector<std::string> notes;                        // skipped records, odd rules

    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kCopy = 2;
    static constexpr int kInsertSpaceAfter = 3;

    int id_of(const EditRule& r) const {
        auto it = index.find(r);
        return it == index.end() ? kUnk : it->second;
    }
    size_t size() const { return rules.size(); }

    void rebuild_index() {
        index.clear();
        for (size_t i = 0; i < rules.size(); ++i) index[rules[i]] = static_cast<int>(i);
    }
};

// Walks a derived label sequence and invokes `fn` once per rule application
// (contracted REPLACE spans count once).
template <typename Fn>
inline void for_each_application(const EditLabelSequence& labels, Fn&& fn) {
    size_t i = 0;
    while (i < labels.size()) {
        size_t j = i + 1;
        if (labels[i].kind == EditKind::Replace)
            while (j < labels.size() && labels[j] == labels[i]) ++j;
        fn(labels[i]);
        i = j;
    }
}

inline EditRuleVocab collect_rules(const std::vector<SentenceRecord>& records, size_t cutoff = 1) {
    EditRuleVocab vocab;
    std::map<EditRule, size_t> counts;  // ordered for deterministic lexicographic ties
    size_t copies = 0, inserts = 0;
    for (size_t ri = 0; ri < records.size(); ++ri) {
        const auto& rec = records[ri];
        std::u32string target = join_words(rec.segmentation);
        if (rec.sandhied.size() > target.size()) {
            vocab.notes.push_back("record " + std::to_string(ri) + " skipped: source longer than target");
            continue;
        }
        EditLabelSequence labels;
        try {
            labels = derive_labels(rec.sandhied, target);
        } catch (const DeriveError& e) {
            vocab.notes.push_back("record " + std::to_string(ri) + " rejected: " + e.what());
            continue;
        }
        for_each_application(labels, [&](const EditRule& r) {
            switch (r.kind) {
                case EditKind::Copy: ++copies; break;
                case EditKind::InsertSpaceAfter: ++inserts; break;
                case EditKind::Replace: ++counts[r]; break;
                default: break;
            }
        });
    }

    vocab.rules = {EditRule::pad(), EditRule::unk(), EditRule::copy(), EditRule::insert_space_after()};
    vocab.freq = {0, 0, copies, inserts};

    std::vector<std::pair<EditRule, size_t>> kept;
    for (const auto& [rule, count] : counts)
        if (count >= cutoff) kept.push_back({rule, count});
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (auto& [rule, count] : kept) {
        if (rule.target.empty())
            vocab.notes.push_back("rule '" + rule.display() +
                                  "' maps to the empty string; likely extracted from corrupt gold data");
        vocab.rules.push_back(std::move(rule));
        vocab.freq.push_back(count);
    }
    vocab.rebuild_index();
    return vocab;
}

inline nlohmann::ordered_json edit_vocab_to_json(const EditRuleVocab& vocab) {
    auto arr = nlohmann::ordered_json::array();
    for (size_t i = 0; i < vocab.rules.size(); ++i) {
        const EditRule& r = vocab.rules[i];
        nlohmann::ordered_json j;
        switch (r.kind) {
            case EditKind::Pad: j["kind"] = "PAD"; break;
            case EditKind::Unk: j["kind"] = "UNK"; break;
            case EditKind::Copy: j["kind"] = "COPY"; break;
            case EditKind::InsertSpaceAfter: j["kind"] = "INSERT_SPACE_AFTER"; break;
            case EditKind::Replace:
                j["kind"] = "REPLACE";
                j["source"] = utf8_encode(r.source);
                j["target"] = utf8_encode(r.target);
                break;
        }
        j["freq"] = vocab.freq[i];
        arr.push_back(std::move(j));
    }
    return arr;
}

inline EditRuleVocab edit_vocab_from_json(const nlohmann::json& arr) {
    EditRuleVocab vocab;
    for (const auto& j : arr) {
        std::string kind = j.at("kind").get<std::string>();
        EditRule r;
        if (kind == "PAD") r = EditRule::pad();
        else if (kind == "UNK") r = EditRule::unk();
        else if (kind == "COPY") r = EditRule::copy();
        else if (kind == "INSERT_SPACE_AFTER") r = EditRule::insert_space_after();
        else if (kind == "REPLACE")
            r = EditRule::replace(utf8_decode(j.at("source").get<std::string>()),
                                  utf8_decode(j.at("target").get<std::string>()));
        else throw DeriveError("unknown edit rule kind: " + kind);
        vocab.rules.push_back(std::move(r));
        vocab.freq.push_back(j.value("freq", size_t{0}));
    }
    vocab.rebuild_index();
    return vocab;
}

}  // namespace sandhi
