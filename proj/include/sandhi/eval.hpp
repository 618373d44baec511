#pragma once

#include <algorithm>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sandhi/stemrules.hpp"
#include "sandhi/utf8.hpp"

namespace sandhi {

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Task { T1, T2, T3 };

inline Task task_from_string(const std::string& s) {
    if (s == "t1" || s == "T1" || s == "seg") return Task::T1;
    if (s == "t2" || s == "T2" || s == "morph") return Task::T2;
    if (s == "t3" || s == "T3" || s == "joint") return Task::T3;
    throw EvalError("unknown task: " + s);
}

// Items are serialized comparison units: a word for T1, stem+tag for T2,
// word+stem+tag for T3. The unit separator keeps fields unambiguous.
inline std::string make_item(std::initializer_list<std::string> fields) {
    std::string out;
    bool first = true;
    for (const auto& f : fields) {
        if (!first) out.push_back('\x1F');
        out += f;
        first = false;
    }
    return out;
}

struct ScoreReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double full_sentence_match = 0.0;
    size_t matched = 0;
    size_t pred_total = 0;
    size_t gold_total = 0;
    size_t sentences = 0;
    size_t full_matches = 0;
    std::map<std::string, size_t> error_counts;
    std::vector<std::pair<std::string, ScoreReport>> strata;

    void finalize() {
        precision = pred_total ? static_cast<double>(matched) / pred_total : 0.0;
        recall = gold_total ? static_cast<double>(matched) / gold_total : 0.0;
        f1 = (precision + recall) > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
        full_sentence_match = sentences ? static_cast<double>(full_matches) / sentences : 0.0;
    }
};

namespace detail {

inline size_t multiset_intersection(std::vector<std::string> a, std::vector<std::string> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::string> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    return common.size();
}

inline void score_sentence(ScoreReport& r, const std::vector<std::string>& pred,
                           const std::vector<std::string>& gold, Task task) {
    size_t m = 0;
    if (task == Task::T2) {
        // the word sequence is given, so items match by position
        const size_t n = std::min(pred.size(), gold.size());
        for (size_t i = 0; i < n; ++i)
            if (pred[i] == gold[i]) ++m;
    } else {
        m = multiset_intersection(pred, gold);
    }
    r.matched += m;
    r.pred_total += pred.size();
    r.gold_total += gold.size();
    r.sentences += 1;
    if (m == pred.size() && m == gold.size()) r.full_matches += 1;
}

}  // namespace detail

// Micro-averaged precision/recall/F1 over serialized items, one vector per
// sentence. `strata`, when non-empty, must parallel the sentences; a
// sub-report is produced for each distinct stratum.
inline ScoreReport score_strict(const std::vector<std::vector<std::string>>& pred,
                                const std::vector<std::vector<std::string>>& gold, Task task,
                                const std::vector<std::string>& strata = {}) {
    if (pred.size() != gold.size())
        throw EvalError("prediction and gold sentence counts differ: " + std::to_string(pred.size()) +
                        " vs " + std::to_string(gold.size()));
    if (!strata.empty() && strata.size() != gold.size())
        throw EvalError("strata labels do not cover every sentence");
    ScoreReport r;
    std::map<std::string, ScoreReport> by_stratum;
    for (size_t i = 0; i < pred.size(); ++i) {
        detail::score_sentence(r, pred[i], gold[i], task);
        if (!strata.empty() && !strata[i].empty())
            detail::score_sentence(by_stratum[strata[i]], pred[i], gold[i], task);
    }
    r.finalize();
    for (auto& [name, sub] : by_stratum) {
        sub.finalize();
        r.strata.push_back({name, std::move(sub)});
    }
    return r;
}

// Character-multiset overlap divided by the gold length, counting every code
// point with multiplicity, spaces and dots included. Permutation-insensitive
// by construction. `symmetric` divides by the average length instead.
inline double score_counter(const std::string& pred, const std::string& gold,
                            bool symmetric = false) {
    std::u32string p = utf8_decode(pred), g = utf8_decode(gold);
    if (g.empty() && !symmetric) return p.empty() ? 1.0 : 0.0;
    if (p.empty() && g.empty()) return 1.0;
    std::map<char32_t, size_t> pc, gc;
    for (char32_t c : p) ++pc[c];
    for (char32_t c : g) ++gc[c];
    size_t common = 0;
    for (const auto& [c, n] : gc) {
        auto it = pc.find(c);
        if (it != pc.end()) common += std::min(n, it->second);
    }
    if (symmetric)
        return 2.0 * static_cast<double>(common) / static_cast<double>(p.size() + g.size());
    return static_cast<double>(common) / static_cast<double>(g.size());
}

// ---------------------------------------------------------------------------
// Error taxonomy

struct ErrorEntry {
    size_t sentence = 0;
    std::string kind;
    int subtag_errors = 0;
    std::string detail;
};

inline int count_subtag_errors(const std::string& pred_tag, const std::string& gold_tag) {
    auto p = MorphTag::subtags(pred_tag);
    auto g = MorphTag::subtags(gold_tag);
    const size_t n = std::min(p.size(), g.size());
    int errs = static_cast<int>(p.size() > g.size() ? p.size() - g.size() : g.size() - p.size());
    for (size_t i = 0; i < n; ++i)
        if (p[i] != g[i]) ++errs;
    return errs;
}

namespace detail {

inline std::map<char32_t, long> char_counts(const std::vector<std::u32string>& words) {
    std::map<char32_t, long> out;
    for (const auto& w : words)
        for (char32_t c : w) ++out[c];
    return out;
}

inline std::string join_utf8(const std::vector<std::u32string>& words) {
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) out += " ";
        out += utf8_encode(words[i]);
    }
    return out;
}

}  // namespace detail

// Segmentation errors, one entry per wrong sentence. Word counts decide
// between OVERSPLIT and UNDERSPLIT; with equal counts, a sentence that drops
// characters present in the gold is VANISHED_CHARS, anything else is a
// boundary misplacement.
inline void t1_errors(std::vector<ErrorEntry>& out, size_t sentence,
                      const std::vector<std::u32string>& pred,
                      const std::vector<std::u32string>& gold) {
    if (pred == gold) return;
    ErrorEntry e;
    e.sentence = sentence;
    if (pred.size() > gold.size()) {
        e.kind = "OVERSPLIT";
    } else if (pred.size() < gold.size()) {
        e.kind = "UNDERSPLIT";
    } else {
        auto pc = detail::char_counts(pred);
        bool vanished = false;
        for (const auto& [c, n] : detail::char_counts(gold))
            if (pc[c] < n) vanished = true;
        e.kind = vanished ? "VANISHED_CHARS" : "WRONG_SPLIT";
    }
    e.detail = detail::join_utf8(pred) + " | gold: " + detail::join_utf8(gold);
    out.push_back(std::move(e));
}

// Stem/tag errors, one entry per wrong token.
inline void t2_errors(std::vector<ErrorEntry>& out, size_t sentence, const std::string& pred_stem,
                      const std::string& pred_tag, const std::string& gold_stem,
                      const std::string& gold_tag) {
    const bool stem_ok = pred_stem == gold_stem;
    const bool tag_ok = MorphTag::normalize(pred_tag) == MorphTag::normalize(gold_tag);
    if (stem_ok && tag_ok) return;
    ErrorEntry e;
    e.sentence = sentence;
    if (!stem_ok && tag_ok) {
        e.kind = "STEM_ONLY_WRONG";
        e.detail = pred_stem + " | gold: " + gold_stem;
    } else if (stem_ok && !tag_ok) {
        e.kind = "TAG_ONLY_WRONG";
        e.subtag_errors = count_subtag_errors(pred_tag, gold_tag);
        e.detail = pred_tag + " | gold: " + gold_tag;
    } else {
        e.kind = "BOTH_WRONG";
        e.detail = pred_stem + " / " + pred_tag + " | gold: " + gold_stem + " / " + gold_tag;
    }
    out.push_back(std::move(e));
}

struct PredictionSentence {
    std::vector<std::u32string> words;
    std::vector<std::u32string> stems;
    std::vector<std::string> tags;
};

// T1 compares word sequences; T2 compares stems/tags positionally; T3 does
// both, classifying stem/tag only where the predicted word matches the gold.
inline std::vector<ErrorEntry> error_report(const std::vector<PredictionSentence>& pred,
                                            const std::vector<PredictionSentence>& gold, Task task) {
    if (pred.size() != gold.size()) throw EvalError("error_report: sentence count mismatch");
    std::vector<ErrorEntry> out;
    for (size_t s = 0; s < pred.size(); ++s) {
        if (task == Task::T1 || task == Task::T3)
            t1_errors(out, s, pred[s].words, gold[s].words);
        if (task == Task::T2 || task == Task::T3) {
            const size_t n = std::min(gold[s].stems.size(), pred[s].stems.size());
            for (size_t t = 0; t < n; ++t) {
                if (task == Task::T3 &&
                    (t >= pred[s].words.size() || t >= gold[s].words.size() ||
                     pred[s].words[t] != gold[s].words[t]))
                    continue;
                t2_errors(out, s, utf8_encode(pred[s].stems[t]), pred[s].tags[t],
                          utf8_encode(gold[s].stems[t]), gold[s].tags[t]);
            }
        }
    }
    return out;
}

inline std::map<std::string, size_t> tally_errors(const std::vector<ErrorEntry>& entries) {
    std::map<std::string, size_t> out;
    for (const auto& e : entries) ++out[e.kind];
    return out;
}

// ---------------------------------------------------------------------------

inline nlohmann::ordered_json report_to_json(const ScoreReport& r) {
    nlohmann::ordered_json j;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["f1"] = r.f1;
    j["full_sentence_match"] = r.full_sentence_match;
    j["matched"] = r.matched;
    j["pred_total"] = r.pred_total;
    j["gold_total"] = r.gold_total;
    j["sentences"] = r.sentences;
    if (!r.error_counts.empty()) j["errors"] = r.error_counts;
    if (!r.strata.empty()) {
        nlohmann::ordered_json st;
        for (const auto& [name, sub] : r.strata) st[name] = report_to_json(sub);
        j["strata"] = std::move(st);
    }
    return j;
}

inline std::string report_to_text(const ScoreReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << "precision  " << r.precision << "\n";
    os << "recall     " << r.recall << "\n";
    os << "f1         " << r.f1 << "\n";
    os << "full match " << r.full_sentence_match << "  (" << r.full_matches << "/" << r.sentences
       << " sentences)\n";
    os << "items      " << r.matched << " matched, " << r.pred_total << " predicted, "
       << r.gold_total << " gold\n";
    if (!r.error_counts.empty()) {
        os << "errors\n";
        for (const auto& [kind, n] : r.error_counts)
            os << "  " << std::left << std::setw(18) << kind << " " << n << "\n";
    }
    for (const auto& [name, sub] : r.strata) {
        os << "stratum " << name << ": P " << sub.precision << "  R " << sub.recall << "  F1 "
           << sub.f1 << "  (" << sub.sentences << " sentences)\n";
    }
    return os.str();
}

}  // namespace sandhi
