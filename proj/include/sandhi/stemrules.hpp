#pragma once

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sandhi/corpus.hpp"
#include "sandhi/utf8.hpp"

namespace sandhi {

// Word -> stem transformation rules. A rule is a quadruple of affixes: it
// applies to a word that starts with prefix_word and ends with suffix_word,
// and produces the stem by swapping those affixes for prefix_stem and
// suffix_stem. Rules extracted from one pair generalize to any word with the
// same affixes.

struct StemRuleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StemRule {
    std::u32string prefix_word;
    std::u32string suffix_word;
    std::u32string prefix_stem;
    std::u32string suffix_stem;
    std::string tag;      // set only in joint tag-rule mode
    bool has_tag = false;

    bool is_identity() const {
        return prefix_word.empty() && suffix_word.empty() && prefix_stem.empty() &&
               suffix_stem.empty();
    }

    bool operator==(const StemRule& o) const {
        return prefix_word == o.prefix_word && suffix_word == o.suffix_word &&
               prefix_stem == o.prefix_stem && suffix_stem == o.suffix_stem &&
               has_tag == o.has_tag && tag == o.tag;
    }
    bool operator<(const StemRule& o) const {
        if (prefix_word != o.prefix_word) return prefix_word < o.prefix_word;
        if (suffix_word != o.suffix_word) return suffix_word < o.suffix_word;
        if (prefix_stem != o.prefix_stem) return prefix_stem < o.prefix_stem;
        if (suffix_stem != o.suffix_stem) return suffix_stem < o.suffix_stem;
        if (has_tag != o.has_tag) return has_tag < o.has_tag;
        return tag < o.tag;
    }

    std::string display() const {
        std::string s = "(" + utf8_encode(prefix_word) + "|" + utf8_encode(suffix_word) + ") -> (" +
                        utf8_encode(prefix_stem) + "|" + utf8_encode(suffix_stem) + ")";
        if (has_tag) s += " [" + tag + "]";
        return s;
    }
};

struct StemRuleHash {
    size_t operator()(const StemRule& r) const {
        size_t h = 0;
        auto mix = [&h](const std::u32string& s) {
            for (char32_t c : s) h = h * 1000003u + c;
            h = h * 1000003u + 0xFFFF;
        };
        mix(r.prefix_word);
        mix(r.suffix_word);
        mix(r.prefix_stem);
        mix(r.suffix_stem);
        for (char c : r.tag) h = h * 1000003u + static_cast<unsigned char>(c);
        return h;
    }
};

// Morphological tags are opaque strings; normalization collapses repeated
// whitespace only. Subtags are the whitespace-separated units.
struct MorphTag {
    std::string raw;

    static std::string normalize(const std::string& s) {
        std::string out;
        bool in_space = true;  // also trims leading spaces
        for (char c : s) {
            if (c == ' ' || c == '\t') {
                if (!in_space) out.push_back(' ');
                in_space = true;
            } else {
                out.push_back(c);
                in_space = false;
            }
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out;
    }

    static std::vector<std::string> subtags(const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : normalize(s)) {
            if (c == ' ') {
                out.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        if (!cur.empty()) out.push_back(cur);
        return out;
    }
};

struct InfixMatch {
    size_t start_word = 0;
    size_t start_stem = 0;
    size_t length = 0;
};

// Maximal-length common substring; ties broken by the smallest start in the
// word, then the smallest start in the stem.
inline InfixMatch longest_common_infix(const std::u32string& word, const std::u32string& stem) {
    InfixMatch best;
    const size_t n = word.size(), m = stem.size();
    if (n == 0 || m == 0) return best;
    std::vector<size_t> prev(m + 1, 0), cur(m + 1, 0);
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            cur[j] = (word[i - 1] == stem[j - 1]) ? prev[j - 1] + 1 : 0;
            if (cur[j] > 0) {
                size_t len = cur[j];
                size_t sw = i - len, ss = j - len;
                if (len > best.length ||
                    (len == best.length && (sw < best.start_word ||
                                            (sw == best.start_word && ss < best.start_stem)))) {
                    best = {sw, ss, len};
                }
            }
        }
        std::swap(prev, cur);
    }
    return best;
}

// With a zero-length infix the whole word becomes prefix_word and the whole
// stem prefix_stem, so extraction is total.
inline StemRule extract(const std::u32string& word, const std::u32string& stem) {
    InfixMatch m = longest_common_infix(word, stem);
    StemRule r;
    if (m.length == 0) {
        r.prefix_word = word;
        r.prefix_stem = stem;
        return r;
    }
    r.prefix_word = word.substr(0, m.start_word);
    r.suffix_word = word.substr(m.start_word + m.length);
    r.prefix_stem = stem.substr(0, m.start_stem);
    r.suffix_stem = stem.substr(m.start_stem + m.length);
    return r;
}

inline bool applicable(const StemRule& rule, const std::u32string& word) {
    if (word.size() < rule.prefix_word.size() + rule.suffix_word.size()) return false;
    if (word.compare(0, rule.prefix_word.size(), rule.prefix_word) != 0) return false;
    return word.compare(word.size() - rule.suffix_word.size(), rule.suffix_word.size(),
                        rule.suffix_word) == 0;
}

inline std::u32string apply_rule(const StemRule& rule, const std::u32string& word) {
    if (!applicable(rule, word))
        throw StemRuleError("rule " + rule.display() + " is not applicable to '" +
                            utf8_encode(word) + "'");
    std::u32string core = word.substr(rule.prefix_word.size(),
                                      word.size() - rule.prefix_word.size() - rule.suffix_word.size());
    return rule.prefix_stem + core + rule.suffix_stem;
}

// ---------------------------------------------------------------------------

struct StemRuleVocab {
    std::vector<StemRule> rules;   // index = class id; PAD, UNK, identity first
    std::vector<size_t> freq;
    std::unordered_map<StemRule, int, StemRuleHash> rule_index;
    std::vector<std::string> tags;  // index = class id; PAD, UNK first
    std::vector<size_t> tag_freq;
    std::unordered_map<std::string, int> tag_index;
    bool joint_tags = false;

    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kIdentity = 2;  // rules only

    int rule_id(const StemRule& r) const {
        auto it = rule_index.find(r);
        return it == rule_index.end() ? kUnk : it->second;
    }
    int tag_id(const std::string& t) const {
        auto it = tag_index.find(MorphTag::normalize(t));
        return it == tag_index.end() ? kUnk : it->second;
    }
    // Most frequent tag; fallback when nothing better is known.
    int default_tag_id() const {
        int best = kUnk;
        size_t best_freq = 0;
        for (size_t i = 2; i < tags.size(); ++i)
            if (tag_freq[i] > best_freq) { best_freq = tag_freq[i]; best = static_cast<int>(i); }
        return best;
    }

    void rebuild_index() {
        rule_index.clear();
        for (size_t i = 0; i < rules.size(); ++i) rule_index[rules[i]] = static_cast<int>(i);
        tag_index.clear();
        for (size_t i = 0; i < tags.size(); ++i) tag_index[tags[i]] = static_cast<int>(i);
    }
};

// Extracts one rule per analysed word. In joint mode the tag is part of the
// rule identity, so one affix pattern can appear once per tag.
inline StemRuleVocab collect(const std::vector<SentenceRecord>& records, size_t cutoff = 1,
                             bool joint_tags = false) {
    StemRuleVocab vocab;
    vocab.joint_tags = joint_tags;
    std::map<StemRule, size_t> rule_counts;
    std::map<std::string, size_t> tag_counts;
    size_t identity_count = 0;
    StemRule identity;

    for (const auto& rec : records) {
        for (const auto& a : rec.analyses) {
            StemRule r = extract(a.word, a.stem);
            std::string norm_tag = MorphTag::normalize(a.tag);
            if (joint_tags) {
                r.tag = norm_tag;
                r.has_tag = true;
            }
            if (!joint_tags && r.is_identity())
                ++identity_count;
            else
                ++rule_counts[r];
            ++tag_counts[norm_tag];
        }
    }

    StemRule pad_rule, unk_rule;
    vocab.rules = {pad_rule, unk_rule, identity};
    vocab.freq = {0, 0, identity_count};

    std::vector<std::pair<StemRule, size_t>> kept;
    for (const auto& [rule, count] : rule_counts)
        if (count >= cutoff && !(rule == identity)) kept.push_back({rule, count});
    std::stable_sort(kept.begin(), kept.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    for (auto& [rule, count] : kept) {
        vocab.rules.push_back(std::move(rule));
        vocab.freq.push_back(count);
    }

    vocab.tags = {"<pad>", "<unk>"};
    vocab.tag_freq = {0, 0};
    for (const auto& [tag, count] : tag_counts) {
        vocab.tags.push_back(tag);
        vocab.tag_freq.push_back(count);
    }
    vocab.rebuild_index();
    return vocab;
}

inline nlohmann::ordered_json stem_vocab_to_json(const StemRuleVocab& vocab) {
    nlohmann::ordered_json out;
    out["joint_tags"] = vocab.joint_tags;
    auto rules = nlohmann::ordered_json::array();
    for (size_t i = 0; i < vocab.rules.size(); ++i) {
        const StemRule& r = vocab.rules[i];
        nlohmann::ordered_json j;
        if (i == StemRuleVocab::kPad) j["kind"] = "PAD";
        else if (i == StemRuleVocab::kUnk) j["kind"] = "UNK";
        j["pw"] = utf8_encode(r.prefix_word);
        j["sw"] = utf8_encode(r.suffix_word);
        j["ps"] = utf8_encode(r.prefix_stem);
        j["ss"] = utf8_encode(r.suffix_stem);
        if (r.has_tag) j["tag"] = r.tag;
        j["freq"] = vocab.freq[i];
        rules.push_back(std::move(j));
    }
    out["rules"] = std::move(rules);
    auto tags = nlohmann::ordered_json::array();
    for (size_t i = 0; i < vocab.tags.size(); ++i)
        tags.push_back({{"tag", vocab.tags[i]}, {"freq", vocab.tag_freq[i]}});
    out["tags"] = std::move(tags);
    return out;
}

inline StemRuleVocab stem_vocab_from_json(const nlohmann::json& j) {
    StemRuleVocab vocab;
    vocab.joint_tags = j.value("joint_tags", false);
    for (const auto& rj : j.at("rules")) {
        StemRule r;
        r.prefix_word = utf8_decode(rj.at("pw").get<std::string>());
        r.suffix_word = utf8_decode(rj.at("sw").get<std::string>());
        r.prefix_stem = utf8_decode(rj.at("ps").get<std::string>());
        r.suffix_stem = utf8_decode(rj.at("ss").get<std::string>());
        if (rj.contains("tag")) {
            r.tag = rj["tag"].get<std::string>();
            r.has_tag = true;
        }
        vocab.rules.push_back(std::move(r));
        vocab.freq.push_back(rj.value("freq", size_t{0}));
    }
    for (const auto& tj : j.at("tags")) {
        vocab.tags.push_back(tj.at("tag").get<std::string>());
        vocab.tag_freq.push_back(tj.value("freq", size_t{0}));
    }
    vocab.rebuild_index();
    return vocab;
}

}  // namespace sandhi
