#pragma once

#include <algorithm>
#include <iostream>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sandhi/corpus.hpp"
#include "sandhi/editrules.hpp"
#include "sandhi/nn.hpp"
#include "sandhi/stemrules.hpp"
#include "sandhi/translit.hpp"
#include "sandhi/version.hpp"

namespace sandhi {

using nn::BiLstm;
using nn::Char2Token;
using nn::ModelConfig;
using nn::ParamSet;
using nn::Var;

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------

struct CharVocab {
    std::vector<char32_t> chars;  // ids 0/1 reserved; values there are sentinels
    std::unordered_map<char32_t, int> index;

    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;

    static CharVocab build(const std::vector<SentenceRecord>& records) {
        std::set<char32_t> seen;
        for (const auto& r : records) {
            for (char32_t c : r.sandhied) seen.insert(c);
            for (const auto& w : r.segmentation)
                for (char32_t c : w) seen.insert(c);
        }
        CharVocab v;
        v.chars = {0xFFFD, 0xFFFD};
        for (char32_t c : seen) v.chars.push_back(c);
        v.rebuild_index();
        return v;
    }

    void rebuild_index() {
        index.clear();
        for (size_t i = 2; i < chars.size(); ++i) index[chars[i]] = static_cast<int>(i);
    }

    int id_of(char32_t c) const {
        auto it = index.find(c);
        return it == index.end() ? kUnk : it->second;
    }

    std::vector<int> encode(const std::u32string& s) const {
        std::vector<int> ids;
        ids.reserve(s.size());
        for (char32_t c : s) ids.push_back(id_of(c));
        return ids;
    }

    size_t size() const { return chars.size(); }
};

inline nlohmann::ordered_json char_vocab_to_json(const CharVocab& v) {
    auto arr = nlohmann::ordered_json::array();
    arr.push_back("<pad>");
    arr.push_back("<unk>");
    for (size_t i = 2; i < v.chars.size(); ++i) arr.push_back(utf8_encode(v.chars[i]));
    return arr;
}

inline CharVocab char_vocab_from_json(const nlohmann::json& arr) {
    CharVocab v;
    v.chars = {0xFFFD, 0xFFFD};
    for (size_t i = 2; i < arr.size(); ++i) {
        std::u32string s = utf8_decode(arr[i].get<std::string>());
        nn::check(s.size() == 1, "char vocab entries must be single code points");
        v.chars.push_back(s[0]);
    }
    v.rebuild_index();
    return v;
}

inline nlohmann::ordered_json translit_table_to_json(const TranslitTable& t) {
    nlohmann::ordered_json j;
    j["version"] = t.version;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : t.pairs)
        arr.push_back({utf8_encode(p.iast), utf8_encode(p.internal)});
    j["pairs"] = std::move(arr);
    return j;
}

inline TranslitTable translit_table_from_json(const nlohmann::json& j) {
    TranslitTable t;
    t.version = j.at("version").get<std::string>();
    for (const auto& p : j.at("pairs")) {
        std::u32string internal = utf8_decode(p[1].get<std::string>());
        nn::check(internal.size() == 1, "translit table internal symbols must be single code points");
        t.pairs.push_back({utf8_decode(p[0].get<std::string>()), internal[0]});
    }
    t.validate();
    return t;
}

// Applies the model's text representation to a whole corpus (vocabularies are
// built over what the model actually consumes).
inline std::vector<SentenceRecord> to_model_space(const std::vector<SentenceRecord>& records,
                                                  const TranslitTable& table, bool transliterate) {
    if (!transliterate) return records;
    std::vector<SentenceRecord> out = records;
    for (auto& r : out) {
        r.sandhied = to_internal(r.sandhied, table);
        for (auto& w : r.segmentation) w = to_internal(w, table);
        for (auto& a : r.analyses) {
            a.word = to_internal(a.word, table);
            a.stem = to_internal(a.stem, table);
        }
    }
    return out;
}

// Lowest index wins ties.
template <class T>
inline int argmax_row(const Var<T>& m, int row, int begin = 0) {
    const int K = m.cols();
    nn::check(begin < K, "argmax_row: empty candidate range");
    int best = begin;
    for (int j = begin + 1; j < K; ++j)
        if (m.at(row, j) > m.at(row, best)) best = j;
    return best;
}

// ---------------------------------------------------------------------------
// Token spans: first/last source character indices of each output word.

struct TokenSpan {
    size_t first = 0;
    size_t last = 0;  // inclusive
    bool operator==(const TokenSpan& o) const { return first == o.first && last == o.last; }
};

// Replays apply_labels while tracking which source indices produced each
// output character. A REPLACE emitting several words gives its source span to
// the first word; later parts are located by the characters copied after
// them. Source characters whose rule output is empty extend the preceding
// token's span.
inline std::vector<TokenSpan> labels_to_spans(const std::u32string& source,
                                              const EditLabelSequence& labels) {
    nn::check(labels.size() == source.size(), "labels_to_spans: length mismatch");
    constexpr size_t kNone = std::numeric_limits<size_t>::max();
    struct OutChar {
        char32_t c;
        size_t lo = kNone, hi = kNone;
    };
    std::vector<OutChar> out;
    std::vector<std::pair<size_t, size_t>> deleted_spans;  // rules with empty output
    size_t i = 0;
    while (i < labels.size()) {
        const EditRule& r = labels[i];
        if (r.kind == EditKind::Replace) {
            size_t j = i + 1;
            while (j < labels.size() && labels[j] == r) ++j;
            if (source.compare(i, j - i, r.source) == 0) {
                if (r.target.empty()) {
                    deleted_spans.push_back({i, j - 1});
                } else {
                    bool past_space = false;
                    for (char32_t c : r.target) {
                        if (c == U' ') {
                            past_space = true;
                            out.push_back({c});
                        } else if (past_space) {
                            out.push_back({c});
                        } else {
                            out.push_back({c, i, j - 1});
                        }
                    }
                }
            } else {
                for (size_t k = i; k < j; ++k) out.push_back({source[k], k, k});
            }
            i = j;
        } else if (r.kind == EditKind::InsertSpaceAfter) {
            out.push_back({source[i], i, i});
            out.push_back({U' '});
            ++i;
        } else {
            out.push_back({source[i], i, i});
            ++i;
        }
    }

    std::vector<TokenSpan> spans;
    size_t lo = kNone, hi = kNone;
    bool in_word = false;
    auto flush = [&]() {
        if (!in_word) return;
        if (lo == kNone) {
            // a word made purely of inserted characters; anchor it after the
            // previous span (degenerate, flagged by span equality)
            size_t anchor = spans.empty() ? 0 : spans.back().last;
            spans.push_back({anchor, anchor});
        } else {
            spans.push_back({lo, hi});
        }
        in_word = false;
        lo = hi = kNone;
    };
    for (const auto& oc : out) {
        if (oc.c == U' ') {
            flush();
            continue;
        }
        in_word = true;
        if (oc.lo != kNone) {
            if (lo == kNone) lo = oc.lo;
            hi = oc.hi;
        }
    }
    flush();

    for (const auto& [dlo, dhi] : deleted_spans) {
        TokenSpan* prev = nullptr;
        for (auto& s : spans) {
            if (s.last < dlo) prev = &s;
            else break;
        }
        if (prev) prev->last = std::max(prev->last, dhi);
    }
    return spans;
}

// ---------------------------------------------------------------------------
// Task 1: per-character edit rule classification.
//
// embeddings -> parallel conv stacks (filter sizes 2..8, each with a residual
// block) -> concat -> projection -> 2-layer BiLSTM with additive skips ->
// per-character classifier.

template <class T = float>
struct Segmenter {
    ModelConfig cfg;
    TranslitTable translit;
    CharVocab chars;
    EditRuleVocab rules;

    ParamSet<T> params;
    Var<T> emb;
    struct ConvStack {
        int k;
        Var<T> w1, b1, w2, b2;
    };
    std::vector<ConvStack> convs;
    Var<T> proj_w, proj_b;
    std::vector<BiLstm<T>> lstm;
    Var<T> cls_w, cls_b;

    static constexpr int kMinFilter = 2;
    static constexpr int kMaxFilter = 8;

    Segmenter(ModelConfig config, TranslitTable table, CharVocab char_vocab, EditRuleVocab rule_vocab)
        : cfg(std::move(config)),
          translit(std::move(table)),
          chars(std::move(char_vocab)),
          rules(std::move(rule_vocab)) {
        cfg.validate();
        Rng rng(cfg.seed);
        const int E = cfg.embedding_dim, D = cfg.hidden_dim;
        emb = params.add("emb", static_cast<int>(chars.size()), E, E, rng);
        for (int k = kMinFilter; k <= kMaxFilter; ++k) {
            ConvStack s;
            s.k = k;
            const std::string p = "conv" + std::to_string(k);
            s.w1 = params.add(p + ".w1", k * E, E, k * E, rng);
            s.b1 = params.add_zeros(p + ".b1", 1, E);
            s.w2 = params.add(p + ".w2", k * E, E, k * E, rng);
            s.b2 = params.add_zeros(p + ".b2", 1, E);
            convs.push_back(std::move(s));
        }
        const int concat_dim = (kMaxFilter - kMinFilter + 1) * E;
        proj_w = params.add("proj.w", concat_dim, D, concat_dim, rng);
        proj_b = params.add_zeros("proj.b", 1, D);
        if (cfg.use_lstm) {
            lstm.push_back(nn::make_bilstm(params, "lstm1", D, D / 2, rng));
            lstm.push_back(nn::make_bilstm(params, "lstm2", D, D / 2, rng));
        }
        cls_w = params.add("cls.w", D, static_cast<int>(rules.size()), D, rng);
        cls_b = params.add_zeros("cls.b", 1, static_cast<int>(rules.size()));
    }

    std::u32string to_model_space(const std::u32string& s) const {
        return cfg.transliteration ? to_internal(s, translit) : s;
    }
    std::u32string from_model_space(const std::u32string& s) const {
        return cfg.transliteration ? to_iast(s, translit) : s;
    }

    struct Forward {
        Var<T> states;  // [L x D] contextual representation
        Var<T> logits;  // [L x |rules|]
    };

    Forward forward(const std::vector<int>& ids, bool train, Rng& rng) {
        nn::check(!ids.empty(), "segmenter: empty input");
        Var<T> x = nn::embed(emb, ids, CharVocab::kPad);
        std::vector<Var<T>> feats;
        feats.reserve(convs.size());
        for (const auto& s : convs) {
            Var<T> f = nn::conv1d_same(x, s.w1, s.b1, s.k);
            f = nn::add(nn::relu(nn::conv1d_same(f, s.w2, s.b2, s.k)), f);
            feats.push_back(f);
        }
        Var<T> h = nn::add_rowvec(nn::matmul(nn::concat_cols(feats), proj_w), proj_b);
        h = nn::dropout(h, cfg.dropout, rng, train);
        for (size_t l = 0; l < lstm.size(); ++l) {
            h = nn::add(nn::bilstm_run(h, lstm[l]), h);
            if (l + 1 < lstm.size()) h = nn::dropout(h, cfg.dropout, rng, train);
        }
        Forward out;
        out.states = h;
        out.logits = nn::add_rowvec(nn::matmul(h, cls_w), cls_b);
        return out;
    }

    EditLabelSequence decode_labels(const Var<T>& logits) const {
        EditLabelSequence labels;
        labels.reserve(logits.rows());
        for (int t = 0; t < logits.rows(); ++t) labels.push_back(rules.rules[argmax_row(logits, t)]);
        return labels;
    }
};

// Total function: unknown characters become UNK ids, non-matching rules fall
// back to COPY inside apply_labels.
template <class T>
std::vector<std::u32string> segment(Segmenter<T>& model, const std::u32string& sandhied) {
    std::u32string s = model.to_model_space(sandhied);
    if (s.empty()) return {};
    Rng rng(0);
    auto fwd = model.forward(model.chars.encode(s), false, rng);
    auto words = apply_labels(s, model.decode_labels(fwd.logits));
    fwd.logits.release_graph();
    for (auto& w : words) w = model.from_model_space(w);
    return words;
}

// ---------------------------------------------------------------------------
// Task 2: per-token stem rule (+ tag) classification.
//
// per word: embeddings -> conv stacks (sizes 2..6) -> concat -> token vector
// (feature-wise max pool + projection, or final BiLSTM states) -> sentence
// BiLSTM with additive skip -> rule head and, unless rules carry tags, a tag
// head.

template <class T = float>
struct Analyzer {
    ModelConfig cfg;
    TranslitTable translit;
    CharVocab chars;
    StemRuleVocab stems;

    ParamSet<T> params;
    Var<T> emb;
    struct Conv {
        int k;
        Var<T> w, b;
    };
    std::vector<Conv> convs;
    Var<T> tok_w, tok_b;        // max-pool path projection
    BiLstm<T> char_lstm;        // lstm path token encoder
    BiLstm<T> sent_lstm;
    Var<T> rule_w, rule_b;
    Var<T> tag_w, tag_b;        // absent in joint tag-rule mode

    static constexpr int kMinFilter = 2;
    static constexpr int kMaxFilter = 6;

    Analyzer(ModelConfig config, TranslitTable table, CharVocab char_vocab, StemRuleVocab stem_vocab)
        : cfg(std::move(config)),
          translit(std::move(table)),
          chars(std::move(char_vocab)),
          stems(std::move(stem_vocab)) {
        cfg.validate();
        nn::check(stems.joint_tags == cfg.joint_tag_rules, "analyzer: vocab/config joint mode mismatch");
        nn::check(cfg.joint_tag_rules || stems.tags.size() > 2, "analyzer: tag vocabulary is empty");
        Rng rng(cfg.seed);
        const int E = cfg.embedding_dim, D = cfg.hidden_dim;
        const int concat_dim = (kMaxFilter - kMinFilter + 1) * E;
        emb = params.add("emb", static_cast<int>(chars.size()), E, E, rng);
        for (int k = kMinFilter; k <= kMaxFilter; ++k) {
            Conv c;
            c.k = k;
            const std::string p = "conv" + std::to_string(k);
            c.w = params.add(p + ".w", k * E, E, k * E, rng);
            c.b = params.add_zeros(p + ".b", 1, E);
            convs.push_back(std::move(c));
        }
        if (cfg.char2token == Char2Token::Max) {
            tok_w = params.add("tok.w", concat_dim, D, concat_dim, rng);
            tok_b = params.add_zeros("tok.b", 1, D);
        } else {
            char_lstm = nn::make_bilstm(params, "charlstm", concat_dim, D / 2, rng);
        }
        sent_lstm = nn::make_bilstm(params, "sentlstm", D, D / 2, rng);
        rule_w = params.add("rule.w", D, static_cast<int>(stems.rules.size()), D, rng);
        rule_b = params.add_zeros("rule.b", 1, static_cast<int>(stems.rules.size()));
        if (!cfg.joint_tag_rules) {
            tag_w = params.add("tag.w", D, static_cast<int>(stems.tags.size()), D, rng);
            tag_b = params.add_zeros("tag.b", 1, static_cast<int>(stems.tags.size()));
        }
    }

    std::u32string to_model_space(const std::u32string& s) const {
        return cfg.transliteration ? to_internal(s, translit) : s;
    }
    std::u32string from_model_space(const std::u32string& s) const {
        return cfg.transliteration ? to_iast(s, translit) : s;
    }

    struct Forward {
        Var<T> rule_logits;           // [T x |rules|]
        std::optional<Var<T>> tag_logits;  // [T x |tags|] unless joint mode
    };

    Var<T> token_vector(const std::vector<int>& ids) {
        Var<T> x = nn::embed(emb, ids, CharVocab::kPad);
        std::vector<Var<T>> feats;
        feats.reserve(convs.size());
        for (const auto& c : convs) feats.push_back(nn::conv1d_same(x, c.w, c.b, c.k));
        Var<T> f = nn::concat_cols(feats);
        if (cfg.char2token == Char2Token::Max)
            return nn::add_rowvec(nn::matmul(nn::maxpool_rows(f), tok_w), tok_b);
        return nn::bilstm_final_states(f, char_lstm);
    }

    Forward forward(const std::vector<std::vector<int>>& word_ids, bool train, Rng& rng) {
        nn::check(!word_ids.empty(), "analyzer: empty sentence");
        std::vector<Var<T>> toks;
        toks.reserve(word_ids.size());
        for (const auto& ids : word_ids) {
            nn::check(!ids.empty(), "analyzer: empty word");
            toks.push_back(token_vector(ids));
        }
        Var<T> t = nn::concat_rows(toks);
        t = nn::dropout(t, cfg.dropout, rng, train);
        Var<T> ctx = nn::add(nn::bilstm_run(t, sent_lstm), t);
        Forward out;
        out.rule_logits = nn::add_rowvec(nn::matmul(ctx, rule_w), rule_b);
        if (!cfg.joint_tag_rules)
            out.tag_logits = nn::add_rowvec(nn::matmul(ctx, tag_w), tag_b);
        return out;
    }
};

// Shared decode: the applicable rule with the highest score wins; with none
// applicable the stem is the unaltered word.
template <class T>
std::pair<std::u32string, int> decode_stem(const StemRuleVocab& stems, const Var<T>& rule_logits,
                                           int row, const std::u32string& word) {
    std::vector<int> order(stems.rules.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return rule_logits.at(row, a) > rule_logits.at(row, b);
    });
    for (int id : order) {
        if (id == StemRuleVocab::kPad || id == StemRuleVocab::kUnk) continue;
        if (applicable(stems.rules[id], word))
            return {apply_rule(stems.rules[id], word), id};
    }
    return {word, -1};
}

template <class T>
std::vector<std::pair<std::u32string, std::string>> analyze(Analyzer<T>& model,
                                                            const std::vector<std::u32string>& words) {
    if (words.empty()) return {};
    std::vector<std::u32string> model_words;
    std::vector<std::vector<int>> ids;
    for (const auto& w : words) {
        model_words.push_back(model.to_model_space(w));
        ids.push_back(model.chars.encode(model_words.back()));
    }
    Rng rng(0);
    auto fwd = model.forward(ids, false, rng);
    std::vector<std::pair<std::u32string, std::string>> out;
    for (size_t t = 0; t < words.size(); ++t) {
        auto [stem, rule_id] = decode_stem(model.stems, fwd.rule_logits, static_cast<int>(t),
                                           model_words[t]);
        std::string tag;
        if (model.cfg.joint_tag_rules) {
            tag = (rule_id >= 0 && model.stems.rules[rule_id].has_tag)
                      ? model.stems.rules[rule_id].tag
                      : model.stems.tags[model.stems.default_tag_id()];
        } else {
            tag = model.stems.tags[argmax_row(*fwd.tag_logits, static_cast<int>(t), 2)];
        }
        out.push_back({model.from_model_space(stem), std::move(tag)});
    }
    fwd.rule_logits.release_graph();
    if (fwd.tag_logits) fwd.tag_logits->release_graph();
    return out;
}

// ---------------------------------------------------------------------------
// Task 3: segmenter backbone + span max-pooling + stem/tag heads. Stems and
// tags are always predicted separately here.

template <class T = float>
struct Joint {
    Segmenter<T> backbone;
    StemRuleVocab stems;
    Var<T> stem_w, stem_b;
    Var<T> tag_w, tag_b;

    Joint(ModelConfig config, TranslitTable table, CharVocab char_vocab, EditRuleVocab rule_vocab,
          StemRuleVocab stem_vocab)
        : backbone(std::move(config), std::move(table), std::move(char_vocab), std::move(rule_vocab)),
          stems(std::move(stem_vocab)) {
        nn::check(!stems.joint_tags, "joint pipeline predicts stems and tags separately");
        Rng rng(backbone.cfg.seed + 1);
        const int D = backbone.cfg.hidden_dim;
        stem_w = backbone.params.add("stem.w", D, static_cast<int>(stems.rules.size()), D, rng);
        stem_b = backbone.params.add_zeros("stem.b", 1, static_cast<int>(stems.rules.size()));
        tag_w = backbone.params.add("tag.w", D, static_cast<int>(stems.tags.size()), D, rng);
        tag_b = backbone.params.add_zeros("tag.b", 1, static_cast<int>(stems.tags.size()));
    }

    struct Forward {
        Var<T> seg_logits;
        Var<T> stem_logits;  // [spans x |rules|]
        Var<T> tag_logits;   // [spans x |tags|]
    };

    // Pools backbone states over each span; gradients from the stem/tag heads
    // flow through the shared BiLSTM into the character embeddings.
    Forward forward_with_spans(const std::vector<int>& ids, const std::vector<TokenSpan>& spans,
                               bool train, Rng& rng) {
        auto seg = backbone.forward(ids, train, rng);
        nn::check(!spans.empty(), "joint: no spans");
        std::vector<Var<T>> pooled;
        pooled.reserve(spans.size());
        for (const auto& s : spans) {
            nn::check(s.first <= s.last && s.last < static_cast<size_t>(seg.states.rows()),
                      "joint: span out of range");
            pooled.push_back(nn::maxpool_rows(nn::slice_rows(seg.states, static_cast<int>(s.first),
                                                             static_cast<int>(s.last) + 1)));
        }
        Var<T> toks = nn::concat_rows(pooled);
        Forward out;
        out.seg_logits = seg.logits;
        out.stem_logits = nn::add_rowvec(nn::matmul(toks, stem_w), stem_b);
        out.tag_logits = nn::add_rowvec(nn::matmul(toks, tag_w), tag_b);
        return out;
    }
};

struct JointPrediction {
    std::vector<std::u32string> words;
    std::vector<std::u32string> stems;
    std::vector<std::string> tags;
};

template <class T>
JointPrediction predict_joint(Joint<T>& model, const std::u32string& sandhied) {
    JointPrediction out;
    std::u32string s = model.backbone.to_model_space(sandhied);
    if (s.empty()) return out;
    Rng rng(0);
    auto seg = model.backbone.forward(model.backbone.chars.encode(s), false, rng);
    EditLabelSequence labels = model.backbone.decode_labels(seg.logits);
    auto words = apply_labels(s, labels);
    auto spans = labels_to_spans(s, labels);
    nn::check(words.size() == spans.size(), "joint: word/span count mismatch");
    if (words.empty()) return out;

    std::vector<Var<T>> pooled;
    for (const auto& sp : spans)
        pooled.push_back(nn::maxpool_rows(nn::slice_rows(seg.states, static_cast<int>(sp.first),
                                                         static_cast<int>(sp.last) + 1)));
    Var<T> toks = nn::concat_rows(pooled);
    Var<T> stem_logits = nn::add_rowvec(nn::matmul(toks, model.stem_w), model.stem_b);
    Var<T> tag_logits = nn::add_rowvec(nn::matmul(toks, model.tag_w), model.tag_b);

    for (size_t t = 0; t < words.size(); ++t) {
        auto [stem, rule_id] = decode_stem(model.stems, stem_logits, static_cast<int>(t), words[t]);
        out.words.push_back(model.backbone.from_model_space(words[t]));
        out.stems.push_back(model.backbone.from_model_space(stem));
        out.tags.push_back(model.stems.tags[argmax_row(tag_logits, static_cast<int>(t), 2)]);
    }
    stem_logits.release_graph();
    tag_logits.release_graph();
    seg.logits.release_graph();
    return out;
}

// ---------------------------------------------------------------------------
// Training. Sentences are never truncated; batches are shuffled groups of
// records, gradients accumulate per sentence and every loss term is
// normalized by the batch-wide count of its positions, so results match
// padded batching without the padding.

struct TrainLog {
    std::vector<double> epoch_loss;
    bool aborted = false;
    std::string note;
    size_t skipped_records = 0;
};

namespace detail {

inline std::vector<size_t> shuffled_indices(size_t n, Rng& rng) {
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    for (size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    return idx;
}

template <class T>
std::vector<std::vector<T>> snapshot_params(const ParamSet<T>& ps) {
    std::vector<std::vector<T>> snap;
    for (const auto& [name, v] : ps.items) snap.push_back(v.val());
    return snap;
}

template <class T>
void restore_params(ParamSet<T>& ps, const std::vector<std::vector<T>>& snap) {
    for (size_t i = 0; i < ps.items.size(); ++i) ps.items[i].second.val() = snap[i];
}

}  // namespace detail

// Generic epoch/batch driver. `sentence_loss(index, total_weights)` builds the
// graph for one record, calls backward on each term and returns the summed
// loss contribution already divided by the batch totals.
template <class T, class PrepareBatch, class SentenceStep>
TrainLog train_driver(ParamSet<T>& params, const ModelConfig& cfg, size_t n_records,
                      PrepareBatch&& batch_totals, SentenceStep&& sentence_step,
                      std::ostream* log_stream) {
    TrainLog log;
    cfg.validate();
    if (n_records == 0) throw ModelError("training needs at least one usable record");
    Rng order_rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
    const long batches_per_epoch =
        static_cast<long>((n_records + cfg.batch_size - 1) / cfg.batch_size);
    nn::LrSchedule sched;
    sched.total_steps = std::max<long>(1, batches_per_epoch * cfg.epochs);
    sched.max_lr = cfg.max_lr;
    sched.warmup_fraction = cfg.warmup_fraction;
    sched.div = cfg.lr_div;
    sched.final_div = cfg.lr_final_div;

    auto vars = params.vars();
    auto good = detail::snapshot_params(params);
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto order = detail::shuffled_indices(n_records, order_rng);
        double epoch_loss = 0.0;
        double epoch_weight = 0.0;
        for (size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
            const size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
            std::vector<size_t> batch(order.begin() + b0, order.begin() + b1);
            auto totals = batch_totals(batch);
            nn::zero_grads(vars);
            double batch_loss = 0.0;
            for (size_t idx : batch) batch_loss += sentence_step(idx, totals);
            if (!std::isfinite(batch_loss)) {
                detail::restore_params(params, good);
                log.aborted = true;
                log.note = "non-finite loss at epoch " + std::to_string(epoch) +
                           "; restored last good parameters";
                return log;
            }
            try {
                nn::sgd_step(vars, nn::one_cycle_lr(std::min(step, sched.total_steps - 1), sched));
            } catch (const nn::TensorError& e) {
                detail::restore_params(params, good);
                log.aborted = true;
                log.note = std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                           "; restored last good parameters";
                return log;
            }
            ++step;
            epoch_loss += batch_loss;
            epoch_weight += 1.0;
        }
        log.epoch_loss.push_back(epoch_weight > 0 ? epoch_loss / epoch_weight : 0.0);
        good = detail::snapshot_params(params);
        if (log_stream)
            (*log_stream) << "epoch " << epoch + 1 << "/" << cfg.epochs << " loss "
                          << log.epoch_loss.back() << "\n";
    }
    return log;
}

// ---- task 1 ----------------------------------------------------------------

template <class T>
TrainLog train_segmenter(Segmenter<T>& model, const std::vector<SentenceRecord>& records,
                         std::ostream* log_stream = nullptr) {
    struct Item {
        std::vector<int> ids;
        std::vector<int> targets;
    };
    std::vector<Item> items;
    size_t skipped = 0;
    for (const auto& rec : records) {
        std::u32string src = model.to_model_space(rec.sandhied);
        std::u32string tgt = model.to_model_space(join_words(rec.segmentation));
        if (src.empty() || src.size() > tgt.size()) {
            ++skipped;
            continue;
        }
        EditLabelSequence labels;
        try {
            labels = derive_labels(src, tgt);
        } catch (const DeriveError&) {
            ++skipped;
            continue;
        }
        Item it;
        it.ids = model.chars.encode(src);
        for (const auto& l : labels) it.targets.push_back(model.rules.id_of(l));
        items.push_back(std::move(it));
    }

    Rng drop_rng(model.cfg.seed ^ 0xD1B54A32D192ED03ull);
    TrainLog log = train_driver<T>(
        model.params, model.cfg, items.size(),
        [&](const std::vector<size_t>& batch) {
            size_t total = 0;
            for (size_t i : batch) total += items[i].targets.size();
            return total;
        },
        [&](size_t idx, size_t total_positions) {
            const Item& it = items[idx];
            auto fwd = model.forward(it.ids, true, drop_rng);
            Var<T> loss = nn::scale(nn::softmax_xent(fwd.logits, it.targets),
                                    static_cast<T>(static_cast<double>(it.targets.size()) /
                                                   static_cast<double>(total_positions)));
            loss.backward();
            return static_cast<double>(loss.val()[0]);
        },
        log_stream);
    log.skipped_records += skipped;
    return log;
}

// ---- task 2 ----------------------------------------------------------------

template <class T>
TrainLog train_analyzer(Analyzer<T>& model, const std::vector<SentenceRecord>& records,
                        std::ostream* log_stream = nullptr) {
    struct Item {
        std::vector<std::vector<int>> word_ids;
        std::vector<int> rule_targets;
        std::vector<int> tag_targets;
    };
    std::vector<Item> items;
    size_t skipped = 0;
    for (const auto& rec : records) {
        if (!rec.has_analyses()) {
            ++skipped;
            continue;
        }
        Item it;
        bool ok = true;
        for (const auto& a : rec.analyses) {
            std::u32string w = model.to_model_space(a.word);
            std::u32string s = model.to_model_space(a.stem);
            if (w.empty()) {
                ok = false;
                break;
            }
            it.word_ids.push_back(model.chars.encode(w));
            StemRule r = extract(w, s);
            std::string norm_tag = MorphTag::normalize(a.tag);
            if (model.cfg.joint_tag_rules) {
                r.tag = norm_tag;
                r.has_tag = true;
            }
            it.rule_targets.push_back(model.stems.rule_id(r));
            it.tag_targets.push_back(model.stems.tag_id(norm_tag));
        }
        if (!ok || it.word_ids.empty()) {
            ++skipped;
            continue;
        }
        items.push_back(std::move(it));
    }

    Rng drop_rng(model.cfg.seed ^ 0xD1B54A32D192ED03ull);
    TrainLog log = train_driver<T>(
        model.params, model.cfg, items.size(),
        [&](const std::vector<size_t>& batch) {
            size_t total = 0;
            for (size_t i : batch) total += items[i].rule_targets.size();
            return total;
        },
        [&](size_t idx, size_t total_positions) {
            const Item& it = items[idx];
            auto fwd = model.forward(it.word_ids, true, drop_rng);
            const T w = static_cast<T>(static_cast<double>(it.rule_targets.size()) /
                                       static_cast<double>(total_positions));
            Var<T> loss = nn::scale(nn::softmax_xent(fwd.rule_logits, it.rule_targets), w);
            if (fwd.tag_logits)
                loss = nn::add(loss, nn::scale(nn::softmax_xent(*fwd.tag_logits, it.tag_targets), w));
            loss.backward();
            return static_cast<double>(loss.val()[0]);
        },
        log_stream);
    log.skipped_records += skipped;
    return log;
}

// ---- task 3 ----------------------------------------------------------------

template <class T>
TrainLog train_joint(Joint<T>& model, const std::vector<SentenceRecord>& records,
                     std::ostream* log_stream = nullptr) {
    struct Item {
        std::vector<int> ids;
        std::vector<int> seg_targets;
        std::vector<TokenSpan> spans;
        std::vector<int> stem_targets;
        std::vector<int> tag_targets;
    };
    Segmenter<T>& bb = model.backbone;
    std::vector<Item> items;
    size_t skipped = 0;
    for (const auto& rec : records) {
        if (!rec.has_analyses()) {
            ++skipped;
            continue;
        }
        std::u32string src = bb.to_model_space(rec.sandhied);
        std::u32string tgt = bb.to_model_space(join_words(rec.segmentation));
        if (src.empty() || src.size() > tgt.size()) {
            ++skipped;
            continue;
        }
        EditLabelSequence labels;
        try {
            labels = derive_labels(src, tgt);
        } catch (const DeriveError&) {
            ++skipped;
            continue;
        }
        Item it;
        it.ids = bb.chars.encode(src);
        for (const auto& l : labels) it.seg_targets.push_back(bb.rules.id_of(l));
        it.spans = labels_to_spans(src, labels);
        if (it.spans.size() != rec.analyses.size()) {
            ++skipped;  // gold labels do not reproduce the gold tokens; corrupt
            continue;
        }
        for (const auto& a : rec.analyses) {
            std::u32string w = bb.to_model_space(a.word);
            std::u32string s = bb.to_model_space(a.stem);
            StemRule r = extract(w, s);
            it.stem_targets.push_back(model.stems.rule_id(r));
            it.tag_targets.push_back(model.stems.tag_id(MorphTag::normalize(a.tag)));
        }
        items.push_back(std::move(it));
    }

    Rng drop_rng(bb.cfg.seed ^ 0xD1B54A32D192ED03ull);
    struct Totals {
        size_t chars = 0, tokens = 0;
    };
    TrainLog log = train_driver<T>(
        bb.params, bb.cfg, items.size(),
        [&](const std::vector<size_t>& batch) {
            Totals t;
            for (size_t i : batch) {
                t.chars += items[i].seg_targets.size();
                t.tokens += items[i].stem_targets.size();
            }
            return t;
        },
        [&](size_t idx, const Totals& totals) {
            const Item& it = items[idx];
            auto fwd = model.forward_with_spans(it.ids, it.spans, true, drop_rng);
            const T wc = static_cast<T>(static_cast<double>(it.seg_targets.size()) /
                                        static_cast<double>(totals.chars));
            const T wt = static_cast<T>(static_cast<double>(it.stem_targets.size()) /
                                        static_cast<double>(totals.tokens));
            Var<T> loss = nn::scale(nn::softmax_xent(fwd.seg_logits, it.seg_targets), wc);
            loss = nn::add(loss, nn::scale(nn::softmax_xent(fwd.stem_logits, it.stem_targets), wt));
            loss = nn::add(loss, nn::scale(nn::softmax_xent(fwd.tag_logits, it.tag_targets), wt));
            loss.backward();
            return static_cast<double>(loss.val()[0]);
        },
        log_stream);
    log.skipped_records += skipped;
    return log;
}

// ---------------------------------------------------------------------------
// Checkpoints: a versioned JSON container with the resolved config, the
// vocabularies the model depends on, and the named parameter tensors.

inline constexpr const char* kCheckpointFormat = "sandhi-checkpoint-1";

template <class T>
nlohmann::ordered_json checkpoint_header(const std::string& task, const ModelConfig& cfg,
                                         const TranslitTable& table) {
    nlohmann::ordered_json j;
    j["format"] = kCheckpointFormat;
    j["version"] = kVersion;
    j["task"] = task;
    j["config"] = nn::config_to_json(cfg);
    j["translit_table"] = translit_table_to_json(table);
    return j;
}

template <class T>
nlohmann::ordered_json segmenter_to_json(const Segmenter<T>& model) {
    auto j = checkpoint_header<T>("t1", model.cfg, model.translit);
    j["char_vocab"] = char_vocab_to_json(model.chars);
    j["edit_rules"] = edit_vocab_to_json(model.rules);
    j["params"] = nn::params_to_json(model.params);
    return j;
}

template <class T>
Segmenter<T> segmenter_from_json(const nlohmann::json& j) {
    nn::check(j.at("format") == kCheckpointFormat, "unknown checkpoint format");
    nn::check(j.at("task") == "t1", "checkpoint task mismatch: expected t1");
    Segmenter<T> model(nn::config_from_json(j.at("config")),
                       translit_table_from_json(j.at("translit_table")),
                       char_vocab_from_json(j.at("char_vocab")),
                       edit_vocab_from_json(j.at("edit_rules")));
    nn::params_from_json(j.at("params"), model.params);
    return model;
}

template <class T>
nlohmann::ordered_json analyzer_to_json(const Analyzer<T>& model) {
    auto j = checkpoint_header<T>("t2", model.cfg, model.translit);
    j["char_vocab"] = char_vocab_to_json(model.chars);
    j["stem_rules"] = stem_vocab_to_json(model.stems);
    j["params"] = nn::params_to_json(model.params);
    return j;
}

template <class T>
Analyzer<T> analyzer_from_json(const nlohmann::json& j) {
    nn::check(j.at("format") == kCheckpointFormat, "unknown checkpoint format");
    nn::check(j.at("task") == "t2", "checkpoint task mismatch: expected t2");
    Analyzer<T> model(nn::config_from_json(j.at("config")),
                      translit_table_from_json(j.at("translit_table")),
                      char_vocab_from_json(j.at("char_vocab")),
                      stem_vocab_from_json(j.at("stem_rules")));
    nn::params_from_json(j.at("params"), model.params);
    return model;
}

template <class T>
nlohmann::ordered_json joint_to_json(const Joint<T>& model) {
    auto j = checkpoint_header<T>("t3", model.backbone.cfg, model.backbone.translit);
    j["char_vocab"] = char_vocab_to_json(model.backbone.chars);
    j["edit_rules"] = edit_vocab_to_json(model.backbone.rules);
    j["stem_rules"] = stem_vocab_to_json(model.stems);
    j["params"] = nn::params_to_json(model.backbone.params);
    return j;
}

template <class T>
Joint<T> joint_from_json(const nlohmann::json& j) {
    nn::check(j.at("format") == kCheckpointFormat, "unknown checkpoint format");
    nn::check(j.at("task") == "t3", "checkpoint task mismatch: expected t3");
    Joint<T> model(nn::config_from_json(j.at("config")),
                   translit_table_from_json(j.at("translit_table")),
                   char_vocab_from_json(j.at("char_vocab")),
                   edit_vocab_from_json(j.at("edit_rules")),
                   stem_vocab_from_json(j.at("stem_rules")));
    nn::params_from_json(j.at("params"), model.backbone.params);
    return model;
}

}  // namespace sandhi
