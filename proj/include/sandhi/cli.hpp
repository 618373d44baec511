#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sandhi/corpus.hpp"
#include "sandhi/demo_data.hpp"
#include "sandhi/editrules.hpp"
#include "sandhi/eval.hpp"
#include "sandhi/models.hpp"
#include "sandhi/stemrules.hpp"
#include "sandhi/translit.hpp"
#include "sandhi/version.hpp"

namespace sandhi::cli {

struct CliError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// SANDHI_LOG={debug,info,warn,error}; the only environment the tool reads.
inline int log_threshold() {
    const char* env = std::getenv("SANDHI_LOG");
    if (!env) return 1;
    std::string v = env;
    if (v == "debug") return 0;
    if (v == "info") return 1;
    if (v == "warn") return 2;
    return 3;
}

inline void log_info(const std::string& msg) {
    if (log_threshold() <= 1) std::cerr << "[sandhi] " << msg << "\n";
}

// Artifacts are written to a temp file and renamed into place.
inline void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw CliError("cannot write " + tmp);
        out << content;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw CliError("cannot move " + tmp + " into place");
}

inline nlohmann::ordered_json artifact_meta(const std::string& command,
                                            nlohmann::ordered_json config) {
    nlohmann::ordered_json meta;
    meta["tool"] = "sandhi";
    meta["version"] = kVersion;
    meta["command"] = command;
    meta["config"] = std::move(config);
    return meta;
}

// A --config argument accepts a plain config object or any artifact that
// embeds one (checkpoint, report, or the _meta header of a JSON-lines file).
inline nlohmann::json load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    std::string text = buf.str();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception&) {
        auto nl = text.find('\n');
        j = nlohmann::json::parse(text.substr(0, nl));  // JSON-lines artifact
    }
    if (j.is_object() && j.contains("_meta")) j = j["_meta"];
    if (j.is_object() && j.contains("config")) j = j["config"];
    return j;
}

// ---------------------------------------------------------------------------
// Option bundles

struct CommonModelOpts {
    std::string task;
    std::string data;
    std::string out;
    std::string config_path;
    std::string translit_tsv;
    // overrides; only applied when the flag was given
    std::optional<int> epochs, batch_size, hidden_dim, embedding_dim, rule_cutoff;
    std::optional<double> dropout, max_lr;
    std::optional<uint64_t> seed;
    std::optional<std::string> translit, char2token;
    std::optional<bool> joint_tags, use_lstm;
    std::string init_from;
    bool quiet = false;
};

inline ModelConfig resolve_config(const CommonModelOpts& o) {
    ModelConfig base;
    if (o.task == "t1") base = ModelConfig::defaults_t1();
    else if (o.task == "t2") base = ModelConfig::defaults_t2();
    else if (o.task == "t3") base = ModelConfig::defaults_t3();
    else throw CliError("unknown task: " + o.task);
    if (!o.config_path.empty()) base = nn::config_from_json(load_config_file(o.config_path), base);
    if (o.epochs) base.epochs = *o.epochs;
    if (o.batch_size) base.batch_size = *o.batch_size;
    if (o.hidden_dim) base.hidden_dim = *o.hidden_dim;
    if (o.embedding_dim) base.embedding_dim = *o.embedding_dim;
    if (o.rule_cutoff) base.rule_cutoff = *o.rule_cutoff;
    if (o.dropout) base.dropout = *o.dropout;
    if (o.max_lr) base.max_lr = *o.max_lr;
    if (o.seed) base.seed = *o.seed;
    if (o.translit) base.transliteration = (*o.translit == "on");
    if (o.char2token)
        base.char2token = (*o.char2token == "lstm") ? nn::Char2Token::Lstm : nn::Char2Token::Max;
    if (o.joint_tags) base.joint_tag_rules = *o.joint_tags;
    if (o.use_lstm) base.use_lstm = *o.use_lstm;
    base.validate();
    return base;
}

inline TranslitTable resolve_translit(const std::string& tsv_path) {
    return tsv_path.empty() ? TranslitTable::builtin() : TranslitTable::from_tsv(tsv_path);
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
    std::string out;
    std::string lexicon_path;
    std::string table_path;
    size_t n = 1000;
    uint64_t seed = 7;
    size_t min_words = 3;
    size_t max_words = 6;
};

inline int cmd_synth(const SynthOpts& o) {
    auto lexicon = o.lexicon_path.empty() ? demo_lexicon()
                                          : lexicon_from_json(load_config_file(o.lexicon_path));
    auto table = o.table_path.empty() ? demo_sandhi_table()
                                      : sandhi_table_from_json(load_config_file(o.table_path));
    auto records = synth_corpus(lexicon, table, o.n, o.seed, o.min_words, o.max_words);

    nlohmann::ordered_json cfg;
    cfg["n"] = o.n;
    cfg["seed"] = o.seed;
    cfg["min_words"] = o.min_words;
    cfg["max_words"] = o.max_words;
    cfg["lexicon"] = o.lexicon_path.empty() ? "builtin" : o.lexicon_path;
    cfg["sandhi_table"] = o.table_path.empty() ? "builtin" : o.table_path;

    std::ostringstream body;
    body << nlohmann::ordered_json{{"_meta", artifact_meta("synth", cfg)}}.dump() << "\n";
    for (const auto& r : records) body << record_to_json(r).dump() << "\n";
    write_atomic(o.out, body.str());
    std::cout << "wrote " << records.size() << " sentences to " << o.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// extract-rules

struct ExtractOpts {
    std::string data;
    std::string task = "seg";
    std::string out;
    std::string translit;  // "", "on", "off"
    std::string translit_tsv;
    size_t cutoff = 1;
    bool joint_tags = false;
    size_t top = 20;
};

inline int cmd_extract_rules(const ExtractOpts& o) {
    auto [records, stats] = filter_corrupt(load_dataset(o.data));
    const bool default_translit = o.task == "seg";  // tuned defaults differ per task
    const bool translit = o.translit.empty() ? default_translit : o.translit == "on";
    auto table = resolve_translit(o.translit_tsv);
    auto model_records = to_model_space(records, table, translit);

    nlohmann::ordered_json cfg;
    cfg["task"] = o.task;
    cfg["transliteration"] = translit;
    cfg["cutoff"] = o.cutoff;
    cfg["joint_tags"] = o.joint_tags;
    cfg["data"] = o.data;

    std::cout << "records: " << stats.total << " (" << stats.removed_corrupt
              << " corrupt removed)\n";

    nlohmann::ordered_json out;
    out["_meta"] = artifact_meta("extract-rules", cfg);
    if (o.task == "seg") {
        auto vocab = collect_rules(model_records, o.cutoff);
        for (size_t i = 0; i < vocab.rules.size(); ++i)
            stats.rule_counts[vocab.rules[i].display()] = vocab.freq[i];
        size_t replaces = vocab.rules.size() - 4;
        std::cout << "edit rules: " << replaces << " ngram rules + COPY, INSERT_SPACE_AFTER\n";
        std::vector<size_t> order(vocab.rules.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](size_t a, size_t b) { return vocab.freq[a] > vocab.freq[b]; });
        std::cout << "top rules by frequency:\n";
        for (size_t i = 0; i < std::min(o.top, order.size()); ++i) {
            if (vocab.freq[order[i]] == 0) break;
            std::cout << "  " << vocab.freq[order[i]] << "\t" << vocab.rules[order[i]].display()
                      << "\n";
        }
        for (const auto& n : vocab.notes) std::cout << "note: " << n << "\n";
        out["rules"] = edit_vocab_to_json(vocab);
    } else if (o.task == "stem") {
        auto vocab = collect(model_records, o.cutoff, o.joint_tags);
        std::cout << "stem rules: " << vocab.rules.size() - 2 << " (incl. identity), tags: "
                  << vocab.tags.size() - 2 << "\n";
        std::vector<size_t> order(vocab.rules.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](size_t a, size_t b) { return vocab.freq[a] > vocab.freq[b]; });
        std::cout << "top rules by frequency:\n";
        for (size_t i = 0; i < std::min(o.top, order.size()); ++i) {
            if (vocab.freq[order[i]] == 0) break;
            std::cout << "  " << vocab.freq[order[i]] << "\t" << vocab.rules[order[i]].display()
                      << "\n";
        }
        out["stem_rules"] = stem_vocab_to_json(vocab);
    } else {
        throw CliError("--task must be seg or stem");
    }
    if (!o.out.empty()) {
        write_atomic(o.out, out.dump(2) + "\n");
        std::cout << "wrote " << o.out << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// train

inline void init_params_from_checkpoint(ParamSet<float>& params, const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError("cannot open --init-from checkpoint: " + path);
    nlohmann::json donor = nlohmann::json::parse(in);
    size_t copied = 0;
    for (auto& [name, var] : params.items) {
        for (const auto& pj : donor.at("params")) {
            if (pj.at("name") != name) continue;
            if (pj.at("shape")[0].get<int>() != var.rows() ||
                pj.at("shape")[1].get<int>() != var.cols())
                break;
            const auto& data = pj.at("data");
            for (size_t k = 0; k < var.size(); ++k)
                var.val()[k] = static_cast<float>(data[k].get<double>());
            ++copied;
            break;
        }
    }
    log_info("initialized " + std::to_string(copied) + "/" + std::to_string(params.items.size()) +
             " tensors from " + path);
}

inline int cmd_train(const CommonModelOpts& o) {
    ModelConfig cfg = resolve_config(o);
    auto table = resolve_translit(o.translit_tsv);
    auto [records, stats] = filter_corrupt(load_dataset(o.data));
    log_info("loaded " + std::to_string(stats.total) + " records, removed " +
             std::to_string(stats.removed_corrupt) + " corrupt");
    auto model_records = to_model_space(records, table, cfg.transliteration);
    auto chars = CharVocab::build(model_records);
    std::ostream* log_stream = o.quiet ? nullptr : &std::cout;

    nlohmann::ordered_json ckpt;
    TrainLog tlog;
    if (o.task == "t1") {
        Segmenter<float> model(cfg, table, chars, collect_rules(model_records, cfg.rule_cutoff));
        tlog = train_segmenter(model, records, log_stream);
        ckpt = segmenter_to_json(model);
    } else if (o.task == "t2") {
        Analyzer<float> model(cfg, table, chars,
                              collect(model_records, cfg.rule_cutoff, cfg.joint_tag_rules));
        tlog = train_analyzer(model, records, log_stream);
        ckpt = analyzer_to_json(model);
    } else if (o.task == "t3") {
        Joint<float> model(cfg, table, chars, collect_rules(model_records, cfg.rule_cutoff),
                           collect(model_records, cfg.rule_cutoff, false));
        if (!o.init_from.empty()) init_params_from_checkpoint(model.backbone.params, o.init_from);
        tlog = train_joint(model, records, log_stream);
        ckpt = joint_to_json(model);
    } else {
        throw CliError("--task must be t1, t2 or t3");
    }
    if (tlog.aborted) std::cerr << "training aborted: " << tlog.note << "\n";
    if (tlog.skipped_records)
        log_info("skipped " + std::to_string(tlog.skipped_records) + " unusable records");
    write_atomic(o.out, ckpt.dump() + "\n");
    std::cout << "wrote checkpoint " << o.out << "\n";
    return tlog.aborted ? 1 : 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictOpts {
    std::string task;
    std::string checkpoint;
    std::string data;
    std::string out;
};

inline nlohmann::json load_checkpoint_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError("cannot open checkpoint: " + path);
    return nlohmann::json::parse(in);
}

inline int cmd_predict(const PredictOpts& o) {
    nlohmann::json ckpt = load_checkpoint_json(o.checkpoint);
    std::string task = o.task.empty() ? ckpt.at("task").get<std::string>() : o.task;
    if (!o.task.empty() && ckpt.at("task") != o.task)
        throw CliError("checkpoint is for task " + ckpt.at("task").get<std::string>() +
                       ", not " + o.task);
    auto records = load_dataset(o.data);

    std::ostringstream body;
    body << nlohmann::ordered_json{
                {"_meta", artifact_meta("predict", {{"task", task},
                                                    {"checkpoint", o.checkpoint},
                                                    {"model_config", ckpt.at("config")}})}}
                .dump()
         << "\n";

    if (task == "t1") {
        auto model = segmenter_from_json<float>(ckpt);
        for (const auto& rec : records) {
            auto j = record_to_json(rec);
            auto pred = nlohmann::ordered_json::array();
            for (const auto& w : segment(model, rec.sandhied)) pred.push_back(utf8_encode(w));
            j["prediction"] = std::move(pred);
            body << j.dump() << "\n";
        }
    } else if (task == "t2") {
        auto model = analyzer_from_json<float>(ckpt);
        for (const auto& rec : records) {
            auto j = record_to_json(rec);
            auto pred = nlohmann::ordered_json::array();
            for (const auto& [stem, tag] : analyze(model, rec.segmentation))
                pred.push_back({utf8_encode(stem), tag});
            j["prediction"] = std::move(pred);
            body << j.dump() << "\n";
        }
    } else if (task == "t3") {
        auto model = joint_from_json<float>(ckpt);
        for (const auto& rec : records) {
            auto j = record_to_json(rec);
            auto pred = nlohmann::ordered_json::array();
            auto p = predict_joint(model, rec.sandhied);
            for (size_t t = 0; t < p.words.size(); ++t)
                pred.push_back({utf8_encode(p.words[t]), utf8_encode(p.stems[t]), p.tags[t]});
            j["prediction"] = std::move(pred);
            body << j.dump() << "\n";
        }
    } else {
        throw CliError("--task must be t1, t2 or t3");
    }
    write_atomic(o.out, body.str());
    std::cout << "wrote predictions " << o.out << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvalOpts {
    std::string task;
    std::string pred;
    std::string gold;
    std::string mode = "strict";
    std::string out;
    bool symmetric = false;
    double min_f1 = -1.0;
};

struct LoadedPredictions {
    std::vector<PredictionSentence> sentences;
};

inline LoadedPredictions load_predictions(const std::string& path, Task task) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CliError("cannot open predictions: " + path);
    LoadedPredictions out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw CliError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (j.is_object() && j.contains("_meta")) continue;
        if (!j.contains("prediction"))
            throw CliError(path + ":" + std::to_string(lineno) + ": missing 'prediction'");
        PredictionSentence s;
        for (const auto& item : j["prediction"]) {
            if (task == Task::T1) {
                s.words.push_back(utf8_decode(item.get<std::string>()));
            } else if (task == Task::T2) {
                s.stems.push_back(utf8_decode(item.at(0).get<std::string>()));
                s.tags.push_back(item.at(1).get<std::string>());
            } else {
                s.words.push_back(utf8_decode(item.at(0).get<std::string>()));
                s.stems.push_back(utf8_decode(item.at(1).get<std::string>()));
                s.tags.push_back(item.at(2).get<std::string>());
            }
        }
        out.sentences.push_back(std::move(s));
    }
    return out;
}

inline PredictionSentence gold_sentence(const SentenceRecord& rec, Task task) {
    PredictionSentence s;
    if (task == Task::T1 || task == Task::T3) s.words = rec.segmentation;
    if (task == Task::T2 || task == Task::T3) {
        for (const auto& a : rec.analyses) {
            s.stems.push_back(a.stem);
            s.tags.push_back(a.tag);
        }
        if (task == Task::T2) s.words = rec.segmentation;
    }
    return s;
}

inline std::vector<std::string> sentence_items(const PredictionSentence& s, Task task) {
    std::vector<std::string> items;
    if (task == Task::T1) {
        for (const auto& w : s.words) items.push_back(utf8_encode(w));
    } else if (task == Task::T2) {
        for (size_t i = 0; i < s.stems.size(); ++i)
            items.push_back(make_item({utf8_encode(s.stems[i]), MorphTag::normalize(s.tags[i])}));
    } else {
        for (size_t i = 0; i < s.words.size(); ++i)
            items.push_back(make_item({utf8_encode(s.words[i]), utf8_encode(s.stems[i]),
                                       MorphTag::normalize(s.tags[i])}));
    }
    return items;
}

inline int cmd_evaluate(const EvalOpts& o) {
    Task task = task_from_string(o.task);
    auto gold_records = load_dataset(o.gold);
    auto preds = load_predictions(o.pred, task);
    if (preds.sentences.size() != gold_records.size())
        throw CliError("prediction/gold sentence count mismatch: " +
                       std::to_string(preds.sentences.size()) + " vs " +
                       std::to_string(gold_records.size()));

    std::vector<PredictionSentence> gold;
    std::vector<std::string> strata;
    bool any_strata = false;
    for (size_t i = 0; i < gold_records.size(); ++i) {
        const auto& r = gold_records[i];
        if ((task == Task::T2 || task == Task::T3) && !r.has_analyses())
            throw CliError(o.gold + ": record " + std::to_string(i + 1) +
                           " has no analyses; cannot score task " + o.task);
        gold.push_back(gold_sentence(r, task));
        strata.push_back(r.strata);
        if (!r.strata.empty()) any_strata = true;
    }

    nlohmann::ordered_json cfg;
    cfg["task"] = o.task;
    cfg["mode"] = o.mode;
    cfg["symmetric"] = o.symmetric;
    cfg["pred"] = o.pred;
    cfg["gold"] = o.gold;

    nlohmann::ordered_json artifact;
    artifact["_meta"] = artifact_meta("evaluate", cfg);
    double headline_f1 = 0.0;

    if (o.mode == "strict") {
        std::vector<std::vector<std::string>> pred_items, gold_items;
        for (size_t i = 0; i < gold.size(); ++i) {
            pred_items.push_back(sentence_items(preds.sentences[i], task));
            gold_items.push_back(sentence_items(gold[i], task));
        }
        ScoreReport report =
            score_strict(pred_items, gold_items, task, any_strata ? strata : std::vector<std::string>{});
        report.error_counts = tally_errors(error_report(preds.sentences, gold, task));
        std::cout << report_to_text(report);
        artifact["report"] = report_to_json(report);
        headline_f1 = report.f1;
    } else if (o.mode == "counter") {
        // positional item pairs compared by character multiset
        double total = 0.0;
        size_t n = 0, perfect = 0;
        for (size_t i = 0; i < gold.size(); ++i) {
            auto pi = sentence_items(preds.sentences[i], task);
            auto gi = sentence_items(gold[i], task);
            const size_t m = std::max(pi.size(), gi.size());
            for (size_t t = 0; t < m; ++t) {
                std::string p = t < pi.size() ? pi[t] : "";
                std::string g = t < gi.size() ? gi[t] : "";
                for (auto& c : p)
                    if (c == '\x1F') c = ' ';
                for (auto& c : g)
                    if (c == '\x1F') c = ' ';
                double sim = score_counter(p, g, o.symmetric);
                total += sim;
                if (sim == 1.0) ++perfect;
                ++n;
            }
        }
        const double mean = n ? total / n : 0.0;
        std::cout << "counter similarity (mean over " << n << " items): " << mean << "\n";
        std::cout << "fully-matching items: " << perfect << "/" << n << "\n";
        artifact["report"] = {{"mean_similarity", mean}, {"items", n}, {"perfect", perfect}};
        headline_f1 = mean;
    } else {
        throw CliError("--mode must be strict or counter");
    }

    if (!o.out.empty()) {
        write_atomic(o.out, artifact.dump(2) + "\n");
        std::cout << "wrote report " << o.out << "\n";
    }
    if (o.min_f1 >= 0.0 && headline_f1 < o.min_f1) {
        std::cerr << "headline score " << headline_f1 << " below required " << o.min_f1 << "\n";
        return 2;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOpts {
    std::string task;
    std::string data;
    std::string dev;
    std::string grid;
    std::string out;
};

inline int cmd_sweep(const SweepOpts& o) {
    nlohmann::json grid = load_config_file(o.grid);
    std::vector<nlohmann::json> combos;
    if (grid.is_array()) {
        for (const auto& g : grid) combos.push_back(g);
    } else {
        combos.push_back(nlohmann::json::object());
        for (const auto& [key, values] : grid.items()) {
            if (!values.is_array()) throw CliError("grid values must be arrays");
            std::vector<nlohmann::json> next;
            for (const auto& base : combos)
                for (const auto& v : values) {
                    nlohmann::json c = base;
                    c[key] = v;
                    next.push_back(std::move(c));
                }
            combos = std::move(next);
        }
    }

    const std::string tmp_ckpt = o.out.empty() ? "sweep_ckpt.json" : o.out + ".ckpt.tmp.json";
    const std::string tmp_pred = o.out.empty() ? "sweep_pred.jsonl" : o.out + ".pred.tmp.jsonl";

    struct Row {
        nlohmann::json overrides;
        double f1 = 0.0;
    };
    std::vector<Row> rows;
    for (const auto& combo : combos) {
        CommonModelOpts t;
        t.task = o.task;
        t.data = o.data;
        t.out = tmp_ckpt;
        t.quiet = true;
        ModelConfig cfg = resolve_config(t);
        cfg = nn::config_from_json(combo, cfg);

        auto table = TranslitTable::builtin();
        auto [records, stats] = filter_corrupt(load_dataset(o.data));
        auto model_records = to_model_space(records, table, cfg.transliteration);
        auto chars = CharVocab::build(model_records);
        nlohmann::ordered_json ckpt;
        if (o.task == "t1") {
            Segmenter<float> model(cfg, table, chars, collect_rules(model_records, cfg.rule_cutoff));
            train_segmenter(model, records, nullptr);
            ckpt = segmenter_to_json(model);
        } else if (o.task == "t2") {
            Analyzer<float> model(cfg, table, chars,
                                  collect(model_records, cfg.rule_cutoff, cfg.joint_tag_rules));
            train_analyzer(model, records, nullptr);
            ckpt = analyzer_to_json(model);
        } else if (o.task == "t3") {
            Joint<float> model(cfg, table, chars, collect_rules(model_records, cfg.rule_cutoff),
                               collect(model_records, cfg.rule_cutoff, false));
            train_joint(model, records, nullptr);
            ckpt = joint_to_json(model);
        } else {
            throw CliError("--task must be t1, t2 or t3");
        }
        write_atomic(tmp_ckpt, ckpt.dump() + "\n");

        PredictOpts p;
        p.task = o.task;
        p.checkpoint = tmp_ckpt;
        p.data = o.dev;
        p.out = tmp_pred;
        cmd_predict(p);

        Task task = task_from_string(o.task);
        auto gold_records = load_dataset(o.dev);
        auto preds = load_predictions(tmp_pred, task);
        std::vector<std::vector<std::string>> pred_items, gold_items;
        for (size_t i = 0; i < gold_records.size(); ++i) {
            pred_items.push_back(sentence_items(preds.sentences[i], task));
            gold_items.push_back(sentence_items(gold_sentence(gold_records[i], task), task));
        }
        rows.push_back({combo, score_strict(pred_items, gold_items, task).f1});
        log_info("sweep " + combo.dump() + " -> F1 " + std::to_string(rows.back().f1));
    }
    std::remove(tmp_ckpt.c_str());
    std::remove(tmp_pred.c_str());

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.f1 > b.f1; });
    std::cout << "dev-F1\tconfig\n";
    auto table_json = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        std::cout << r.f1 << "\t" << r.overrides.dump() << "\n";
        table_json.push_back({{"config", r.overrides}, {"dev_f1", r.f1}});
    }
    if (!o.out.empty()) {
        nlohmann::ordered_json artifact;
        artifact["_meta"] = artifact_meta("sweep", {{"task", o.task}, {"grid", o.grid}});
        artifact["rows"] = std::move(table_json);
        write_atomic(o.out, artifact.dump(2) + "\n");
    }
    return 0;
}

// ---------------------------------------------------------------------------

inline int run(std::vector<std::string> args) {
    CLI::App app{"Sanskrit word segmentation and morphological analysis"};
    app.require_subcommand(1);

    SynthOpts synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic dataset");
    s->add_option("--out", synth.out, "Output dataset (JSON lines)")->required();
    s->add_option("--n", synth.n, "Number of sentences");
    s->add_option("--seed", synth.seed, "Random seed");
    s->add_option("--lexicon", synth.lexicon_path, "Lexicon JSON (default: built-in)");
    s->add_option("--table", synth.table_path, "Sandhi table JSON (default: built-in)");
    s->add_option("--min-words", synth.min_words, "Minimum words per sentence");
    s->add_option("--max-words", synth.max_words, "Maximum words per sentence");

    ExtractOpts ex;
    auto* e = app.add_subcommand("extract-rules", "Extract edit or stem rules from a dataset");
    e->add_option("--data", ex.data, "Dataset (JSON lines)")->required();
    e->add_option("--task", ex.task, "seg or stem")->check(CLI::IsMember({"seg", "stem"}));
    e->add_option("--translit", ex.translit, "on or off (default: seg on, stem off)")
        ->check(CLI::IsMember({"on", "off"}));
    e->add_option("--translit-table", ex.translit_tsv, "Transliteration TSV override");
    e->add_option("--cutoff", ex.cutoff, "Minimum rule frequency");
    e->add_flag("--joint-tags", ex.joint_tags, "Include tags in stem rule identity");
    e->add_option("--top", ex.top, "How many rules to print");
    e->add_option("--out", ex.out, "Write the vocabulary JSON here");

    CommonModelOpts tr;
    auto* t = app.add_subcommand("train", "Train a model");
    t->add_option("--task", tr.task, "t1, t2 or t3")->required()
        ->check(CLI::IsMember({"t1", "t2", "t3"}));
    t->add_option("--data", tr.data, "Training dataset")->required();
    t->add_option("--out", tr.out, "Checkpoint path")->required();
    t->add_option("--config", tr.config_path, "Config JSON or artifact with embedded config");
    t->add_option("--translit-table", tr.translit_tsv, "Transliteration TSV override");
    t->add_option("--init-from", tr.init_from, "Initialize matching tensors from a checkpoint");
    t->add_flag("--quiet", tr.quiet, "Suppress the per-epoch loss log");
    std::optional<int> epochs, batch_size, hidden_dim, embedding_dim, rule_cutoff;
    std::optional<double> dropout, max_lr;
    std::optional<uint64_t> seed;
    std::optional<std::string> translit, char2token;
    std::optional<bool> joint_tags, use_lstm;
    t->add_option("--epochs", epochs, "Training epochs");
    t->add_option("--batch-size", batch_size, "Sentences per batch");
    t->add_option("--hidden-dim", hidden_dim, "Contextual representation width");
    t->add_option("--embedding-dim", embedding_dim, "Character embedding width");
    t->add_option("--cutoff", rule_cutoff, "Rule frequency cutoff");
    t->add_option("--dropout", dropout, "Dropout probability");
    t->add_option("--max-lr", max_lr, "One-cycle peak learning rate");
    t->add_option("--seed", seed, "Random seed");
    t->add_option("--translit", translit, "on or off")->check(CLI::IsMember({"on", "off"}));
    t->add_option("--char2token", char2token, "max or lstm")->check(CLI::IsMember({"max", "lstm"}));
    t->add_option("--joint-tags", joint_tags, "Predict tags as part of stem rules (t2)");
    t->add_option("--use-lstm", use_lstm, "Enable the BiLSTM stack (t1/t3)");

    PredictOpts pr;
    auto* p = app.add_subcommand("predict", "Predict with a trained checkpoint");
    p->add_option("--task", pr.task, "t1, t2 or t3 (default: from checkpoint)");
    p->add_option("--checkpoint", pr.checkpoint, "Checkpoint path")->required();
    p->add_option("--data", pr.data, "Input dataset")->required();
    p->add_option("--out", pr.out, "Predictions output path")->required();

    EvalOpts ev;
    auto* v = app.add_subcommand("evaluate", "Score predictions against gold data");
    v->add_option("--task", ev.task, "t1, t2 or t3")->required()
        ->check(CLI::IsMember({"t1", "t2", "t3"}));
    v->add_option("--pred", ev.pred, "Predictions file")->required();
    v->add_option("--gold", ev.gold, "Gold dataset")->required();
    v->add_option("--mode", ev.mode, "strict or counter")
        ->check(CLI::IsMember({"strict", "counter"}));
    v->add_flag("--sym", ev.symmetric, "Counter mode: normalize by both lengths");
    v->add_option("--min-f1", ev.min_f1, "Exit non-zero when the headline score is lower");
    v->add_option("--out", ev.out, "Write the report JSON here");

    SweepOpts sw;
    auto* w = app.add_subcommand("sweep", "Train/evaluate a grid of configs");
    w->add_option("--task", sw.task, "t1, t2 or t3")->required()
        ->check(CLI::IsMember({"t1", "t2", "t3"}));
    w->add_option("--data", sw.data, "Training dataset")->required();
    w->add_option("--dev", sw.dev, "Development dataset")->required();
    w->add_option("--grid", sw.grid, "Grid JSON: {param: [values...]} or an array of configs")
        ->required();
    w->add_option("--out", sw.out, "Write the result table here");

    std::vector<const char*> argv;
    std::string prog = "sandhi";
    argv.push_back(prog.c_str());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& err) {
        return app.exit(err);
    }

    try {
        if (s->parsed()) return cmd_synth(synth);
        if (e->parsed()) return cmd_extract_rules(ex);
        if (t->parsed()) {
            tr.epochs = epochs;
            tr.batch_size = batch_size;
            tr.hidden_dim = hidden_dim;
            tr.embedding_dim = embedding_dim;
            tr.rule_cutoff = rule_cutoff;
            tr.dropout = dropout;
            tr.max_lr = max_lr;
            tr.seed = seed;
            tr.translit = translit;
            tr.char2token = char2token;
            tr.joint_tags = joint_tags;
            tr.use_lstm = use_lstm;
            return cmd_train(tr);
        }
        if (p->parsed()) return cmd_predict(pr);
        if (v->parsed()) return cmd_evaluate(ev);
        if (w->parsed()) return cmd_sweep(sw);
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace sandhi::cli
