// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Criterion 9 depends on external data and reports instead of asserting; it
// is skipped unless SANDHI_WSMP_TRAIN points at a dataset.

#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck_suite.hpp"
#include "helpers.hpp"
#include "sandhi/demo_data.hpp"
#include "sandhi/eval.hpp"
#include "sandhi/models.hpp"

using namespace sandhi;

namespace {

int failures = 0;

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

void report(const std::string& id, const std::string& label, bool pass, const std::string& detail) {
    std::cout << "[" << id << "] " << label << ": " << (pass ? "PASS" : "FAIL");
    if (!detail.empty()) std::cout << "  (" << detail << ")";
    std::cout << std::endl;
    if (!pass) ++failures;
}

void skip(const std::string& id, const std::string& label, const std::string& why) {
    std::cout << "[" << id << "] " << label << ": SKIP  (" << why << ")" << std::endl;
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

// ---- C1: edit-rule round trip on 5000 synthetic filtered pairs -------------

void criterion1() {
    Timer timer;
    auto records = filter_corrupt(synth_corpus(demo_lexicon(), demo_sandhi_table(), 5000, 101)).first;
    size_t ok = 0;
    for (const auto& rec : records) {
        std::u32string tgt = join_words(rec.segmentation);
        auto labels = derive_labels(rec.sandhied, tgt);
        if (labels.size() == rec.sandhied.size() && apply_labels(rec.sandhied, labels) == rec.segmentation)
            ++ok;
    }
    const double secs = timer.seconds();
    report("C1", "edit-rule round trip on 5000 synthetic pairs",
           ok == records.size() && secs < 10.0,
           std::to_string(ok) + "/" + std::to_string(records.size()) + " exact, " + fmt(secs, 2) + "s");
}

// ---- C2: stem-rule round trip ----------------------------------------------

void criterion2() {
    size_t ok = 0, total = 0;
    auto records = synth_corpus(demo_lexicon(), demo_sandhi_table(), 3000, 202);
    for (const auto& rec : records) {
        for (const auto& a : rec.analyses) {
            ++total;
            StemRule r = extract(a.word, a.stem);
            if (applicable(r, a.word) && apply_rule(r, a.word) == a.stem) ++ok;
        }
    }
    // fixtures and the zero-infix edge
    struct Fixture {
        std::u32string word, stem;
    };
    std::vector<Fixture> fixtures = {
        {U"saH", U"tad"},
        {utf8_decode("bhavati"), utf8_decode("bh\xc5\xab")},
        {U"xy", U"ab"},  // no common infix at all
        {U"a", U""},     // empty stem
    };
    for (const auto& f : fixtures) {
        ++total;
        StemRule r = extract(f.word, f.stem);
        if (applicable(r, f.word) && apply_rule(r, f.word) == f.stem) ++ok;
    }
    report("C2", "stem-rule round trip including fixtures", ok == total,
           std::to_string(ok) + "/" + std::to_string(total) + " exact");
}

// ---- C3: alignment cost equals an independent DP ----------------------------

void criterion3() {
    Rng rng(303);
    const std::u32string alphabet = U"abcdefgh āī";
    size_t ok = 0;
    const size_t n = 200;
    for (size_t i = 0; i < n; ++i) {
        auto [src, tgt] = testref::random_pair(rng, 40, alphabet);
        if (align(src, tgt).cost == testref::edit_distance(src, tgt)) ++ok;
    }
    report("C3", "alignment cost matches reference DP on 200 random pairs", ok == n,
           std::to_string(ok) + "/" + std::to_string(n) + " equal");
}

// ---- C4: gradient checks -----------------------------------------------------

void criterion4() {
    Timer timer;
    bool all_ok = true;
    size_t checks = 0;
    double worst = 0.0;
    std::string first_fail;
    for (const auto& [name, result] : gradcheck::run_all()) {
        checks += result.checks;
        worst = std::max(worst, result.worst);
        if (!result.ok && first_fail.empty()) first_fail = result.detail;
        all_ok = all_ok && result.ok && result.checks >= 5;
    }
    const double secs = timer.seconds();
    std::ostringstream werr;
    werr << std::scientific << std::setprecision(2) << worst;
    report("C4", "finite-difference gradient checks for all layers", all_ok && secs < 60.0,
           std::to_string(checks) + " checks, worst rel err " + werr.str() + ", " + fmt(secs, 1) +
               "s" + (first_fail.empty() ? "" : "; " + first_fail));
}

// ---- C5: desk-scale learning -------------------------------------------------

void criterion5() {
    Timer timer;
    auto all = synth_corpus(demo_lexicon(), demo_sandhi_table(), 2200, 20240807);
    std::vector<SentenceRecord> train(all.begin(), all.begin() + 2000);
    std::vector<SentenceRecord> held(all.begin() + 2000, all.end());
    train = filter_corrupt(train).first;
    auto table = TranslitTable::builtin();

    ModelConfig c1 = ModelConfig::defaults_t1();
    c1.hidden_dim = 128;
    c1.embedding_dim = 32;
    c1.epochs = 15;
    c1.max_lr = 1.0;
    c1.seed = 7;
    auto t1_records = to_model_space(train, table, c1.transliteration);
    Segmenter<float> seg(c1, table, CharVocab::build(t1_records),
                         collect_rules(t1_records, c1.rule_cutoff));
    train_segmenter(seg, train);

    std::vector<std::vector<std::string>> p1, g1;
    for (const auto& rec : held) {
        std::vector<std::string> pw, gw;
        for (const auto& w : segment(seg, rec.sandhied)) pw.push_back(utf8_encode(w));
        for (const auto& w : rec.segmentation) gw.push_back(utf8_encode(w));
        p1.push_back(std::move(pw));
        g1.push_back(std::move(gw));
    }
    const double f1_seg = score_strict(p1, g1, Task::T1).f1;

    ModelConfig c2 = ModelConfig::defaults_t2();
    c2.hidden_dim = 128;
    c2.embedding_dim = 32;
    c2.epochs = 15;
    c2.max_lr = 0.5;
    c2.seed = 7;
    Analyzer<float> ana(c2, table, CharVocab::build(train), collect(train, c2.rule_cutoff, false));
    train_analyzer(ana, train);

    std::vector<std::vector<std::string>> p2, g2;
    for (const auto& rec : held) {
        std::vector<std::string> pi, gi;
        for (const auto& [stem, tag] : analyze(ana, rec.segmentation))
            pi.push_back(make_item({utf8_encode(stem), MorphTag::normalize(tag)}));
        for (const auto& a : rec.analyses)
            gi.push_back(make_item({utf8_encode(a.stem), MorphTag::normalize(a.tag)}));
        p2.push_back(std::move(pi));
        g2.push_back(std::move(gi));
    }
    const double f1_ana = score_strict(p2, g2, Task::T2).f1;

    const double secs = timer.seconds();
    report("C5", "desk-scale learning reaches 0.90 strict F1 held out",
           f1_seg >= 0.90 && f1_ana >= 0.90,
           "segmentation F1 " + fmt(f1_seg) + ", analysis F1 " + fmt(f1_ana) + ", " + fmt(secs, 0) +
               "s");
}

// ---- C6: counter scorer fidelity ---------------------------------------------

void criterion6() {
    const double permuted = score_counter("opt. [1] ac. sg. 3", "opt. [3] ac. sg. 1");
    const double noun = score_counter("f. du. abl.", "m. pl. dat.");
    report("C6", "counter scorer reproduces both reference examples",
           permuted == 1.0 && noun == 8.0 / 11.0,
           "permuted=" + fmt(permuted) + ", f.du.abl.=" + fmt(noun) + " (want 1.0 and " +
               fmt(8.0 / 11.0) + ")");
}

// ---- C7: one-cycle schedule ---------------------------------------------------

void criterion7() {
    nn::LrSchedule s;
    s.total_steps = 5000;
    s.max_lr = 0.37;
    s.warmup_fraction = 0.3;
    s.div = 25.0;
    s.final_div = 1e4;
    const double first = nn::one_cycle_lr(0, s);
    const double last = nn::one_cycle_lr(s.total_steps - 1, s);
    int peaks = 0;
    bool positive = true;
    for (long t = 0; t < s.total_steps; ++t) {
        const double lr = nn::one_cycle_lr(t, s);
        if (lr == s.max_lr) ++peaks;
        if (lr <= 0.0) positive = false;
    }
    const bool ok = first == s.max_lr / s.div && peaks == 1 &&
                    std::abs(last - s.max_lr / s.final_div) < 1e-9 && positive;
    report("C7", "one-cycle schedule endpoints and single peak", ok,
           "lr0=" + fmt(first, 6) + ", peaks=" + std::to_string(peaks) + ", last=" + fmt(last, 9));
}

// ---- C8: determinism -----------------------------------------------------------

void criterion8() {
    auto records = filter_corrupt(synth_corpus(demo_lexicon(), demo_sandhi_table(), 120, 808)).first;
    auto table = TranslitTable::builtin();
    ModelConfig cfg = ModelConfig::defaults_t1();
    cfg.hidden_dim = 32;
    cfg.embedding_dim = 16;
    cfg.epochs = 3;
    cfg.max_lr = 1.0;
    cfg.seed = 4242;

    auto run_once = [&](std::string* ckpt_dump, std::string* pred_dump) {
        auto mrec = to_model_space(records, table, cfg.transliteration);
        Segmenter<float> model(cfg, table, CharVocab::build(mrec), collect_rules(mrec, 1));
        train_segmenter(model, records);
        *ckpt_dump = segmenter_to_json(model).dump();
        std::string preds;
        for (size_t i = 0; i < 30 && i < records.size(); ++i)
            for (const auto& w : segment(model, records[i].sandhied)) preds += utf8_encode(w) + "|";
        *pred_dump = preds;
    };
    std::string ckpt_a, pred_a, ckpt_b, pred_b;
    run_once(&ckpt_a, &pred_a);
    run_once(&ckpt_b, &pred_b);

    // second task type as well
    ModelConfig c2 = ModelConfig::defaults_t2();
    c2.hidden_dim = 16;
    c2.embedding_dim = 8;
    c2.epochs = 2;
    c2.max_lr = 0.4;
    c2.seed = 99;
    auto run_t2 = [&]() {
        Analyzer<float> model(c2, table, CharVocab::build(records), collect(records, 1, false));
        train_analyzer(model, records);
        return analyzer_to_json(model).dump();
    };
    const bool t2_same = run_t2() == run_t2();

    report("C8", "identical seeds give bit-identical checkpoints and predictions",
           ckpt_a == ckpt_b && pred_a == pred_b && t2_same,
           "t1 checkpoint bytes " + std::string(ckpt_a == ckpt_b ? "equal" : "differ") +
               ", predictions " + std::string(pred_a == pred_b ? "equal" : "differ") +
               ", t2 checkpoint bytes " + std::string(t2_same ? "equal" : "differ"));
}

// ---- C9: conditional WSMP rule counts ------------------------------------------

void criterion9() {
    const char* path = std::getenv("SANDHI_WSMP_TRAIN");
    if (!path) {
        skip("C9", "WSMP rule inventory (166 raw / 187 transliterated)",
             "set SANDHI_WSMP_TRAIN=<dataset.jsonl> to run against real data");
        return;
    }
    auto [records, stats] = filter_corrupt(load_dataset(path));
    auto table = TranslitTable::builtin();
    auto raw_vocab = collect_rules(records, 1);
    auto internal_vocab = collect_rules(to_model_space(records, table, true), 1);
    const size_t raw_count = raw_vocab.rules.size() - 4;
    const size_t internal_count = internal_vocab.rules.size() - 4;
    // reported, not asserted: upstream data may have changed
    std::cout << "[C9] WSMP rule inventory: " << raw_count << " rules without transliteration"
              << " (reference 166), " << internal_count << " with (reference 187); "
              << stats.removed_corrupt << "/" << stats.total << " records removed as corrupt"
              << std::endl;
    report("C9", "WSMP rule inventory extracted and reported", true,
           "deviations from the reference counts are reported above, not asserted");
}

}  // namespace

int main() {
    std::cout << "acceptance suite (sandhi " << kVersion << ")" << std::endl;
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    if (failures) {
        std::cout << failures << " criterion(s) FAILED" << std::endl;
        return 1;
    }
    std::cout << "all criteria passed" << std::endl;
    return 0;
}
