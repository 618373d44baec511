#include <catch2/catch.hpp>

#include <cstdio>
#include <fstream>

#include "sandhi/corpus.hpp"
#include "sandhi/demo_data.hpp"

using namespace sandhi;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(std::string p, const std::string& content) : path(std::move(p)) {
        std::ofstream out(path, std::ios::binary);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("load json lines") {
    TempFile f("corpus_test1.jsonl",
               "{\"sandhied\":\"bhavati c\xc3\xa3tra\",\"segmentation\":[\"bhavati\",\"ca\",\"atra\"]}\n");
    auto records = load_dataset(f.path);
    REQUIRE(records.size() == 1);
    CHECK(records[0].sandhied == utf8_decode("bhavati c\xc3\xa3tra"));
    REQUIRE(records[0].segmentation.size() == 3);
    CHECK(records[0].segmentation[1] == U"ca");
    CHECK(records[0].analyses.empty());
}

TEST_CASE("empty file yields empty list") {
    TempFile f("corpus_test2.jsonl", "");
    CHECK(load_dataset(f.path).empty());
}

TEST_CASE("analyses triples are carried through") {
    TempFile f("corpus_test3.jsonl",
               "{\"sandhied\":\"bhavati ca atra\","
               "\"segmentation\":[\"bhavati\",\"ca\",\"atra\"],"
               "\"analyses\":[[\"bhavati\",\"bh\xc5\xab\",\"pr. [1] ac. sg. 3\"],"
               "[\"ca\",\"ca\",\"conj.\"],[\"atra\",\"atra\",\"adv.\"]]}\n");
    auto records = load_dataset(f.path);
    REQUIRE(records.size() == 1);
    REQUIRE(records[0].analyses.size() == 3);
    CHECK(records[0].analyses[0].stem == utf8_decode("bh\xc5\xab"));
    CHECK(records[0].analyses[0].tag == "pr. [1] ac. sg. 3");
}

TEST_CASE("schema violations report the line number") {
    TempFile f("corpus_test4.jsonl",
               "{\"sandhied\":\"a\",\"segmentation\":[\"a\"]}\n"
               "{\"sandhied\":\"b\"}\n");
    try {
        load_dataset(f.path);
        FAIL("expected CorpusError");
    } catch (const CorpusError& e) {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }
}

TEST_CASE("segmentation words must be non-empty and space-free") {
    TempFile f1("corpus_test5.jsonl", "{\"sandhied\":\"a\",\"segmentation\":[\"\"]}\n");
    CHECK_THROWS_AS(load_dataset(f1.path), CorpusError);
    TempFile f2("corpus_test6.jsonl", "{\"sandhied\":\"a b\",\"segmentation\":[\"a b\"]}\n");
    CHECK_THROWS_AS(load_dataset(f2.path), CorpusError);
}

TEST_CASE("analyses must match the segmentation") {
    TempFile f("corpus_test7.jsonl",
               "{\"sandhied\":\"ab\",\"segmentation\":[\"ab\"],"
               "\"analyses\":[[\"xy\",\"x\",\"t\"]]}\n");
    CHECK_THROWS_AS(load_dataset(f.path), CorpusError);
}

TEST_CASE("save and reload round trip") {
    auto records = synth_corpus(demo_lexicon(), demo_sandhi_table(), 25, 11);
    records[0].strata = "easy";
    save_dataset("corpus_test8.jsonl", records);
    auto reloaded = load_dataset("corpus_test8.jsonl");
    std::remove("corpus_test8.jsonl");
    REQUIRE(reloaded.size() == records.size());
    for (size_t i = 0; i < records.size(); ++i) {
        CHECK(reloaded[i].sandhied == records[i].sandhied);
        CHECK(reloaded[i].segmentation == records[i].segmentation);
        REQUIRE(reloaded[i].analyses.size() == records[i].analyses.size());
        CHECK(reloaded[i].strata == records[i].strata);
    }
}

TEST_CASE("corruption filter") {
    SentenceRecord equal{U"abc", {U"abc"}, {}, {}};
    SentenceRecord longer{U"abcdefgh", {U"ab"}, {}, {}};
    auto [kept, stats] = filter_corrupt({equal, longer});
    CHECK(kept.size() == 1);
    CHECK(stats.total == 2);
    CHECK(stats.removed_corrupt == 1);
}

TEST_CASE("filter removes exactly the corrupted record from a synthetic corpus") {
    auto records = synth_corpus(demo_lexicon(), demo_sandhi_table(), 100, 5);
    records[37].sandhied += U"xxxxxxxxxxxx";  // longer than its target now
    auto [kept, stats] = filter_corrupt(records);
    CHECK(kept.size() == 99);
    CHECK(stats.removed_corrupt == 1);

    auto [kept2, stats2] = filter_corrupt(kept);
    CHECK(kept2.size() == kept.size());
    CHECK(stats2.removed_corrupt == 0);
}

TEST_CASE("synthesis applies the fusion table at boundaries") {
    std::vector<SandhiFusion> table = {{U'a', U'a', U"ā"}};
    std::u32string fused = apply_sandhi({U"saha", U"agacchat"}, table);
    CHECK(fused == utf8_decode("sah\xc4\x81gacchat"));
}

TEST_CASE("synthesis is deterministic and honors n") {
    CHECK(synth_corpus(demo_lexicon(), demo_sandhi_table(), 0, 1).empty());
    auto a = synth_corpus(demo_lexicon(), demo_sandhi_table(), 50, 123);
    auto b = synth_corpus(demo_lexicon(), demo_sandhi_table(), 50, 123);
    REQUIRE(a.size() == 50);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].sandhied == b[i].sandhied);
        CHECK(a[i].segmentation == b[i].segmentation);
    }
    CHECK_THROWS_AS(synth_corpus({}, demo_sandhi_table(), 3, 1), CorpusError);
}

TEST_CASE("undoing recorded fusions reproduces the gold segmentation") {
    auto records = synth_corpus(demo_lexicon(), demo_sandhi_table(), 60, 77);
    for (const auto& r : records) {
        std::vector<std::pair<size_t, SandhiFusion>> fusions;
        std::u32string sandhied = apply_sandhi(r.segmentation, demo_sandhi_table(), &fusions);
        REQUIRE(sandhied == r.sandhied);
        // Undo right-to-left so recorded positions stay valid.
        std::u32string undone = sandhied;
        for (auto it = fusions.rbegin(); it != fusions.rend(); ++it) {
            const auto& [pos, f] = *it;
            std::u32string repl;
            repl += f.left;
            repl += U' ';
            repl += f.right;
            undone = undone.substr(0, pos) + repl + undone.substr(pos + f.fused.size());
        }
        CHECK(undone == join_words(r.segmentation));
    }
}

TEST_CASE("synthesized records carry full analyses") {
    auto records = synth_corpus(demo_lexicon(), demo_sandhi_table(), 20, 3);
    for (const auto& r : records) {
        REQUIRE(r.analyses.size() == r.segmentation.size());
        for (size_t i = 0; i < r.analyses.size(); ++i) {
            CHECK(r.analyses[i].word == r.segmentation[i]);
            CHECK(!r.analyses[i].stem.empty());
            CHECK(!r.analyses[i].tag.empty());
        }
    }
}
