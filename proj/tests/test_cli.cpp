#include <catch2/catch.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sandhi/cli.hpp"

using namespace sandhi;

namespace {

struct Cleanup {
    std::vector<std::string> paths;
    ~Cleanup() {
        for (const auto& p : paths) std::remove(p.c_str());
    }
    const char* add(std::string p) {
        paths.push_back(std::move(p));
        return paths.back().c_str();
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

int run(std::vector<std::string> args) { return cli::run(std::move(args)); }

}  // namespace

TEST_CASE("cli: synth writes a loadable dataset with an embedded header") {
    Cleanup c;
    c.add("cli_synth.jsonl");
    REQUIRE(run({"synth", "--out", "cli_synth.jsonl", "--n", "30", "--seed", "5"}) == 0);
    auto records = load_dataset("cli_synth.jsonl");
    CHECK(records.size() == 30);
    std::string first_line = slurp("cli_synth.jsonl").substr(0, 200);
    CHECK(first_line.find("\"_meta\"") != std::string::npos);
    CHECK(first_line.find("\"config\"") != std::string::npos);
}

TEST_CASE("cli: synth is reproducible bit for bit") {
    Cleanup c;
    c.add("cli_synth_a.jsonl");
    c.add("cli_synth_b.jsonl");
    REQUIRE(run({"synth", "--out", "cli_synth_a.jsonl", "--n", "20", "--seed", "9"}) == 0);
    REQUIRE(run({"synth", "--out", "cli_synth_b.jsonl", "--n", "20", "--seed", "9"}) == 0);
    CHECK(slurp("cli_synth_a.jsonl") == slurp("cli_synth_b.jsonl"));
}

TEST_CASE("cli: extract-rules on a synthetic corpus reports the generator's rules") {
    Cleanup c;
    c.add("cli_ex.jsonl");
    c.add("cli_ex_rules.json");
    REQUIRE(run({"synth", "--out", "cli_ex.jsonl", "--n", "400", "--seed", "11"}) == 0);
    REQUIRE(run({"extract-rules", "--data", "cli_ex.jsonl", "--task", "seg", "--translit", "off",
                 "--out", "cli_ex_rules.json"}) == 0);
    auto j = nlohmann::json::parse(slurp("cli_ex_rules.json"));
    size_t replaces = 0;
    for (const auto& r : j["rules"])
        if (r["kind"] == "REPLACE") ++replaces;
    CHECK(replaces == 6);  // the demo table's six character-changing fusions

    // huge cutoff leaves only the abstract rules
    REQUIRE(run({"extract-rules", "--data", "cli_ex.jsonl", "--task", "seg", "--cutoff", "99999",
                 "--out", "cli_ex_rules.json"}) == 0);
    j = nlohmann::json::parse(slurp("cli_ex_rules.json"));
    CHECK(j["rules"].size() == 4);
}

TEST_CASE("cli: extract-rules for stems") {
    Cleanup c;
    c.add("cli_exs.jsonl");
    c.add("cli_exs_rules.json");
    REQUIRE(run({"synth", "--out", "cli_exs.jsonl", "--n", "200", "--seed", "3"}) == 0);
    REQUIRE(run({"extract-rules", "--data", "cli_exs.jsonl", "--task", "stem", "--out",
                 "cli_exs_rules.json"}) == 0);
    auto j = nlohmann::json::parse(slurp("cli_exs_rules.json"));
    CHECK(j["stem_rules"]["rules"].size() > 3);
    CHECK(j["stem_rules"]["tags"].size() > 3);
}

TEST_CASE("cli: train, predict, evaluate round trip") {
    Cleanup c;
    c.add("cli_train.jsonl");
    c.add("cli_dev.jsonl");
    c.add("cli_ckpt.json");
    c.add("cli_pred.jsonl");
    c.add("cli_report.json");
    REQUIRE(run({"synth", "--out", "cli_train.jsonl", "--n", "150", "--seed", "21"}) == 0);
    REQUIRE(run({"synth", "--out", "cli_dev.jsonl", "--n", "30", "--seed", "22"}) == 0);
    REQUIRE(run({"train", "--task", "t1", "--data", "cli_train.jsonl", "--out", "cli_ckpt.json",
                 "--epochs", "6", "--hidden-dim", "32", "--embedding-dim", "16", "--max-lr", "2.0",
                 "--dropout", "0.0", "--quiet"}) == 0);
    REQUIRE(run({"predict", "--checkpoint", "cli_ckpt.json", "--data", "cli_dev.jsonl", "--out",
                 "cli_pred.jsonl"}) == 0);
    REQUIRE(run({"evaluate", "--task", "t1", "--pred", "cli_pred.jsonl", "--gold", "cli_dev.jsonl",
                 "--out", "cli_report.json"}) == 0);
    auto report = nlohmann::json::parse(slurp("cli_report.json"));
    CHECK(report["report"].contains("f1"));
    CHECK(report["_meta"]["version"].get<std::string>() == std::string(kVersion));

    // failing threshold flips the exit code
    CHECK(run({"evaluate", "--task", "t1", "--pred", "cli_pred.jsonl", "--gold", "cli_dev.jsonl",
               "--min-f1", "1.01"}) == 2);

    // counter mode runs too
    CHECK(run({"evaluate", "--task", "t1", "--pred", "cli_pred.jsonl", "--gold", "cli_dev.jsonl",
               "--mode", "counter"}) == 0);
}

TEST_CASE("cli: predict is deterministic given a checkpoint") {
    Cleanup c;
    c.add("cli_d.jsonl");
    c.add("cli_d_ckpt.json");
    c.add("cli_d_pred1.jsonl");
    c.add("cli_d_pred2.jsonl");
    REQUIRE(run({"synth", "--out", "cli_d.jsonl", "--n", "40", "--seed", "31"}) == 0);
    REQUIRE(run({"train", "--task", "t2", "--data", "cli_d.jsonl", "--out", "cli_d_ckpt.json",
                 "--epochs", "2", "--hidden-dim", "16", "--embedding-dim", "8", "--max-lr", "0.5",
                 "--quiet"}) == 0);
    REQUIRE(run({"predict", "--checkpoint", "cli_d_ckpt.json", "--data", "cli_d.jsonl", "--out",
                 "cli_d_pred1.jsonl"}) == 0);
    REQUIRE(run({"predict", "--checkpoint", "cli_d_ckpt.json", "--data", "cli_d.jsonl", "--out",
                 "cli_d_pred2.jsonl"}) == 0);
    CHECK(slurp("cli_d_pred1.jsonl") == slurp("cli_d_pred2.jsonl"));
}

TEST_CASE("cli: t3 trains and predicts triples") {
    Cleanup c;
    c.add("cli_t3.jsonl");
    c.add("cli_t3_ckpt.json");
    c.add("cli_t3_pred.jsonl");
    REQUIRE(run({"synth", "--out", "cli_t3.jsonl", "--n", "60", "--seed", "41"}) == 0);
    REQUIRE(run({"train", "--task", "t3", "--data", "cli_t3.jsonl", "--out", "cli_t3_ckpt.json",
                 "--epochs", "2", "--hidden-dim", "16", "--embedding-dim", "8", "--max-lr", "0.3",
                 "--quiet"}) == 0);
    REQUIRE(run({"predict", "--checkpoint", "cli_t3_ckpt.json", "--data", "cli_t3.jsonl", "--out",
                 "cli_t3_pred.jsonl"}) == 0);
    std::ifstream in("cli_t3_pred.jsonl");
    std::string line;
    std::getline(in, line);  // _meta
    std::getline(in, line);
    auto j = nlohmann::json::parse(line);
    REQUIRE(j.contains("prediction"));
    REQUIRE(!j["prediction"].empty());
    CHECK(j["prediction"][0].size() == 3);

    // evaluate the joint output
    CHECK(run({"evaluate", "--task", "t3", "--pred", "cli_t3_pred.jsonl", "--gold",
               "cli_t3.jsonl"}) == 0);
}

TEST_CASE("cli: t3 --init-from a t1 checkpoint") {
    Cleanup c;
    c.add("cli_i.jsonl");
    c.add("cli_i_t1.json");
    c.add("cli_i_t3.json");
    REQUIRE(run({"synth", "--out", "cli_i.jsonl", "--n", "40", "--seed", "51"}) == 0);
    REQUIRE(run({"train", "--task", "t1", "--data", "cli_i.jsonl", "--out", "cli_i_t1.json",
                 "--epochs", "1", "--hidden-dim", "16", "--embedding-dim", "8", "--quiet"}) == 0);
    REQUIRE(run({"train", "--task", "t3", "--data", "cli_i.jsonl", "--out", "cli_i_t3.json",
                 "--epochs", "1", "--hidden-dim", "16", "--embedding-dim", "8", "--init-from",
                 "cli_i_t1.json", "--quiet"}) == 0);
}

TEST_CASE("cli: config file with CLI precedence") {
    Cleanup c;
    c.add("cli_cfg.json");
    c.add("cli_cfg_data.jsonl");
    c.add("cli_cfg_ckpt.json");
    {
        std::ofstream out("cli_cfg.json");
        out << R"({"epochs": 1, "hidden_dim": 16, "embedding_dim": 8, "max_lr": 0.4})";
    }
    REQUIRE(run({"synth", "--out", "cli_cfg_data.jsonl", "--n", "25", "--seed", "61"}) == 0);
    // CLI --epochs overrides the file's value
    REQUIRE(run({"train", "--task", "t1", "--data", "cli_cfg_data.jsonl", "--out",
                 "cli_cfg_ckpt.json", "--config", "cli_cfg.json", "--epochs", "2", "--quiet"}) == 0);
    auto ckpt = nlohmann::json::parse(slurp("cli_cfg_ckpt.json"));
    CHECK(ckpt["config"]["epochs"].get<int>() == 2);
    CHECK(ckpt["config"]["hidden_dim"].get<int>() == 16);

    // a checkpoint works as a --config source (embedded config)
    Cleanup c2;
    c2.add("cli_cfg_ckpt2.json");
    REQUIRE(run({"train", "--task", "t1", "--data", "cli_cfg_data.jsonl", "--out",
                 "cli_cfg_ckpt2.json", "--config", "cli_cfg_ckpt.json", "--quiet"}) == 0);
    auto ckpt2 = nlohmann::json::parse(slurp("cli_cfg_ckpt2.json"));
    CHECK(ckpt2["config"]["hidden_dim"].get<int>() == 16);
    CHECK(ckpt2["config"]["epochs"].get<int>() == 2);
}

TEST_CASE("cli: sweep emits one row per config, sorted by F1") {
    Cleanup c;
    c.add("cli_sw.jsonl");
    c.add("cli_sw_dev.jsonl");
    c.add("cli_sw_grid.json");
    c.add("cli_sw_out.json");
    REQUIRE(run({"synth", "--out", "cli_sw.jsonl", "--n", "40", "--seed", "71"}) == 0);
    REQUIRE(run({"synth", "--out", "cli_sw_dev.jsonl", "--n", "15", "--seed", "72"}) == 0);
    {
        std::ofstream out("cli_sw_grid.json");
        out << R"({"epochs": [1, 2], "max_lr": [0.3, 1.0], "hidden_dim": [16], "embedding_dim": [8]})";
    }
    REQUIRE(run({"sweep", "--task", "t1", "--data", "cli_sw.jsonl", "--dev", "cli_sw_dev.jsonl",
                 "--grid", "cli_sw_grid.json", "--out", "cli_sw_out.json"}) == 0);
    auto j = nlohmann::json::parse(slurp("cli_sw_out.json"));
    REQUIRE(j["rows"].size() == 4);
    for (size_t i = 1; i < 4; ++i)
        CHECK(j["rows"][i - 1]["dev_f1"].get<double>() >= j["rows"][i]["dev_f1"].get<double>());
}

TEST_CASE("cli: descriptive errors and nonzero exits") {
    CHECK(run({"train", "--task", "t9", "--data", "x", "--out", "y"}) != 0);
    CHECK(run({"predict", "--checkpoint", "does_not_exist.json", "--data", "x", "--out", "y"}) != 0);
    CHECK(run({"evaluate", "--task", "t1", "--pred", "missing.jsonl", "--gold", "missing2.jsonl"}) != 0);
    CHECK(run({"not-a-command"}) != 0);
}
