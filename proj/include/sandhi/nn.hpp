#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sandhi/rng.hpp"
#include "sandhi/tensor.hpp"

namespace sandhi::nn {

// ---------------------------------------------------------------------------
// Hyperparameters. Defaults follow the tuned values wired in per task by the
// model constructors; everything here can be overridden from config files or
// the command line.

enum class Char2Token { Lstm, Max };

struct ModelConfig {
    int batch_size = 16;
    int epochs = 15;
    double dropout = 0.1;
    int hidden_dim = 512;     // width of the contextual representation (both LSTM directions)
    int embedding_dim = 128;
    bool transliteration = true;
    int rule_cutoff = 1;
    Char2Token char2token = Char2Token::Max;
    bool joint_tag_rules = false;
    bool use_lstm = true;
    double max_lr = 0.2;
    uint64_t seed = 7;
    // one-cycle schedule shape
    double warmup_fraction = 0.3;
    double lr_div = 25.0;
    double lr_final_div = 1e4;
    // T3 only: where stem/tag spans come from during training
    bool teacher_forced_spans = true;

    void validate() const {
        check(dropout >= 0.0 && dropout < 1.0, "config: dropout must be in [0, 1)");
        check(hidden_dim > 0 && embedding_dim > 0, "config: dims must be positive");
        check(hidden_dim % 2 == 0, "config: hidden_dim must be even (two LSTM directions)");
        check(batch_size > 0, "config: batch_size must be positive");
        check(epochs >= 0, "config: epochs must be non-negative");
        check(max_lr > 0.0, "config: max_lr must be positive");
    }

    static ModelConfig defaults_t1() {
        ModelConfig c;
        c.transliteration = true;
        c.batch_size = 16;
        c.dropout = 0.1;
        c.hidden_dim = 512;
        c.embedding_dim = 128;
        c.use_lstm = true;
        c.max_lr = 1.0;
        return c;
    }
    static ModelConfig defaults_t2() {
        ModelConfig c;
        c.transliteration = false;
        c.rule_cutoff = 1;
        c.char2token = Char2Token::Max;
        c.joint_tag_rules = false;
        c.hidden_dim = 512;
        c.embedding_dim = 128;
        c.max_lr = 0.5;
        return c;
    }
    static ModelConfig defaults_t3() {
        ModelConfig c;
        c.transliteration = true;
        c.batch_size = 16;
        c.hidden_dim = 512;
        c.dropout = 0.1;
        c.char2token = Char2Token::Max;
        c.max_lr = 0.5;
        return c;
    }
};

inline nlohmann::ordered_json config_to_json(const ModelConfig& c) {
    nlohmann::ordered_json j;
    j["batch_size"] = c.batch_size;
    j["epochs"] = c.epochs;
    j["dropout"] = c.dropout;
    j["hidden_dim"] = c.hidden_dim;
    j["embedding_dim"] = c.embedding_dim;
    j["transliteration"] = c.transliteration;
    j["rule_cutoff"] = c.rule_cutoff;
    j["char2token"] = c.char2token == Char2Token::Max ? "max" : "lstm";
    j["joint_tag_rules"] = c.joint_tag_rules;
    j["use_lstm"] = c.use_lstm;
    j["max_lr"] = c.max_lr;
    j["seed"] = c.seed;
    j["warmup_fraction"] = c.warmup_fraction;
    j["lr_div"] = c.lr_div;
    j["lr_final_div"] = c.lr_final_div;
    j["teacher_forced_spans"] = c.teacher_forced_spans;
    return j;
}

inline ModelConfig config_from_json(const nlohmann::json& j, ModelConfig base = {}) {
    ModelConfig c = base;
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<int>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    if (j.contains("dropout")) c.dropout = j["dropout"].get<double>();
    if (j.contains("hidden_dim")) c.hidden_dim = j["hidden_dim"].get<int>();
    if (j.contains("embedding_dim")) c.embedding_dim = j["embedding_dim"].get<int>();
    if (j.contains("transliteration")) c.transliteration = j["transliteration"].get<bool>();
    if (j.contains("rule_cutoff")) c.rule_cutoff = j["rule_cutoff"].get<int>();
    if (j.contains("char2token")) {
        std::string v = j["char2token"].get<std::string>();
        check(v == "max" || v == "lstm", "config: char2token must be 'max' or 'lstm'");
        c.char2token = v == "max" ? Char2Token::Max : Char2Token::Lstm;
    }
    if (j.contains("joint_tag_rules")) c.joint_tag_rules = j["joint_tag_rules"].get<bool>();
    if (j.contains("use_lstm")) c.use_lstm = j["use_lstm"].get<bool>();
    if (j.contains("max_lr")) c.max_lr = j["max_lr"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
    if (j.contains("warmup_fraction")) c.warmup_fraction = j["warmup_fraction"].get<double>();
    if (j.contains("lr_div")) c.lr_div = j["lr_div"].get<double>();
    if (j.contains("lr_final_div")) c.lr_final_div = j["lr_final_div"].get<double>();
    if (j.contains("teacher_forced_spans")) c.teacher_forced_spans = j["teacher_forced_spans"].get<bool>();
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// One-cycle learning rate: linear warmup from max_lr/div to the single peak
// at max_lr, then cosine annealing down to max_lr/final_div on the last step.

struct LrSchedule {
    long total_steps = 0;
    double max_lr = 0.1;
    double warmup_fraction = 0.3;
    double div = 25.0;
    double final_div = 1e4;
};

inline double one_cycle_lr(long step, const LrSchedule& s) {
    check(s.total_steps > 0 && step >= 0 && step < s.total_steps, "one_cycle_lr: step out of range");
    const long warmup = static_cast<long>(s.warmup_fraction * static_cast<double>(s.total_steps));
    const double start = s.max_lr / s.div;
    if (step < warmup)
        return start + (s.max_lr - start) * static_cast<double>(step) / static_cast<double>(warmup);
    if (step == warmup) return s.max_lr;  // the single peak, exact
    const long anneal = s.total_steps - 1 - warmup;
    if (anneal <= 0) return s.max_lr;
    const double final_lr = s.max_lr / s.final_div;
    if (step == s.total_steps - 1) return final_lr;
    const double t = static_cast<double>(step - warmup) / static_cast<double>(anneal);
    return final_lr + (s.max_lr - final_lr) * 0.5 * (1.0 + std::cos(t * 3.14159265358979323846));
}

// ---------------------------------------------------------------------------
// Parameters

template <class T>
struct ParamSet {
    std::vector<std::pair<std::string, Var<T>>> items;

    // uniform fan-in init: U(-1/sqrt(fan_in), 1/sqrt(fan_in))
    Var<T> add(const std::string& name, int rows, int cols, int fan_in, Rng& rng) {
        Var<T> v = Var<T>::leaf(rows, cols, true);
        const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& x : v.val()) x = static_cast<T>(rng.uniform(-s, s));
        items.push_back({name, v});
        return v;
    }

    Var<T> add_zeros(const std::string& name, int rows, int cols) {
        Var<T> v = Var<T>::leaf(rows, cols, true);
        items.push_back({name, v});
        return v;
    }

    std::vector<Var<T>> vars() const {
        std::vector<Var<T>> out;
        out.reserve(items.size());
        for (const auto& [name, v] : items) out.push_back(v);
        return out;
    }
};

template <class T>
inline void zero_grads(const std::vector<Var<T>>& params) {
    for (const auto& p : params) const_cast<Var<T>&>(p).grad().assign(p.size(), T(0));
}

// p <- p - lr * g and nothing else. Non-finite gradients abort the step.
template <class T>
inline void sgd_step(const std::vector<Var<T>>& params, double lr) {
    for (const auto& p : params)
        for (const T g : p.grad())
            if (!std::isfinite(static_cast<double>(g)))
                throw TensorError("sgd_step: non-finite gradient");
    for (const auto& p : params) {
        auto& v = const_cast<Var<T>&>(p).val();
        const auto& g = p.grad();
        for (size_t i = 0; i < v.size(); ++i) v[i] -= static_cast<T>(lr) * g[i];
    }
}

// ---------------------------------------------------------------------------
// LSTM. Gate layout along the 4H axis is [input, forget, cell, output];
// initial hidden and cell states are zero.

template <class T>
struct LstmDir {
    Var<T> wx;  // [in_dim x 4H]
    Var<T> uh;  // [H x 4H]
    Var<T> b;   // [1 x 4H]
};

template <class T>
LstmDir<T> make_lstm_dir(ParamSet<T>& ps, const std::string& prefix, int in_dim, int hidden, Rng& rng) {
    LstmDir<T> d;
    d.wx = ps.add(prefix + ".wx", in_dim, 4 * hidden, in_dim, rng);
    d.uh = ps.add(prefix + ".uh", hidden, 4 * hidden, hidden, rng);
    d.b = ps.add_zeros(prefix + ".b", 1, 4 * hidden);
    return d;
}

template <class T>
Var<T> lstm_run(const Var<T>& x, const LstmDir<T>& p, int hidden, bool reverse) {
    const int L = x.rows();
    check(L >= 1, "lstm_run: empty sequence");
    Var<T> xw = matmul(x, p.wx);  // hoists the input projection out of the recurrence
    Var<T> h = Var<T>::leaf(1, hidden, false);
    Var<T> c = Var<T>::leaf(1, hidden, false);
    std::vector<Var<T>> outputs(L);
    for (int step = 0; step < L; ++step) {
        const int t = reverse ? L - 1 - step : step;
        Var<T> gates = add(add(slice_rows(xw, t, t + 1), matmul(h, p.uh)), p.b);
        Var<T> gi = sigmoid(slice_cols(gates, 0, hidden));
        Var<T> gf = sigmoid(slice_cols(gates, hidden, 2 * hidden));
        Var<T> gc = tanh_(slice_cols(gates, 2 * hidden, 3 * hidden));
        Var<T> go = sigmoid(slice_cols(gates, 3 * hidden, 4 * hidden));
        c = add(mul(gf, c), mul(gi, gc));
        h = mul(go, tanh_(c));
        outputs[t] = h;
    }
    return concat_rows(outputs);
}

template <class T>
struct BiLstm {
    LstmDir<T> fwd, bwd;
    int hidden = 0;  // per direction
};

template <class T>
BiLstm<T> make_bilstm(ParamSet<T>& ps, const std::string& prefix, int in_dim, int hidden_per_dir,
                      Rng& rng) {
    BiLstm<T> b;
    b.hidden = hidden_per_dir;
    b.fwd = make_lstm_dir(ps, prefix + ".fwd", in_dim, hidden_per_dir, rng);
    b.bwd = make_lstm_dir(ps, prefix + ".bwd", in_dim, hidden_per_dir, rng);
    return b;
}

// [L x in_dim] -> [L x 2H]
template <class T>
Var<T> bilstm_run(const Var<T>& x, const BiLstm<T>& p) {
    return concat_cols<T>({lstm_run(x, p.fwd, p.hidden, false), lstm_run(x, p.bwd, p.hidden, true)});
}

// Final states of both directions concatenated: [1 x 2H].
template <class T>
Var<T> bilstm_final_states(const Var<T>& x, const BiLstm<T>& p) {
    Var<T> f = lstm_run(x, p.fwd, p.hidden, false);
    Var<T> b = lstm_run(x, p.bwd, p.hidden, true);
    return concat_cols<T>({slice_rows(f, f.rows() - 1, f.rows()), slice_rows(b, 0, 1)});
}

// ---------------------------------------------------------------------------
// Named parameter payloads for checkpoints. Values are written as JSON
// numbers (exact for float32 payloads, which round-trip through double).

template <class T>
nlohmann::ordered_json params_to_json(const ParamSet<T>& ps) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [name, v] : ps.items) {
        nlohmann::ordered_json j;
        j["name"] = name;
        j["shape"] = {v.rows(), v.cols()};
        auto data = nlohmann::ordered_json::array();
        for (const T x : v.val()) data.push_back(static_cast<double>(x));
        j["data"] = std::move(data);
        arr.push_back(std::move(j));
    }
    return arr;
}

template <class T>
void params_from_json(const nlohmann::json& arr, ParamSet<T>& ps) {
    check(arr.size() == ps.items.size(), "checkpoint: parameter count mismatch");
    for (size_t i = 0; i < ps.items.size(); ++i) {
        const auto& j = arr[i];
        auto& [name, v] = ps.items[i];
        check(j.at("name").get<std::string>() == name, "checkpoint: parameter name mismatch");
        check(j.at("shape")[0].get<int>() == v.rows() && j.at("shape")[1].get<int>() == v.cols(),
              "checkpoint: parameter shape mismatch");
        const auto& data = j.at("data");
        check(data.size() == v.size(), "checkpoint: parameter size mismatch");
        for (size_t k = 0; k < v.size(); ++k) v.val()[k] = static_cast<T>(data[k].get<double>());
    }
}

}  // namespace sandhi::nn
