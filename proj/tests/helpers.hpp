#pragma once

// Test-only reference implementations, kept independent of the library code
// they check.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "sandhi/rng.hpp"

namespace testref {

// Plain prefix-table Levenshtein distance.
inline size_t edit_distance(const std::u32string& a, const std::u32string& b) {
    const size_t n = a.size(), m = b.size();
    std::vector<size_t> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = j;
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= m; ++j) {
            size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

// Random pair with len(shorter) <= len(longer): start from the longer string
// and delete/substitute a few characters.
inline std::pair<std::u32string, std::u32string> random_pair(sandhi::Rng& rng, size_t max_len,
                                                             const std::u32string& alphabet) {
    size_t len = 1 + rng.below(max_len);
    std::u32string target;
    for (size_t i = 0; i < len; ++i) target.push_back(alphabet[rng.below(alphabet.size())]);
    std::u32string source = target;
    size_t edits = rng.below(std::max<size_t>(1, len / 2) + 1);
    for (size_t e = 0; e < edits && !source.empty(); ++e) {
        size_t pos = rng.below(source.size());
        if (rng.below(2) == 0)
            source.erase(source.begin() + pos);
        else
            source[pos] = alphabet[rng.below(alphabet.size())];
    }
    if (source.size() > target.size()) source.resize(target.size());
    if (source.empty()) source = target.substr(0, 1);
    return {source, target};
}

// Scalar reference LSTM over one direction; gate order [input, forget, cell,
// output], zero initial states.
struct RefLstm {
    int in_dim, hidden;
    std::vector<double> wx;  // [in_dim][4H]
    std::vector<double> uh;  // [H][4H]
    std::vector<double> b;   // [4H]

    std::vector<std::vector<double>> run(const std::vector<std::vector<double>>& x,
                                         bool reverse) const {
        const int L = static_cast<int>(x.size());
        std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
        std::vector<std::vector<double>> out(L);
        for (int s = 0; s < L; ++s) {
            const int t = reverse ? L - 1 - s : s;
            std::vector<double> gates(4 * hidden, 0.0);
            for (int j = 0; j < 4 * hidden; ++j) gates[j] = b[j];
            for (int i = 0; i < in_dim; ++i)
                for (int j = 0; j < 4 * hidden; ++j) gates[j] += x[t][i] * wx[i * 4 * hidden + j];
            for (int i = 0; i < hidden; ++i)
                for (int j = 0; j < 4 * hidden; ++j) gates[j] += h[i] * uh[i * 4 * hidden + j];
            auto sigm = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
            for (int i = 0; i < hidden; ++i) {
                double gi = sigm(gates[i]);
                double gf = sigm(gates[hidden + i]);
                double gc = std::tanh(gates[2 * hidden + i]);
                double go = sigm(gates[3 * hidden + i]);
                c[i] = gf * c[i] + gi * gc;
                h[i] = go * std::tanh(c[i]);
            }
            out[t] = h;
        }
        return out;
    }
};

}  // namespace testref
