#include <catch2/catch.hpp>

#include <cmath>

#include "helpers.hpp"
#include "sandhi/rng.hpp"
#include "sandhi/tensor.hpp"

using namespace sandhi;
using namespace sandhi::nn;

TEST_CASE("matmul values") {
    auto a = tensor<double>(2, 3, {1, 2, 3, 4, 5, 6});
    auto b = tensor<double>(3, 2, {7, 8, 9, 10, 11, 12});
    auto c = matmul(a, b);
    CHECK(c.at(0, 0) == Approx(58));
    CHECK(c.at(0, 1) == Approx(64));
    CHECK(c.at(1, 0) == Approx(139));
    CHECK(c.at(1, 1) == Approx(154));
}

TEST_CASE("matmul backward") {
    auto a = tensor<double>(1, 2, {2, 3}, true);
    auto b = tensor<double>(2, 1, {5, 7}, true);
    auto c = matmul(a, b);  // scalar 2*5+3*7 = 31
    c.backward();
    CHECK(a.grad()[0] == Approx(5));
    CHECK(a.grad()[1] == Approx(7));
    CHECK(b.grad()[0] == Approx(2));
    CHECK(b.grad()[1] == Approx(3));
}

TEST_CASE("elementwise ops") {
    auto a = tensor<double>(1, 3, {-1, 0, 2});
    CHECK(relu(a).val() == std::vector<double>{0, 0, 2});
    auto s = sigmoid(tensor<double>(1, 1, {0}));
    CHECK(s.val()[0] == Approx(0.5));
    auto t = tanh_(tensor<double>(1, 1, {0}));
    CHECK(t.val()[0] == Approx(0.0));
    auto sc = scale(a, 2.0);
    CHECK(sc.val() == std::vector<double>{-2, 0, 4});
}

TEST_CASE("slices and concat") {
    auto a = tensor<double>(2, 3, {1, 2, 3, 4, 5, 6});
    CHECK(slice_rows(a, 1, 2).val() == std::vector<double>{4, 5, 6});
    CHECK(slice_cols(a, 1, 3).val() == std::vector<double>{2, 3, 5, 6});
    auto cr = concat_rows<double>({slice_rows(a, 1, 2), slice_rows(a, 0, 1)});
    CHECK(cr.val() == std::vector<double>{4, 5, 6, 1, 2, 3});
    auto cc = concat_cols<double>({slice_cols(a, 0, 1), slice_cols(a, 2, 3)});
    CHECK(cc.val() == std::vector<double>{1, 3, 4, 6});
}

TEST_CASE("embed: PAD rows are zero and get no gradient") {
    auto table = tensor<double>(3, 2, {9, 9, 1, 2, 3, 4}, true);
    auto out = embed(table, {0, 2, 0, 1}, 0);
    CHECK(out.val() == std::vector<double>{0, 0, 3, 4, 0, 0, 1, 2});
    auto loss = sum_all(out);
    loss.backward();
    CHECK(table.grad()[0] == 0);  // PAD row untouched
    CHECK(table.grad()[1] == 0);
    CHECK(table.grad()[2] == 1);
    CHECK(table.grad()[4] == 1);
}

TEST_CASE("embed: one-hot table returns one-hot rows") {
    auto table = tensor<double>(3, 3, {0, 0, 0, 0, 1, 0, 0, 0, 1});
    auto out = embed(table, {1, 1}, 0);
    CHECK(out.val() == std::vector<double>{0, 1, 0, 0, 1, 0});
    CHECK_THROWS_AS(embed(table, {5}, 0), TensorError);
}

TEST_CASE("conv1d_same: k=1 identity filter reproduces the input") {
    auto x = tensor<double>(4, 2, {1, 2, 3, 4, 5, 6, 7, 8});
    auto w = tensor<double>(2, 2, {1, 0, 0, 1});  // identity
    auto b = tensor<double>(1, 2, {0, 0});
    CHECK(conv1d_same(x, w, b, 1).val() == x.val());
}

TEST_CASE("conv1d_same: zero input gives bias-only rows") {
    auto x = tensor<double>(3, 2, {0, 0, 0, 0, 0, 0});
    auto w = tensor<double>(6, 4, std::vector<double>(24, 0.5));
    auto b = tensor<double>(1, 4, {1, 2, 3, 4});
    auto out = conv1d_same(x, w, b, 3);
    for (int t = 0; t < 3; ++t)
        for (int j = 0; j < 4; ++j) CHECK(out.at(t, j) == Approx(b.val()[j]));
}

TEST_CASE("conv1d_same matches a brute-force sliding window") {
    Rng rng(31);
    const int L = 5, Cin = 3, Cout = 4, k = 3;
    std::vector<double> xv(L * Cin), wv(k * Cin * Cout), bv(Cout);
    for (auto& v : xv) v = rng.uniform(-1, 1);
    for (auto& v : wv) v = rng.uniform(-1, 1);
    for (auto& v : bv) v = rng.uniform(-1, 1);
    auto out = conv1d_same(tensor<double>(L, Cin, xv), tensor<double>(k * Cin, Cout, wv),
                           tensor<double>(1, Cout, bv), k);
    const int pad_left = (k - 1) / 2;
    for (int t = 0; t < L; ++t) {
        for (int co = 0; co < Cout; ++co) {
            double acc = bv[co];
            for (int dk = 0; dk < k; ++dk) {
                int r = t + dk - pad_left;
                if (r < 0 || r >= L) continue;
                for (int ci = 0; ci < Cin; ++ci)
                    acc += xv[r * Cin + ci] * wv[(dk * Cin + ci) * Cout + co];
            }
            CHECK(out.at(t, co) == Approx(acc));
        }
    }
}

TEST_CASE("conv1d_same: even k pads the extra column on the right") {
    // k=2 taps are [t, t+1]; the last row sees only the zero pad on the right
    auto x = tensor<double>(3, 1, {1, 2, 3});
    auto w = tensor<double>(2, 1, {10, 1});  // out[t] = 10*x[t] + x[t+1]
    auto b = tensor<double>(1, 1, {0});
    auto out = conv1d_same(x, w, b, 2);
    CHECK(out.val() == std::vector<double>{12, 23, 30});
}

TEST_CASE("maxpool_rows picks column maxima, ties to the lowest row") {
    auto a = tensor<double>(3, 2, {1, 5, 3, 5, 3, 2}, true);
    auto out = maxpool_rows(a);
    CHECK(out.val() == std::vector<double>{3, 5});
    sum_all(out).backward();
    // col 0: max 3 appears at rows 1 and 2 -> row 1 wins; col 1: rows 0 and 1 -> row 0
    CHECK(a.grad() == std::vector<double>{0, 1, 1, 0, 0, 0});
}

TEST_CASE("softmax_xent: uniform logits give ln K") {
    auto logits = tensor<double>(2, 4, std::vector<double>(8, 0.7));
    auto loss = softmax_xent(logits, {1, 3});
    CHECK(loss.val()[0] == Approx(std::log(4.0)));
}

TEST_CASE("softmax_xent: a huge margin drives the loss to zero") {
    auto logits = tensor<double>(1, 3, {100.0, 0.0, 0.0});
    auto loss = softmax_xent(logits, {0});
    CHECK(loss.val()[0] < 1e-8);
}

TEST_CASE("softmax_xent: padding rows are masked out of the mean") {
    auto logits = tensor<double>(2, 2, {3.0, 1.0, 50.0, 0.0});
    auto only_first = softmax_xent(logits, {0, -1});
    auto ref = softmax_xent(slice_rows(logits, 0, 1), {0});
    CHECK(only_first.val()[0] == Approx(ref.val()[0]));
    CHECK_THROWS_AS(softmax_xent(logits, {-1, -1}), TensorError);
}

TEST_CASE("dropout: eval mode is the identity, train mode scales") {
    Rng rng(4);
    auto a = tensor<double>(10, 10, std::vector<double>(100, 1.0));
    auto eval_out = dropout(a, 0.5, rng, false);
    CHECK(eval_out.val() == a.val());
    auto train_out = dropout(a, 0.5, rng, true);
    size_t zeros = 0;
    for (double v : train_out.val()) {
        if (v == 0.0) ++zeros;
        else CHECK(v == Approx(2.0));
    }
    CHECK(zeros > 20);
    CHECK(zeros < 80);
}

TEST_CASE("backward accumulates through shared subgraphs") {
    auto a = tensor<double>(1, 1, {3}, true);
    auto b = add(a, a);       // 6
    auto c = mul(b, a);       // 18, dc/da = 2a + b... d(2a*a)/da = 4a = 12
    c.backward();
    CHECK(c.val()[0] == Approx(18));
    CHECK(a.grad()[0] == Approx(12));
}
