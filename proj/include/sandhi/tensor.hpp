#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace sandhi::nn {

// Reverse-mode autodiff over dense 2D tensors. Every operation builds a node
// holding its value and a closure that scatters the incoming gradient to its
// parents; backward() walks the graph once in reverse topological order.
// Granularity is one node per tensor op, so graphs stay small enough to build
// per sentence during training.

struct TensorError : std::logic_error {
    using std::logic_error::logic_error;
};

inline void check(bool cond, const char* msg) {
    if (!cond) throw TensorError(msg);
}

template <class T>
struct Node {
    int rows = 0, cols = 0;
    std::vector<T> val;
    std::vector<T> grad;  // allocated on demand during backward
    std::vector<std::shared_ptr<Node<T>>> parents;
    std::function<void(Node<T>&)> backprop;
    bool needs_grad = false;

    size_t size() const { return val.size(); }
    void ensure_grad() {
        if (grad.size() != val.size()) grad.assign(val.size(), T(0));
    }
    void zero_grad() { grad.assign(val.size(), T(0)); }
};

template <class T>
class Var {
public:
    Var() = default;
    explicit Var(std::shared_ptr<Node<T>> n) : n_(std::move(n)) {}

    static Var leaf(int rows, int cols, bool needs_grad = false) {
        auto n = std::make_shared<Node<T>>();
        n->rows = rows;
        n->cols = cols;
        n->val.assign(static_cast<size_t>(rows) * cols, T(0));
        n->needs_grad = needs_grad;
        if (needs_grad) n->ensure_grad();
        return Var(std::move(n));
    }

    bool defined() const { return static_cast<bool>(n_); }
    int rows() const { return n_->rows; }
    int cols() const { return n_->cols; }
    size_t size() const { return n_->size(); }
    bool needs_grad() const { return n_->needs_grad; }

    std::vector<T>& val() { return n_->val; }
    const std::vector<T>& val() const { return n_->val; }
    std::vector<T>& grad() {
        n_->ensure_grad();
        return n_->grad;
    }
    const std::vector<T>& grad() const { return n_->grad; }

    T& at(int r, int c) { return n_->val[static_cast<size_t>(r) * n_->cols + c]; }
    T at(int r, int c) const { return n_->val[static_cast<size_t>(r) * n_->cols + c]; }

    std::shared_ptr<Node<T>> node() const { return n_; }

    // Reverse pass from a scalar. Children run before parents; gradients
    // accumulate, so zero parameter grads between steps. By default the graph
    // is dismantled afterwards (values and leaf gradients stay valid), which
    // keeps teardown iterative no matter how deep the recurrence was; pass
    // false to keep the graph for a second pass.
    void backward(bool release = true) const {
        check(n_ && n_->size() == 1, "backward() requires a scalar root");
        std::vector<Node<T>*> order;
        std::unordered_set<Node<T>*> visited;
        std::vector<std::pair<Node<T>*, size_t>> stack;
        visited.insert(n_.get());
        stack.push_back({n_.get(), 0});
        while (!stack.empty()) {
            Node<T>* node = stack.back().first;
            size_t& idx = stack.back().second;
            if (idx < node->parents.size()) {
                Node<T>* p = node->parents[idx++].get();
                if (p->needs_grad && visited.insert(p).second) stack.push_back({p, 0});
            } else {
                order.push_back(node);
                stack.pop_back();
            }
        }
        n_->ensure_grad();
        n_->grad[0] = T(1);
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            Node<T>* node = *it;
            if (!node->backprop) continue;
            for (auto& p : node->parents)
                if (p->needs_grad) p->ensure_grad();
            node->backprop(*node);
        }
        if (release) release_graph();
    }

    // Severs all parent links reachable from this node so that no deep
    // shared_ptr chain is destroyed recursively. Node values survive.
    void release_graph() const {
        if (!n_) return;
        std::vector<std::shared_ptr<Node<T>>> pending{n_};
        std::unordered_set<Node<T>*> seen{n_.get()};
        while (!pending.empty()) {
            std::shared_ptr<Node<T>> node = std::move(pending.back());
            pending.pop_back();
            for (auto& p : node->parents)
                if (seen.insert(p.get()).second) pending.push_back(p);
            node->parents.clear();
            node->backprop = nullptr;
        }
    }

private:
    std::shared_ptr<Node<T>> n_;
};

namespace detail {

template <class T>
std::shared_ptr<Node<T>> make_node(int rows, int cols, std::vector<std::shared_ptr<Node<T>>> parents) {
    auto n = std::make_shared<Node<T>>();
    n->rows = rows;
    n->cols = cols;
    n->val.resize(static_cast<size_t>(rows) * cols);
    for (auto& p : parents) n->needs_grad = n->needs_grad || p->needs_grad;
    n->parents = std::move(parents);
    return n;
}

}  // namespace detail

template <class T>
Var<T> tensor(int rows, int cols, std::vector<T> values, bool needs_grad = false) {
    check(values.size() == static_cast<size_t>(rows) * cols, "tensor: value count != rows*cols");
    Var<T> v = Var<T>::leaf(rows, cols, needs_grad);
    v.val() = std::move(values);
    return v;
}

// C[M×N] = A[M×K] · B[K×N]
template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
    check(a.cols() == b.rows(), "matmul: inner dimensions differ");
    const int M = a.rows(), K = a.cols(), N = b.cols();
    auto n = detail::make_node<T>(M, N, {a.node(), b.node()});
    {
        const T* av = a.val().data();
        const T* bv = b.val().data();
        T* cv = n->val.data();
        std::fill(n->val.begin(), n->val.end(), T(0));
        for (int i = 0; i < M; ++i)
            for (int k = 0; k < K; ++k) {
                const T s = av[i * K + k];
                if (s == T(0)) continue;
                const T* brow = bv + static_cast<size_t>(k) * N;
                T* crow = cv + static_cast<size_t>(i) * N;
                for (int j = 0; j < N; ++j) crow[j] += s * brow[j];
            }
    }
    if (n->needs_grad) {
        n->backprop = [M, K, N](Node<T>& self) {
            Node<T>& A = *self.parents[0];
            Node<T>& B = *self.parents[1];
            const T* g = self.grad.data();
            if (A.needs_grad) {
                T* da = A.grad.data();
                const T* bv = B.val.data();
                for (int i = 0; i < M; ++i)
                    for (int k = 0; k < K; ++k) {
                        const T* grow = g + static_cast<size_t>(i) * N;
                        const T* brow = bv + static_cast<size_t>(k) * N;
                        T acc = T(0);
                        for (int j = 0; j < N; ++j) acc += grow[j] * brow[j];
                        da[i * K + k] += acc;
                    }
            }
            if (B.needs_grad) {
                T* db = B.grad.data();
                const T* av = A.val.data();
                for (int i = 0; i < M; ++i)
                    for (int k = 0; k < K; ++k) {
                        const T s = av[i * K + k];
                        if (s == T(0)) continue;
                        const T* grow = g + static_cast<size_t>(i) * N;
                        T* brow = db + static_cast<size_t>(k) * N;
                        for (int j = 0; j < N; ++j) brow[j] += s * grow[j];
                    }
            }
        };
    }
    return Var<T>(std::move(n));
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    check(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
    auto n = detail::make_node<T>(a.rows(), a.cols(), {a.node(), b.node()});
    for (size_t i = 0; i < n->size(); ++i) n->val[i] = a.val()[i] + b.val()[i];
    if (n->needs_grad) {
        n->backprop = [](Node<T>& self) {
            for (auto& p : self.parents) {
                if (!p->needs_grad) continue;
                for (size_t i = 0; i < self.size(); ++i) p->grad[i] += self.grad[i];
            }
        };
    }
    return Var<T>(std::move(n));
}

// a[M×N] + row[1×N] broadcast over rows
template <class T>
Var<T> add_rowvec(const Var<T>& a, const Var<T>& row) {
    check(row.rows() == 1 && row.cols() == a.cols(), "add_rowvec: bad row vector");
    auto n = detail::make_node<T>(a.rows(), a.cols(), {a.node(), row.node()});
    const int N = a.cols();
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < N; ++j)
            n->val[static_cast<size_t>(i) * N + j] = a.val()[static_cast<size_t>(i) * N + j] + row.val()[j];
    if (n->needs_grad) {
        n->backprop = [N](Node<T>& self) {
            Node<T>& A = *self.parents[0];
            Node<T>& R = *self.parents[1];
            if (A.needs_grad)
                for (size_t i = 0; i < self.size(); ++i) A.grad[i] += self.grad[i];
            if (R.needs_grad)
                for (int i = 0; i < self.rows; ++i)
                    for (int j = 0; j < N; ++j) R.grad[j] += self.grad[static_cast<size_t>(i) * N + j];
        };
    }
    return Var<T>(std::move(n));
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    check(a.rows() == b.rows() && a.cols() == b.cols(), "mul: shape mismatch");
    auto n = detail::make_node<T>(a.rows(), a.cols(), {a.node(), b.node()});
    for (size_t i = 0; i < n->size(); ++i) n->val[i] = a.val()[i] * b.val()[i];
    if (n->needs_grad) {
        n->backprop = [](Node<T>& self) {
            Node<T>& A = *self.parents[0];
            Node<T>& B = *self.parents[1];
            if (A.needs_grad)
                for (size_t i = 0; i < self.size(); ++i) A.grad[i] += self.grad[i] * B.val[i];
            if (B.needs_grad)
                for (size_t i = 0; i < self.size(); ++i) B.grad[i] += self.grad[i] * A.val[i];
        };
    }
    return Var<T>(std::move(n));
}

template <class T>
Var<T> scale(const Var<T>& a, T s) {
    auto n = detail::make_node<T>(a.rows(), a.cols(), {a.node()});
    for (size_t i = 0; i < n->size(); ++i) n->val[i] = a.val()[i] * s;
    if (n->needs_grad) {
        n->backprop = [s](Node<T>& self) {
            Node<T>& A = *self.parents[0];
            for (size_t i = 0; i < self.size(); ++i) A.grad[i] += self.grad[i] * s;
        };
    }
    return Var<T>(std::move(n));
}

template <class T>
Var<T> relu(const Var<T>& a) {
    auto n = detail::make_node<T>(a.rows(), a.cols(), {a.node()});
    for (size_t i = 0; i < n->size(); ++i) n->val[i] = a.val()[i] > T(0) ? a.val()[i] : T(0);
    if (n->needs_grad) {
        n->backprop = [](Node<T>& self) {
            Node<T>& A = *self.parents[0];
            for (size_t i = 0; i < self.size(); ++i)
                if (self.val[i] > T(0)) A.grad[i] += self.grad[i];
        };
    }
    return Var<T>(std::move(n));
}

template <class T>
Var<T> sigmoid(const Var<T>& a) {
    auto n = detail::make_node<T>(a.rows(), a.cols(), {a.node()});
    for (size_t i = 0; i < n->size(); ++i) n->val[i] = T(1) / (T(1) + std::exp(-a.val()[i]));
    if (n->needs_grad) {
        n->backprop = [](Node<T>& self) {
            Node<T>& A = *self.parents[0];
            for (size_t i = 0; i < self.size(); ++i) {
                const T y = self.val[i];
                A.grad[i] += self.grad[i] * y * (T(1) - y);
            }
        };
    }
    return Var<T>(std::move(n));
}

template <class T>
Var<T> tanh_(const Var<T>& a) {
    auto n = detail::make_node<T>(a.rows(), a.cols(), {a.node()});
    for (size_t i = 0; i < n->size(); ++i) n->val[i] = std::tanh(a.val()[i]);
    if (n->needs_grad) {
        n->backprop = [](Node<T>& self) {
            Node<T>& A = *self.parents[0];
            for (size_t i = 0; i < self.size(); ++i) {
                const T y = self.val[i];
                A.grad[i] += self.grad[i] * (T(1) - y * y);
            }
        };
    }
    return Var<T>(std::move(n));
}

template <class T>
Var<T> slice_rows(const Var<T>& a, int r0, int r1) {
    check(0 <= r0 && r0 <= r1 && r1 <= a.rows(), "slice_rows: bad range");
    const int N = a.cols();
    auto n = detail::make_node<T>(r1 - r0, N, {a.node()});
    std::copy(a.val().begin() + static_cast<size_t>(r0) * N,
              a.val().begin() + static_cast<size_t>(r1) * N, n->val.begin());
    if (n->needs_grad) {
        n->backprop = [r0, N](Node<T>& self) {
            Node<T>& A = *self.parents[0];
            T* dst = A.grad.data() + static_cast<size_t>(r0) * N;
            for (size_t i = 0; i < self.size(); ++i) dst[i] += self.grad[i];
        };
    }
    return Var<T>(std::move(n));
}

template <class T>
Var<T> slice_cols(const Var<T>& a, int c0, int c1) {
    check(0 <= c0 && c0 <= c1 && c1 <= a.cols(), "slice_cols: bad range");
    const int N = a.cols(), W = c1 - c0;
    auto n = detail::make_node<T>(a.rows(), W, {a.node()});
    for (int i = 0; i < a.rows(); ++i)
        std::copy(a.val().begin() + static_cast<size_t>(i) * N + c0,
                  a.val().begin() + static_cast<size_t>(i) * N + c1,
                  n->val.begin() + static_cast<size_t>(i) * W);
    if (n->needs_grad) {
        n->backprop = [c0, N, W](Node<T>& self) {
            Node<T>& A = *self.parents[0];
            for (int i = 0; i < self.rows; ++i)
                for (int j = 0; j < W; ++j)
                    A.grad[static_cast<size_t>(i) * N + c0 + j] +=
                        self.grad[static_cast<size_t>(i) * W + j];
        };
    }
    return Var<T>(std::move(n));
}

template <class T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
    check(!parts.empty(), "concat_rows: empty input");
    const int N = parts[0].cols();
    int rows = 0;
    std::vector<std::shared_ptr<Node<T>>> parents;
    for (const auto& p : parts) {
        check(p.cols() == N, "concat_rows: column mismatch");
        rows += p.rows();
        parents.push_back(p.node());
    }
    auto n = detail::make_node<T>(rows, N, std::move(parents));
    size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p.val().begin(), p.val().end(), n->val.begin() + off);
        off += p.size();
    }
    if (n->needs_grad) {
        n->backprop = [](Node<T>& self) {
            size_t off = 0;
            for (auto& p : self.parents) {
                if (p->needs_grad)
                    for (size_t i = 0; i < p->size(); ++i) p->grad[i] += self.grad[off + i];
                off += p->size();
            }
        };
    }
    return Var<T>(std::move(n));
}

template <class T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
    check(!parts.empty(), "concat_cols: empty input");
    const int M = parts[0].rows();
    int cols = 0;
    std::vector<std::shared_ptr<Node<T>>> parents;
    for (const auto& p : parts) {
        check(p.rows() == M, "concat_cols: row mismatch");
        cols += p.cols();
        parents.push_back(p.node());
    }
    auto n = detail::make_node<T>(M, cols, std::move(parents));
    int c0 = 0;
    for (const auto& p : parts) {
        for (int i = 0; i < M; ++i)
            std::copy(p.val().begin() + static_cast<size_t>(i) * p.cols(),
                      p.val().begin() + static_cast<size_t>(i + 1) * p.cols(),
                      n->val.begin() + static_cast<size_t>(i) * cols + c0);
        c0 += p.cols();
    }
    if (n->needs_grad) {
        n->backprop = [cols, M](Node<T>& self) {
            int c0 = 0;
            for (auto& p : self.parents) {
                const int W = p->cols;
                if (p->needs_grad)
                    for (int i = 0; i < M; ++i)
                        for (int j = 0; j < W; ++j)
                            p->grad[static_cast<size_t>(i) * W + j] +=
                                self.grad[static_cast<size_t>(i) * cols + c0 + j];
                c0 += W;
            }
        };
    }
    return Var<T>(std::move(n));
}

// Feature-wise max over rows; gradient flows to the first (lowest-index)
// maximum of each column.
template <class T>
Var<T> maxpool_rows(const Var<T>& a) {
    check(a.rows() >= 1, "maxpool_rows: empty input");
    const int M = a.rows(), N = a.cols();
    auto n = detail::make_node<T>(1, N, {a.node()});
    std::vector<int> arg(N, 0);
    for (int j = 0; j < N; ++j) {
        T best = a.val()[j];
        int bi = 0;
        for (int i = 1; i < M; ++i) {
            const T v = a.val()[static_cast<size_t>(i) * N + j];
            if (v > best) {
                best = v;
                bi = i;
            }
        }
        n->val[j] = best;
        arg[j] = bi;
    }
    if (n->needs_grad) {
        n->backprop = [arg = std::move(arg), N](Node<T>& self) {
            Node<T>& A = *self.parents[0];
            for (int j = 0; j < N; ++j)
                A.grad[static_cast<size_t>(arg[j]) * N + j] += self.grad[j];
        };
    }
    return Var<T>(std::move(n));
}

// Embedding lookup; `pad_id` rows come out zero and route no gradient.
template <class T>
Var<T> embed(const Var<T>& table, const std::vector<int>& ids, int pad_id = 0) {
    const int V = table.rows(), E = table.cols();
    auto n = detail::make_node<T>(static_cast<int>(ids.size()), E, {table.node()});
    for (size_t t = 0; t < ids.size(); ++t) {
        check(ids[t] >= 0 && ids[t] < V, "embed: id out of range");
        if (ids[t] == pad_id) {
            std::fill_n(n->val.begin() + t * E, E, T(0));
        } else {
            std::copy(table.val().begin() + static_cast<size_t>(ids[t]) * E,
                      table.val().begin() + static_cast<size_t>(ids[t] + 1) * E,
                      n->val.begin() + t * E);
        }
    }
    if (n->needs_grad) {
        n->backprop = [ids, pad_id, E](Node<T>& self) {
            Node<T>& tab = *self.parents[0];
            for (size_t t = 0; t < ids.size(); ++t) {
                if (ids[t] == pad_id) continue;
                T* dst = tab.grad.data() + static_cast<size_t>(ids[t]) * E;
                const T* src = self.grad.data() + t * E;
                for (int j = 0; j < E; ++j) dst[j] += src[j];
            }
        };
    }
    return Var<T>(std::move(n));
}

// Same-length 1D convolution over rows. `w` is [k*Cin × Cout] with the tap
// index varying slowest; zero padding splits left/right with the extra column
// of padding on the right for even k.
template <class T>
Var<T> conv1d_same(const Var<T>& x, const Var<T>& w, const Var<T>& b, int k) {
    check(k >= 1 && w.rows() == k * x.cols(), "conv1d_same: weight shape mismatch");
    check(b.rows() == 1 && b.cols() == w.cols(), "conv1d_same: bias shape mismatch");
    const int L = x.rows(), Cin = x.cols(), Cout = w.cols();
    const int pad_left = (k - 1) / 2;
    auto n = detail::make_node<T>(L, Cout, {x.node(), w.node(), b.node()});
    for (int t = 0; t < L; ++t)
        std::copy(b.val().begin(), b.val().end(), n->val.begin() + static_cast<size_t>(t) * Cout);
    {
        const T* xv = x.val().data();
        const T* wv = w.val().data();
        T* ov = n->val.data();
        for (int t = 0; t < L; ++t) {
            T* orow = ov + static_cast<size_t>(t) * Cout;
            for (int dk = 0; dk < k; ++dk) {
                const int r = t + dk - pad_left;
                if (r < 0 || r >= L) continue;
                const T* xrow = xv + static_cast<size_t>(r) * Cin;
                const T* wrow = wv + static_cast<size_t>(dk) * Cin * Cout;
                for (int ci = 0; ci < Cin; ++ci) {
                    const T s = xrow[ci];
                    if (s == T(0)) continue;
                    const T* wr = wrow + static_cast<size_t>(ci) * Cout;
                    for (int co = 0; co < Cout; ++co) orow[co] += s * wr[co];
                }
            }
        }
    }
    if (n->needs_grad) {
        n->backprop = [k, L, Cin, Cout, pad_left](Node<T>& self) {
            Node<T>& X = *self.parents[0];
            Node<T>& W = *self.parents[1];
            Node<T>& B = *self.parents[2];
            const T* g = self.grad.data();
            if (B.needs_grad) {
                for (int t = 0; t < L; ++t)
                    for (int co = 0; co < Cout; ++co)
                        B.grad[co] += g[static_cast<size_t>(t) * Cout + co];
            }
            for (int t = 0; t < L; ++t) {
                const T* grow = g + static_cast<size_t>(t) * Cout;
                for (int dk = 0; dk < k; ++dk) {
                    const int r = t + dk - pad_left;
                    if (r < 0 || r >= L) continue;
                    for (int ci = 0; ci < Cin; ++ci) {
                        const T xval = X.val[static_cast<size_t>(r) * Cin + ci];
                        const T* wr = W.val.data() + (static_cast<size_t>(dk) * Cin + ci) * Cout;
                        if (W.needs_grad && xval != T(0)) {
                            T* dw = W.grad.data() + (static_cast<size_t>(dk) * Cin + ci) * Cout;
                            for (int co = 0; co < Cout; ++co) dw[co] += xval * grow[co];
                        }
                        if (X.needs_grad) {
                            T acc = T(0);
                            for (int co = 0; co < Cout; ++co) acc += wr[co] * grow[co];
                            X.grad[static_cast<size_t>(r) * Cin + ci] += acc;
                        }
                    }
                }
            }
        };
    }
    return Var<T>(std::move(n));
}

// Inverted dropout: training mode keeps each element with probability 1-p and
// scales by 1/(1-p); eval mode is the identity.
template <class T, class RngT>
Var<T> dropout(const Var<T>& a, double p, RngT& rng, bool train) {
    check(p >= 0.0 && p < 1.0, "dropout: p must be in [0, 1)");
    if (!train || p == 0.0) return a;
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    std::vector<T> mask(a.size());
    for (size_t i = 0; i < mask.size(); ++i)
        mask[i] = rng.uniform() < p ? T(0) : keep_scale;
    auto n = detail::make_node<T>(a.rows(), a.cols(), {a.node()});
    for (size_t i = 0; i < n->size(); ++i) n->val[i] = a.val()[i] * mask[i];
    if (n->needs_grad) {
        n->backprop = [mask = std::move(mask)](Node<T>& self) {
            Node<T>& A = *self.parents[0];
            for (size_t i = 0; i < self.size(); ++i) A.grad[i] += self.grad[i] * mask[i];
        };
    }
    return Var<T>(std::move(n));
}

template <class T>
Var<T> sum_all(const Var<T>& a) {
    auto n = detail::make_node<T>(1, 1, {a.node()});
    T acc = T(0);
    for (const T v : a.val()) acc += v;
    n->val[0] = acc;
    if (n->needs_grad) {
        n->backprop = [](Node<T>& self) {
            Node<T>& A = *self.parents[0];
            const T g = self.grad[0];
            for (size_t i = 0; i < A.size(); ++i) A.grad[i] += g;
        };
    }
    return Var<T>(std::move(n));
}

// Mean negative log-likelihood over rows whose target is >= 0; rows with a
// negative target (padding) contribute nothing. Throws if every row is
// padding.
template <class T>
Var<T> softmax_xent(const Var<T>& logits, const std::vector<int>& targets) {
    check(static_cast<size_t>(logits.rows()) == targets.size(), "softmax_xent: target count mismatch");
    const int N = logits.rows(), K = logits.cols();
    int live = 0;
    double loss = 0.0;
    for (int i = 0; i < N; ++i) {
        if (targets[i] < 0) continue;
        check(targets[i] < K, "softmax_xent: target out of range");
        const T* row = logits.val().data() + static_cast<size_t>(i) * K;
        T mx = row[0];
        for (int j = 1; j < K; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < K; ++j) sum += std::exp(static_cast<double>(row[j] - mx));
        loss += std::log(sum) - static_cast<double>(row[targets[i]] - mx);
        ++live;
    }
    check(live > 0, "softmax_xent: all targets are padding");
    auto n = detail::make_node<T>(1, 1, {logits.node()});
    n->val[0] = static_cast<T>(loss / live);
    if (n->needs_grad) {
        n->backprop = [targets, live, N, K](Node<T>& self) {
            Node<T>& L = *self.parents[0];
            const T g = self.grad[0] / static_cast<T>(live);
            for (int i = 0; i < N; ++i) {
                if (targets[i] < 0) continue;
                const T* row = L.val.data() + static_cast<size_t>(i) * K;
                T* grow = L.grad.data() + static_cast<size_t>(i) * K;
                T mx = row[0];
                for (int j = 1; j < K; ++j) mx = std::max(mx, row[j]);
                double sum = 0.0;
                for (int j = 0; j < K; ++j) sum += std::exp(static_cast<double>(row[j] - mx));
                for (int j = 0; j < K; ++j) {
                    const T p = static_cast<T>(std::exp(static_cast<double>(row[j] - mx)) / sum);
                    grow[j] += g * (p - (j == targets[i] ? T(1) : T(0)));
                }
            }
        };
    }
    return Var<T>(std::move(n));
}

}  // namespace sandhi::nn
