#include "ggrx/autodiff.hpp"

#include "ggrx/error.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace ggrx {

namespace {

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
    throw Error(std::string(op) + ": incompatible shapes " + std::to_string(a.rows) + "x" +
                std::to_string(a.cols) + " and " + std::to_string(b.rows) + "x" +
                std::to_string(b.cols));
}

void axpy(double* y, double a, const double* x, int n) {
    for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

} // namespace

Var Var::make(Tensor val, std::vector<Var> parents, std::function<void(AdNode&)> backprop) {
    Var v;
    v.node_ = std::make_shared<AdNode>();
    v.node_->grad = Tensor::zeros(val.rows, val.cols);
    v.node_->val = std::move(val);
    for (const auto& p : parents)
        if (p.requires_grad()) v.node_->requires_grad = true;
    v.node_->parents = std::move(parents);
    if (v.node_->requires_grad) v.node_->backprop = std::move(backprop);
    return v;
}

Var Var::constant(Tensor t) {
    return make(std::move(t), {}, nullptr);
}

Var Var::parameter(Tensor t) {
    Var v = make(std::move(t), {}, nullptr);
    v.node_->requires_grad = true;
    return v;
}

Var matmul(const Var& a, const Var& b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (A.cols != B.rows) shape_fail("matmul", A, B);
    Tensor C(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i) {
        double* ci = C.row(i);
        const double* ai = A.row(i);
        for (int l = 0; l < A.cols; ++l) {
            if (ai[l] != 0.0) axpy(ci, ai[l], B.row(l), B.cols);
        }
    }
    return Var::make(std::move(C), {a, b}, [](AdNode& n) {
        Var a = n.parents[0], b = n.parents[1];
        const Tensor& A = a.value();
        const Tensor& B = b.value();
        const Tensor& G = n.grad;
        if (a.requires_grad()) {
            // dA = G B^T
            Tensor& dA = a.grad();
            for (int i = 0; i < A.rows; ++i) {
                const double* gi = G.row(i);
                double* dai = dA.row(i);
                for (int l = 0; l < A.cols; ++l) {
                    const double* bl = B.row(l);
                    double acc = 0.0;
                    for (int j = 0; j < B.cols; ++j) acc += gi[j] * bl[j];
                    dai[l] += acc;
                }
            }
        }
        if (b.requires_grad()) {
            // dB = A^T G
            Tensor& dB = b.grad();
            for (int i = 0; i < A.rows; ++i) {
                const double* ai = A.row(i);
                const double* gi = G.row(i);
                for (int l = 0; l < A.cols; ++l) {
                    if (ai[l] != 0.0) axpy(dB.row(l), ai[l], gi, B.cols);
                }
            }
        }
    });
}

Var add(const Var& a, const Var& b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (!A.same_shape(B)) shape_fail("add", A, B);
    Tensor C = A;
    for (size_t i = 0; i < C.size(); ++i) C.v[i] += B.v[i];
    return Var::make(std::move(C), {a, b}, [](AdNode& n) {
        for (int k = 0; k < 2; ++k) {
            Var p = n.parents[k];
            if (!p.requires_grad()) continue;
            Tensor& d = p.grad();
            for (size_t i = 0; i < d.size(); ++i) d.v[i] += n.grad.v[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    const Tensor& A = a.value();
    const Tensor& B = b.value();
    if (!A.same_shape(B)) shape_fail("mul", A, B);
    Tensor C = A;
    for (size_t i = 0; i < C.size(); ++i) C.v[i] *= B.v[i];
    return Var::make(std::move(C), {a, b}, [](AdNode& n) {
        Var a = n.parents[0], b = n.parents[1];
        if (a.requires_grad()) {
            Tensor& d = a.grad();
            for (size_t i = 0; i < d.size(); ++i) d.v[i] += n.grad.v[i] * b.value().v[i];
        }
        if (b.requires_grad()) {
            Tensor& d = b.grad();
            for (size_t i = 0; i < d.size(); ++i) d.v[i] += n.grad.v[i] * a.value().v[i];
        }
    });
}

Var add_col(const Var& a, const Var& bias) {
    const Tensor& A = a.value();
    const Tensor& B = bias.value();
    if (B.rows != A.rows || B.cols != 1) shape_fail("add_col", A, B);
    Tensor C = A;
    for (int i = 0; i < C.rows; ++i) {
        double bi = B.at(i, 0);
        double* ci = C.row(i);
        for (int j = 0; j < C.cols; ++j) ci[j] += bi;
    }
    return Var::make(std::move(C), {a, bias}, [](AdNode& n) {
        Var a = n.parents[0], bias = n.parents[1];
        if (a.requires_grad()) {
            Tensor& d = a.grad();
            for (size_t i = 0; i < d.size(); ++i) d.v[i] += n.grad.v[i];
        }
        if (bias.requires_grad()) {
            Tensor& d = bias.grad();
            for (int i = 0; i < n.grad.rows; ++i) {
                const double* gi = n.grad.row(i);
                double acc = 0.0;
                for (int j = 0; j < n.grad.cols; ++j) acc += gi[j];
                d.at(i, 0) += acc;
            }
        }
    });
}

Var scale(const Var& a, double s) {
    Tensor C = a.value();
    for (double& x : C.v) x *= s;
    return Var::make(std::move(C), {a}, [s](AdNode& n) {
        Tensor& d = n.parents[0].grad();
        for (size_t i = 0; i < d.size(); ++i) d.v[i] += s * n.grad.v[i];
    });
}

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

} // namespace

Var sigmoid(const Var& a) {
    Tensor C = a.value();
    for (double& x : C.v) x = stable_sigmoid(x);
    return Var::make(std::move(C), {a}, [](AdNode& n) {
        Tensor& d = n.parents[0].grad();
        for (size_t i = 0; i < d.size(); ++i) {
            double y = n.val.v[i];
            d.v[i] += n.grad.v[i] * y * (1.0 - y);
        }
    });
}

Var tanh_op(const Var& a) {
    Tensor C = a.value();
    for (double& x : C.v) x = std::tanh(x);
    return Var::make(std::move(C), {a}, [](AdNode& n) {
        Tensor& d = n.parents[0].grad();
        for (size_t i = 0; i < d.size(); ++i) {
            double y = n.val.v[i];
            d.v[i] += n.grad.v[i] * (1.0 - y * y);
        }
    });
}

Var relu(const Var& a) {
    Tensor C = a.value();
    for (double& x : C.v) x = x > 0.0 ? x : 0.0;
    return Var::make(std::move(C), {a}, [](AdNode& n) {
        Tensor& d = n.parents[0].grad();
        const Tensor& x = n.parents[0].value();
        for (size_t i = 0; i < d.size(); ++i) {
            if (x.v[i] > 0.0) d.v[i] += n.grad.v[i];
        }
    });
}

Var slice_rows(const Var& a, int first, int count) {
    const Tensor& A = a.value();
    if (first < 0 || count < 0 || first + count > A.rows)
        throw Error("slice_rows: range [" + std::to_string(first) + ", " +
                    std::to_string(first + count) + ") outside " + std::to_string(A.rows) +
                    " rows");
    Tensor C(count, A.cols);
    for (int i = 0; i < count; ++i)
        std::copy(A.row(first + i), A.row(first + i) + A.cols, C.row(i));
    return Var::make(std::move(C), {a}, [first, count](AdNode& n) {
        Tensor& d = n.parents[0].grad();
        for (int i = 0; i < count; ++i) axpy(d.row(first + i), 1.0, n.grad.row(i), n.grad.cols);
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw Error("concat_rows: no inputs");
    int cols = parts[0].value().cols;
    int rows = 0;
    for (const auto& p : parts) {
        if (p.value().cols != cols) shape_fail("concat_rows", parts[0].value(), p.value());
        rows += p.value().rows;
    }
    Tensor C(rows, cols);
    int at = 0;
    for (const auto& p : parts) {
        const Tensor& A = p.value();
        std::copy(A.v.begin(), A.v.end(), C.row(at));
        at += A.rows;
    }
    return Var::make(std::move(C), parts, [](AdNode& n) {
        int at = 0;
        for (auto& p : n.parents) {
            int r = p.value().rows;
            if (p.requires_grad()) {
                Tensor& d = p.grad();
                for (int i = 0; i < r; ++i) axpy(d.row(i), 1.0, n.grad.row(at + i), d.cols);
            }
            at += r;
        }
    });
}

Var softmax_cols(const Var& a) {
    Tensor C = a.value();
    for (int j = 0; j < C.cols; ++j) {
        double mx = C.at(0, j);
        for (int i = 1; i < C.rows; ++i) mx = std::max(mx, C.at(i, j));
        double total = 0.0;
        for (int i = 0; i < C.rows; ++i) {
            double e = std::exp(C.at(i, j) - mx);
            C.at(i, j) = e;
            total += e;
        }
        for (int i = 0; i < C.rows; ++i) C.at(i, j) /= total;
    }
    return Var::make(std::move(C), {a}, [](AdNode& n) {
        // dz_i = p_i (g_i - sum_k p_k g_k), per column
        Tensor& d = n.parents[0].grad();
        for (int j = 0; j < n.val.cols; ++j) {
            double dot = 0.0;
            for (int i = 0; i < n.val.rows; ++i) dot += n.val.at(i, j) * n.grad.at(i, j);
            for (int i = 0; i < n.val.rows; ++i)
                d.at(i, j) += n.val.at(i, j) * (n.grad.at(i, j) - dot);
        }
    });
}

Var select_sum_cols(const Var& w, const std::vector<std::vector<int>>& cols) {
    const Tensor& W = w.value();
    Tensor C(W.rows, static_cast<int>(cols.size()));
    for (size_t b = 0; b < cols.size(); ++b) {
        for (int c : cols[b]) {
            if (c < 0 || c >= W.cols)
                throw Error("select_sum_cols: column " + std::to_string(c) + " outside " +
                            std::to_string(W.cols));
            for (int i = 0; i < W.rows; ++i) C.at(i, static_cast<int>(b)) += W.at(i, c);
        }
    }
    return Var::make(std::move(C), {w}, [cols](AdNode& n) {
        Tensor& dW = n.parents[0].grad();
        for (size_t b = 0; b < cols.size(); ++b) {
            for (int c : cols[b]) {
                for (int i = 0; i < dW.rows; ++i) dW.at(i, c) += n.grad.at(i, static_cast<int>(b));
            }
        }
    });
}

Var dropout(const Var& a, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw Error("dropout: rate outside [0, 1)");
    if (rate == 0.0) return a;
    double keep = 1.0 - rate;
    Tensor C = a.value();
    std::vector<char> mask(C.size());
    for (size_t i = 0; i < C.size(); ++i) {
        mask[i] = rng.uniform() >= rate;
        C.v[i] = mask[i] ? C.v[i] / keep : 0.0;
    }
    return Var::make(std::move(C), {a}, [mask, keep](AdNode& n) {
        Tensor& d = n.parents[0].grad();
        for (size_t i = 0; i < d.size(); ++i) {
            if (mask[i]) d.v[i] += n.grad.v[i] / keep;
        }
    });
}

Var linear(const Var& w, const Var& bias, const Var& x) {
    return add_col(matmul(w, x), bias);
}

Tensor one_hot(int index, int width) {
    if (index < 0 || index >= width)
        throw Error("one_hot: index " + std::to_string(index) + " outside width " +
                    std::to_string(width));
    Tensor t(width, 1);
    t.at(index, 0) = 1.0;
    return t;
}

Var bce_loss(const Var& pred, const Tensor& target, const std::vector<double>& col_weight) {
    const Tensor& P = pred.value();
    if (!P.same_shape(target)) shape_fail("bce_loss", P, target);
    if (static_cast<int>(col_weight.size()) != P.cols)
        throw Error("bce_loss: " + std::to_string(col_weight.size()) + " column weights for " +
                    std::to_string(P.cols) + " columns");
    constexpr double kEps = 1e-12;
    double total = 0.0;
    for (int i = 0; i < P.rows; ++i) {
        const double* pi = P.row(i);
        const double* ti = target.row(i);
        for (int j = 0; j < P.cols; ++j) {
            double p = std::clamp(pi[j], kEps, 1.0 - kEps);
            total -= col_weight[j] * (ti[j] * std::log(p) + (1.0 - ti[j]) * std::log(1.0 - p));
        }
    }
    Tensor C(1, 1);
    C.at(0, 0) = total;
    return Var::make(std::move(C), {pred}, [target, col_weight](AdNode& n) {
        constexpr double kEps = 1e-12;
        Tensor& d = n.parents[0].grad();
        const Tensor& P = n.parents[0].value();
        double g = n.grad.at(0, 0);
        for (int i = 0; i < P.rows; ++i) {
            const double* pi = P.row(i);
            const double* ti = target.row(i);
            double* di = d.row(i);
            for (int j = 0; j < P.cols; ++j) {
                double p = pi[j];
                if (p <= kEps || p >= 1.0 - kEps) continue; // clamped flat region
                di[j] += g * col_weight[j] * (-ti[j] / p + (1.0 - ti[j]) / (1.0 - p));
            }
        }
    });
}

void backward(const Var& loss) {
    if (!loss.defined() || loss.value().rows != 1 || loss.value().cols != 1)
        throw Error("backward: loss must be a defined 1x1 value");
    if (!loss.requires_grad()) return;

    // Iterative post-order topological sort over the reachable graph.
    std::vector<AdNode*> order;
    std::unordered_set<AdNode*> done;
    std::vector<std::pair<Var, size_t>> stack{{loss, 0}};
    while (!stack.empty()) {
        auto [var, next] = stack.back();
        AdNode* node = var.node();
        if (done.count(node)) {
            stack.pop_back();
            continue;
        }
        bool descended = false;
        while (next < node->parents.size()) {
            Var p = node->parents[next++];
            if (p.requires_grad() && !done.count(p.node())) {
                stack.back().second = next;
                stack.push_back({p, 0});
                descended = true;
                break;
            }
        }
        if (descended) continue;
        done.insert(node);
        order.push_back(node);
        stack.pop_back();
    }

    loss.node()->grad.at(0, 0) = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backprop) (*it)->backprop(**it);
    }
}

void zero_grad(std::vector<Var>& params) {
    for (auto& p : params) std::fill(p.grad().v.begin(), p.grad().v.end(), 0.0);
}

double max_abs_grad(const std::vector<Var>& params) {
    double mx = 0.0;
    for (const auto& p : params)
        for (double g : p.grad().v) mx = std::max(mx, std::fabs(g));
    return mx;
}

double AdamState::lr_for_epoch(int epoch) const {
    double lr = lr_base;
    for (int m : milestones)
        if (m < epoch) lr *= decay;
    return lr;
}

void adam_step(std::vector<Var>& params, AdamState& state, double lr) {
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.push_back(Tensor::zeros(p.value().rows, p.value().cols));
            state.v.push_back(Tensor::zeros(p.value().rows, p.value().cols));
        }
    }
    if (state.m.size() != params.size())
        throw Error("adam_step: parameter count changed under the optimizer");
    ++state.step;
    double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& val = params[i].value();
        const Tensor& g = params[i].grad();
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        if (!val.same_shape(m)) throw Error("adam_step: parameter shape changed");
        for (size_t k = 0; k < val.size(); ++k) {
            m.v[k] = state.beta1 * m.v[k] + (1.0 - state.beta1) * g.v[k];
            v.v[k] = state.beta2 * v.v[k] + (1.0 - state.beta2) * g.v[k] * g.v[k];
            double mhat = m.v[k] / bc1;
            double vhat = v.v[k] / bc2;
            val.v[k] -= lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

} // namespace ggrx
