#pragma once

#include "ggrx/rng.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace ggrx {

// Dense row-major matrix of doubles. Vectors are single-column matrices;
// batches occupy columns.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

    static Tensor zeros(int r, int c = 1) { return Tensor(r, c); }

    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    double* row(int r) { return v.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return v.data() + static_cast<size_t>(r) * cols; }
    size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
};

// Reverse-mode automatic differentiation over a define-by-run tape. Every
// operation allocates a graph node holding the result value, a gradient
// buffer of the same shape, and a closure that pushes the node's gradient
// into its parents. backward() topologically sorts the reachable graph and
// runs the closures once each.
class Var;

struct AdNode {
    Tensor val;
    Tensor grad;
    bool requires_grad = false;
    std::vector<Var> parents;
    std::function<void(AdNode&)> backprop;
};

class Var {
public:
    Var() = default;

    static Var constant(Tensor t);
    static Var parameter(Tensor t);

    bool defined() const { return static_cast<bool>(node_); }
    const Tensor& value() const { return node_->val; }
    Tensor& value() { return node_->val; }
    const Tensor& grad() const { return node_->grad; }
    Tensor& grad() { return node_->grad; }
    bool requires_grad() const { return node_->requires_grad; }
    AdNode* node() const { return node_.get(); }

    static Var make(Tensor val, std::vector<Var> parents, std::function<void(AdNode&)> backprop);

private:
    std::shared_ptr<AdNode> node_;
};

// C = A B
Var matmul(const Var& a, const Var& b);
// elementwise, equal shapes
Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
// add a column vector to every column
Var add_col(const Var& a, const Var& bias);
Var scale(const Var& a, double s);
Var sigmoid(const Var& a);
Var tanh_op(const Var& a);
Var relu(const Var& a);
// rows [first, first + count)
Var slice_rows(const Var& a, int first, int count);
Var concat_rows(const std::vector<Var>& parts);
// column-wise softmax (each column sums to 1)
Var softmax_cols(const Var& a);
// column b of the result is the sum of the columns of W listed in cols[b];
// the cheap form of W * X for multi-hot X
Var select_sum_cols(const Var& w, const std::vector<std::vector<int>>& cols);
// inverted dropout: kept entries scaled by 1/(1-rate)
Var dropout(const Var& a, double rate, Rng& rng);
// W x + b for a column-vector or batched x
Var linear(const Var& w, const Var& bias, const Var& x);

Tensor one_hot(int index, int width);

// Binary cross-entropy of predictions in (0,1) against a 0/1 target, summed
// over all entries, each column weighted by col_weight. Probabilities are
// clamped to [1e-12, 1 - 1e-12]. Result is 1x1.
Var bce_loss(const Var& pred, const Tensor& target, const std::vector<double>& col_weight);

// Seed d(loss)/d(loss) = 1 and propagate. loss must be 1x1.
void backward(const Var& loss);

void zero_grad(std::vector<Var>& params);

double max_abs_grad(const std::vector<Var>& params);

// Adam with milestone annealing: the step size for a 1-based epoch e is
// lr_base * decay^(number of milestones < e).
struct AdamState {
    double lr_base = 0.003;
    double decay = 0.3;
    std::vector<int> milestones{100, 200, 400, 800};
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long long step = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    double lr_for_epoch(int epoch) const;
};

void adam_step(std::vector<Var>& params, AdamState& state, double lr);

} // namespace ggrx
