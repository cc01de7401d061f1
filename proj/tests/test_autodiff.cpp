#include "ggrx/autodiff.hpp"
#include "ggrx/error.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace ggrx;
using testsupport::gradient_check;

namespace {

Tensor random_tensor(Rng& rng, int rows, int cols) {
    Tensor t(rows, cols);
    for (auto& x : t.v) x = rng.normal();
    return t;
}

// Entrywise-weighted sum: a full-rank reduction to 1x1 so that transposed or
// permuted gradients cannot cancel out.
Var weighted_sum(const Var& v, const Tensor& weights) {
    Var prod = mul(v, Var::constant(weights));
    Tensor ones_row(1, prod.value().rows);
    for (auto& x : ones_row.v) x = 1.0;
    Tensor ones_col(prod.value().cols, 1);
    for (auto& x : ones_col.v) x = 1.0;
    return matmul(matmul(Var::constant(ones_row), prod), Var::constant(ones_col));
}

} // namespace

TEST_CASE("finite differences confirm every operation's gradient") {
    for (uint64_t t = 0; t < 10; ++t) {
        Rng rng(derive_seed(500, "fd", t));

        SUBCASE("matmul") {
            std::vector<Var> params{Var::parameter(random_tensor(rng, 3, 4)),
                                    Var::parameter(random_tensor(rng, 4, 2))};
            Tensor w = random_tensor(rng, 3, 2);
            auto build = [&] { return weighted_sum(matmul(params[0], params[1]), w); };
            CHECK(gradient_check(params, build) < 1e-6);
        }
        SUBCASE("add and mul") {
            std::vector<Var> params{Var::parameter(random_tensor(rng, 3, 3)),
                                    Var::parameter(random_tensor(rng, 3, 3))};
            Tensor w = random_tensor(rng, 3, 3);
            auto build = [&] {
                return weighted_sum(mul(add(params[0], params[1]), params[0]), w);
            };
            CHECK(gradient_check(params, build) < 1e-6);
        }
        SUBCASE("add_col broadcasts the bias") {
            std::vector<Var> params{Var::parameter(random_tensor(rng, 4, 3)),
                                    Var::parameter(random_tensor(rng, 4, 1))};
            Tensor w = random_tensor(rng, 4, 3);
            auto build = [&] { return weighted_sum(add_col(params[0], params[1]), w); };
            CHECK(gradient_check(params, build) < 1e-6);
        }
        SUBCASE("scale") {
            std::vector<Var> params{Var::parameter(random_tensor(rng, 2, 5))};
            Tensor w = random_tensor(rng, 2, 5);
            auto build = [&] { return weighted_sum(scale(params[0], -1.7), w); };
            CHECK(gradient_check(params, build) < 1e-6);
        }
        SUBCASE("sigmoid and tanh") {
            std::vector<Var> params{Var::parameter(random_tensor(rng, 3, 4))};
            Tensor w = random_tensor(rng, 3, 4);
            auto build = [&] { return weighted_sum(tanh_op(sigmoid(params[0])), w); };
            CHECK(gradient_check(params, build) < 1e-6);
        }
        SUBCASE("relu away from the kink") {
            Tensor t0 = random_tensor(rng, 3, 4);
            for (auto& x : t0.v) x += (x >= 0 ? 0.25 : -0.25);
            std::vector<Var> params{Var::parameter(t0)};
            Tensor w = random_tensor(rng, 3, 4);
            auto build = [&] { return weighted_sum(relu(params[0]), w); };
            CHECK(gradient_check(params, build) < 1e-6);
        }
        SUBCASE("slice_rows routes gradient to its band") {
            std::vector<Var> params{Var::parameter(random_tensor(rng, 6, 3))};
            Tensor w = random_tensor(rng, 3, 3);
            auto build = [&] { return weighted_sum(slice_rows(params[0], 1, 3), w); };
            CHECK(gradient_check(params, build) < 1e-6);
        }
        SUBCASE("concat_rows") {
            std::vector<Var> params{Var::parameter(random_tensor(rng, 2, 3)),
                                    Var::parameter(random_tensor(rng, 3, 3)),
                                    Var::parameter(random_tensor(rng, 1, 3))};
            Tensor w = random_tensor(rng, 6, 3);
            auto build = [&] {
                return weighted_sum(concat_rows({params[0], params[1], params[2]}), w);
            };
            CHECK(gradient_check(params, build) < 1e-6);
        }
        SUBCASE("softmax_cols") {
            std::vector<Var> params{Var::parameter(random_tensor(rng, 5, 2))};
            Tensor w = random_tensor(rng, 5, 2);
            auto build = [&] { return weighted_sum(softmax_cols(params[0]), w); };
            CHECK(gradient_check(params, build) < 1e-6);
        }
        SUBCASE("select_sum_cols including an empty column list") {
            std::vector<Var> params{Var::parameter(random_tensor(rng, 4, 7))};
            std::vector<std::vector<int>> cols{{0, 3, 5}, {1}, {}, {2, 6, 0}};
            Tensor w = random_tensor(rng, 4, 4);
            auto build = [&] { return weighted_sum(select_sum_cols(params[0], cols), w); };
            CHECK(gradient_check(params, build) < 1e-6);
        }
        SUBCASE("linear") {
            std::vector<Var> params{Var::parameter(random_tensor(rng, 3, 4)),
                                    Var::parameter(random_tensor(rng, 3, 1)),
                                    Var::parameter(random_tensor(rng, 4, 2))};
            Tensor w = random_tensor(rng, 3, 2);
            auto build = [&] { return weighted_sum(linear(params[0], params[1], params[2]), w); };
            CHECK(gradient_check(params, build) < 1e-6);
        }
        SUBCASE("dropout with a replayed mask") {
            std::vector<Var> params{Var::parameter(random_tensor(rng, 4, 5))};
            Tensor w = random_tensor(rng, 4, 5);
            uint64_t mask_seed = derive_seed(501, "fd-dropout", t);
            auto build = [&] {
                Rng mask_rng(mask_seed);
                return weighted_sum(dropout(params[0], 0.4, mask_rng), w);
            };
            CHECK(gradient_check(params, build) < 1e-6);
        }
        SUBCASE("bce_loss with column weights") {
            std::vector<Var> params{Var::parameter(random_tensor(rng, 4, 3))};
            Tensor target(4, 3);
            for (auto& x : target.v) x = rng.uniform() < 0.5 ? 0.0 : 1.0;
            std::vector<double> weights{1.0, 0.6, 1.3};
            auto build = [&] { return bce_loss(sigmoid(params[0]), target, weights); };
            CHECK(gradient_check(params, build) < 1e-6);
        }
    }
}

TEST_CASE("softmax columns are distributions") {
    Rng rng(derive_seed(502, "softmax"));
    Var v = Var::constant(random_tensor(rng, 6, 4));
    Tensor out = softmax_cols(v).value();
    for (int c = 0; c < out.cols; ++c) {
        double sum = 0.0;
        for (int r = 0; r < out.rows; ++r) {
            CHECK(out.at(r, c) > 0.0);
            sum += out.at(r, c);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }

    Tensor flat(3, 1);
    Tensor uniform = softmax_cols(Var::constant(flat)).value();
    for (int r = 0; r < 3; ++r)
        CHECK(uniform.at(r, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    // shift invariance
    Tensor a(3, 1), b(3, 1);
    a.v = {0.3, -1.0, 2.0};
    b.v = {100.3, 99.0, 102.0};
    Tensor sa = softmax_cols(Var::constant(a)).value();
    Tensor sb = softmax_cols(Var::constant(b)).value();
    for (int r = 0; r < 3; ++r) CHECK(sa.at(r, 0) == doctest::Approx(sb.at(r, 0)).epsilon(1e-9));
}

TEST_CASE("one_hot builds a unit column") {
    Tensor t = one_hot(2, 5);
    CHECK(t.rows == 5);
    CHECK(t.cols == 1);
    for (int r = 0; r < 5; ++r) CHECK(t.at(r, 0) == (r == 2 ? 1.0 : 0.0));
}

TEST_CASE("cross-entropy closed forms") {
    SUBCASE("uniform guess over two outcomes costs 2 ln 2") {
        Tensor pred(2, 1);
        pred.v = {0.5, 0.5};
        Tensor target(2, 1);
        target.v = {1.0, 0.0};
        double loss = bce_loss(Var::constant(pred), target, {1.0}).value().at(0, 0);
        CHECK(loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    }
    SUBCASE("perfect prediction costs nearly nothing") {
        Tensor pred(2, 1);
        pred.v = {1.0, 0.0};
        Tensor target(2, 1);
        target.v = {1.0, 0.0};
        double loss = bce_loss(Var::constant(pred), target, {1.0}).value().at(0, 0);
        CHECK(loss >= 0.0);
        CHECK(loss < 1e-9);
    }
    SUBCASE("zero column weight silences a column") {
        Tensor pred(2, 2);
        pred.v = {0.5, 0.1, 0.5, 0.9};
        Tensor target(2, 2);
        target.v = {1.0, 1.0, 0.0, 0.0};
        double both = bce_loss(Var::constant(pred), target, {1.0, 1.0}).value().at(0, 0);
        double first = bce_loss(Var::constant(pred), target, {1.0, 0.0}).value().at(0, 0);
        CHECK(first == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
        CHECK(both > first);
    }
}

TEST_CASE("dropout identity at rate zero and unbiased in expectation") {
    Rng rng(derive_seed(503, "dropout"));
    Tensor big(1, 20000);
    for (auto& x : big.v) x = 1.0;
    Var v = Var::constant(big);

    Rng zero_rng(derive_seed(503, "dropout-zero"));
    Tensor same = dropout(v, 0.0, zero_rng).value();
    for (size_t k = 0; k < same.size(); ++k) CHECK(same.v[k] == big.v[k]);

    Tensor dropped = dropout(v, 0.3, rng).value();
    double mean = 0.0;
    size_t zeros = 0;
    for (size_t k = 0; k < dropped.size(); ++k) {
        if (dropped.v[k] == 0.0) ++zeros;
        else CHECK(dropped.v[k] == doctest::Approx(1.0 / 0.7).epsilon(1e-12));
        mean += dropped.v[k];
    }
    mean /= static_cast<double>(dropped.size());
    CHECK(mean == doctest::Approx(1.0).epsilon(0.02));
    CHECK(static_cast<double>(zeros) / static_cast<double>(dropped.size()) ==
          doctest::Approx(0.3).epsilon(0.1));
}

TEST_CASE("gradients accumulate over shared subexpressions") {
    Tensor t(1, 1);
    t.v = {2.5};
    std::vector<Var> params{Var::parameter(t)};
    Var y = add(params[0], params[0]); // y = 2x
    zero_grad(params);
    backward(y);
    CHECK(params[0].grad().at(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(max_abs_grad(params) == doctest::Approx(2.0).epsilon(1e-12));
    zero_grad(params);
    CHECK(params[0].grad().at(0, 0) == 0.0);
}

TEST_CASE("adam follows the textbook update") {
    Tensor t(2, 1);
    t.v = {1.0, -2.0};
    std::vector<Var> params{Var::parameter(t)};
    AdamState state;
    const double lr = 0.05;

    // analytic replay of two updates with gradients g1 = x, g2 = x
    std::array<double, 2> x{1.0, -2.0}, m{0.0, 0.0}, v{0.0, 0.0};
    auto reference_step = [&](int step) {
        for (int k = 0; k < 2; ++k) {
            double g = x[k]; // gradient of 0.5 * x^2 summed
            m[k] = 0.9 * m[k] + 0.1 * g;
            v[k] = 0.999 * v[k] + 0.001 * g * g;
            double mh = m[k] / (1.0 - std::pow(0.9, step));
            double vh = v[k] / (1.0 - std::pow(0.999, step));
            x[k] -= lr * mh / (std::sqrt(vh) + 1e-8);
        }
    };

    for (int step = 1; step <= 2; ++step) {
        zero_grad(params);
        Var loss = scale(weighted_sum(mul(params[0], params[0]), [] {
                             Tensor w(2, 1);
                             w.v = {1.0, 1.0};
                             return w;
                         }()),
                         0.5);
        backward(loss);
        adam_step(params, state, lr);
        reference_step(step);
        for (int k = 0; k < 2; ++k)
            CHECK(params[0].value().at(k, 0) == doctest::Approx(x[k]).epsilon(1e-12));
    }
}

TEST_CASE("adam leaves parameters alone when gradients vanish") {
    Tensor t(3, 1);
    t.v = {0.4, -1.1, 2.2};
    std::vector<Var> params{Var::parameter(t)};
    AdamState state;
    zero_grad(params);
    adam_step(params, state, 0.01);
    for (int k = 0; k < 3; ++k) CHECK(params[0].value().at(k, 0) == t.v[k]);
}

TEST_CASE("adam minimizes a quadratic") {
    Tensor t(1, 1);
    t.v = {8.0};
    std::vector<Var> params{Var::parameter(t)};
    AdamState state;
    Tensor three(1, 1);
    three.v = {-3.0};
    auto loss_value = [&] {
        double d = params[0].value().at(0, 0) - 3.0;
        return d * d;
    };
    double initial = loss_value();
    // adam moves at most ~lr per step, so the annealed rates must sum past
    // the initial distance 5: sum 0.2 * 0.98^k = 10
    for (int step = 0; step < 400; ++step) {
        zero_grad(params);
        Var d = add(params[0], Var::constant(three));
        Var loss = mul(d, d);
        backward(loss);
        adam_step(params, state, 0.2 * std::pow(0.98, step));
    }
    CHECK(loss_value() < initial);
    CHECK(std::abs(params[0].value().at(0, 0) - 3.0) < 1e-3);
}

TEST_CASE("step size anneals at the milestones") {
    AdamState state; // base 0.003, decay 0.3, milestones 100 200 400 800
    CHECK(state.lr_for_epoch(1) == doctest::Approx(0.003).epsilon(1e-15));
    CHECK(state.lr_for_epoch(100) == doctest::Approx(0.003).epsilon(1e-15));
    CHECK(state.lr_for_epoch(101) == doctest::Approx(0.0009).epsilon(1e-12));
    CHECK(state.lr_for_epoch(250) == doctest::Approx(0.00027).epsilon(1e-12));
    CHECK(state.lr_for_epoch(401) == doctest::Approx(8.1e-5).epsilon(1e-12));
    CHECK(state.lr_for_epoch(801) == doctest::Approx(2.43e-5).epsilon(1e-12));

    AdamState custom;
    custom.lr_base = 1.0;
    custom.decay = 0.5;
    custom.milestones = {2, 4};
    CHECK(custom.lr_for_epoch(2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(custom.lr_for_epoch(3) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(custom.lr_for_epoch(5) == doctest::Approx(0.25).epsilon(1e-15));
}
