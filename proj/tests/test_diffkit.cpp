#include "doctest.h"

#include <cmath>
#include <functional>

#include "diffkit.hpp"
#include "rng.hpp"

using namespace pidlab;

namespace {

DenseTensor rand_tensor(Rng& rng, std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
    DenseTensor t(std::move(shape));
    for (auto& v : t.v) v = rng.uniform(lo, hi);
    return t;
}

// f(x, grad_out): evaluates the scalar loss at x; when grad_out is non-null,
// also writes the analytic gradient for x
using LossFn = std::function<double(const std::vector<double>&, std::vector<double>*)>;

void fd_check(const LossFn& f, std::vector<double> x, double tol = 1e-4) {
    std::vector<double> g;
    f(x, &g);
    REQUIRE(g.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double eps = 1e-5 * std::max(1.0, std::fabs(x[i]));
        double keep = x[i];
        x[i] = keep + eps;
        double lp = f(x, nullptr);
        x[i] = keep - eps;
        double lm = f(x, nullptr);
        x[i] = keep;
        double fd = (lp - lm) / (2.0 * eps);
        double denom = std::max({std::fabs(fd), std::fabs(g[i]), 1e-6});
        CHECK(std::fabs(fd - g[i]) / denom <= tol);
    }
}

// loss = sum(op_output * w) with a fixed random weight tensor so every output
// entry feeds the scalar
LossFn weighted(std::function<int(Tape&, int)> op, std::vector<int> in_shape, DenseTensor w) {
    return [op = std::move(op), in_shape = std::move(in_shape),
            w = std::move(w)](const std::vector<double>& x, std::vector<double>* grad) {
        Tape t;
        DenseTensor xt(in_shape);
        xt.v = x;
        int xin = t.leaf(xt, true);
        int out = op(t, xin);
        int loss = t.sum_all(t.mul(out, t.leaf(w)));
        if (grad) *grad = t.backward(loss)[xin].v;
        return t.value(loss).v[0];
    };
}

}  // namespace

TEST_CASE("leaky relu slope and identity matmul") {
    Tape t;
    DenseTensor x({1, 3});
    x.v = {-1.0, 0.5, -2.5};
    int r = t.leaky_relu(t.leaf(x));
    CHECK(t.value(r).v[0] == doctest::Approx(-0.2));
    CHECK(t.value(r).v[1] == doctest::Approx(0.5));
    CHECK(t.value(r).v[2] == doctest::Approx(-0.5));

    DenseTensor eye({3, 3});
    for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    DenseTensor m({3, 2});
    m.v = {1, 2, 3, 4, 5, 6};
    int mm = t.matmul(t.leaf(eye), t.leaf(m));
    for (std::size_t i = 0; i < m.v.size(); ++i) CHECK(t.value(mm).v[i] == doctest::Approx(m.v[i]));
}

TEST_CASE("square loss has gradient two x") {
    Tape t;
    int x = t.leaf(DenseTensor::scalar(3.0), true);
    int loss = t.sum_all(t.mul(x, x));
    CHECK(t.value(loss).v[0] == doctest::Approx(9.0));
    auto g = t.backward(loss);
    CHECK(g[x].v[0] == doctest::Approx(6.0));
}

TEST_CASE("mean of exp gradient") {
    Tape t;
    DenseTensor x({2});
    x.v = {0.0, std::log(2.0)};
    int xin = t.leaf(x, true);
    int loss = t.mean_all(t.exp_fn(xin));
    auto g = t.backward(loss);
    CHECK(g[xin].v[0] == doctest::Approx(0.5));
    CHECK(g[xin].v[1] == doctest::Approx(1.0));
}

TEST_CASE("softmax cross entropy gradient is softmax minus onehot") {
    Tape t;
    DenseTensor logits({2, 3});
    logits.v = {0.2, -1.0, 0.7, 1.5, 0.0, -0.5};
    int lin = t.leaf(logits, true);
    int loss = t.softmax_cross_entropy(lin, {2, 0});
    auto g = t.backward(loss);
    for (int i = 0; i < 2; ++i) {
        double mx = std::max({logits.at(i, 0), logits.at(i, 1), logits.at(i, 2)});
        double z = 0.0;
        for (int j = 0; j < 3; ++j) z += std::exp(logits.at(i, j) - mx);
        for (int j = 0; j < 3; ++j) {
            double p = std::exp(logits.at(i, j) - mx) / z;
            double expect = (p - ((i == 0 ? 2 : 0) == j ? 1.0 : 0.0)) / 2.0;
            CHECK(g[lin].v[std::size_t(i) * 3 + j] == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_CASE("every primitive passes the finite difference check") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        auto w23 = rand_tensor(rng, {2, 3});
        auto x23 = rand_tensor(rng, {2, 3});

        fd_check(weighted([](Tape& t, int x) { return t.leaky_relu(x); }, {2, 3}, w23), x23.v);
        fd_check(weighted([](Tape& t, int x) { return t.tanh_fn(x); }, {2, 3}, w23), x23.v);
        fd_check(weighted([](Tape& t, int x) { return t.exp_fn(x); }, {2, 3}, w23), x23.v);
        fd_check(weighted([](Tape& t, int x) { return t.scale(x, -1.7); }, {2, 3}, w23), x23.v);

        auto pos = rand_tensor(rng, {2, 3}, 0.5, 2.0);
        fd_check(weighted([](Tape& t, int x) { return t.log_fn(x); }, {2, 3}, w23), pos.v);
        fd_check(weighted([](Tape& t, int x) { return t.row_normalize(x); }, {2, 3}, w23),
                 pos.v);
        fd_check(weighted([](Tape& t, int x) { return t.col_normalize(x); }, {2, 3}, w23),
                 pos.v);

        auto tr = rand_tensor(rng, {2}, 0.5, 1.5);
        auto tc = rand_tensor(rng, {3}, 0.5, 1.5);
        fd_check(weighted([tr](Tape& t, int x) { return t.scale_rows(x, tr); }, {2, 3}, w23),
                 x23.v);
        fd_check(weighted([tc](Tape& t, int x) { return t.scale_cols(x, tc); }, {2, 3}, w23),
                 x23.v);

        auto other = rand_tensor(rng, {2, 3});
        for (auto op : {&Tape::add, &Tape::sub, &Tape::mul}) {
            fd_check(weighted([op, other](Tape& t, int x) { return (t.*op)(x, t.leaf(other)); },
                              {2, 3}, w23),
                     x23.v);
        }

        auto b32 = rand_tensor(rng, {3, 2});
        auto w22 = rand_tensor(rng, {2, 2});
        fd_check(weighted([b32](Tape& t, int x) { return t.matmul(x, t.leaf(b32)); }, {2, 3},
                          w22),
                 x23.v);
        fd_check(weighted([x23](Tape& t, int b) { return t.matmul(t.leaf(x23), b); }, {3, 2},
                          w22),
                 b32.v);

        auto b43 = rand_tensor(rng, {4, 3});
        auto w24 = rand_tensor(rng, {2, 4});
        fd_check(weighted([b43](Tape& t, int x) { return t.matmul_nt(x, t.leaf(b43)); }, {2, 3},
                          w24),
                 x23.v);
        fd_check(weighted([x23](Tape& t, int b) { return t.matmul_nt(t.leaf(x23), b); }, {4, 3},
                          w24),
                 b43.v);

        auto a22 = rand_tensor(rng, {2, 2});
        auto w26 = rand_tensor(rng, {2, 6});
        fd_check(weighted([x23](Tape& t, int a) { return t.outer_rows(a, t.leaf(x23)); }, {2, 2},
                          w26),
                 a22.v);
        fd_check(weighted([a22](Tape& t, int b) { return t.outer_rows(t.leaf(a22), b); }, {2, 3},
                          w26),
                 x23.v);

        fd_check(weighted([](Tape& t, int x) { return t.mean_all(x); }, {2, 3},
                          DenseTensor::scalar(1.0)),
                 x23.v);

        fd_check(
            [&](const std::vector<double>& x, std::vector<double>* grad) {
                Tape t;
                DenseTensor xt({2, 3});
                xt.v = x;
                int xin = t.leaf(xt, true);
                int loss = t.softmax_cross_entropy(xin, {1, 2});
                if (grad) *grad = t.backward(loss)[xin].v;
                return t.value(loss).v[0];
            },
            x23.v);

        // affine wrt input, weight, and bias
        auto wmat = rand_tensor(rng, {3, 4});
        auto bias = rand_tensor(rng, {4});
        auto w24b = rand_tensor(rng, {2, 4});
        fd_check(weighted(
                     [wmat, bias](Tape& t, int x) {
                         return t.affine(x, t.leaf(wmat), t.leaf(bias));
                     },
                     {2, 3}, w24b),
                 x23.v);
        fd_check(weighted(
                     [x23, bias](Tape& t, int w) {
                         return t.affine(t.leaf(x23), w, t.leaf(bias));
                     },
                     {3, 4}, w24b),
                 wmat.v);
        fd_check(weighted(
                     [x23, wmat](Tape& t, int b) {
                         return t.affine(t.leaf(x23), t.leaf(wmat), b);
                     },
                     {4}, w24b),
                 bias.v);
    }
}

TEST_CASE("normalization outputs sum to one") {
    Rng rng(6);
    auto x = rand_tensor(rng, {5, 4}, 0.1, 3.0);
    Tape t;
    int rn = t.row_normalize(t.leaf(x));
    int cn = t.col_normalize(t.leaf(x));
    for (int i = 0; i < 5; ++i) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j) s += t.value(rn).at(i, j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    for (int j = 0; j < 4; ++j) {
        double s = 0.0;
        for (int i = 0; i < 5; ++i) s += t.value(cn).at(i, j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("unrolled scaling iterations stay differentiable") {
    Rng rng(31);
    for (int iters : {1, 5, 20}) {
        auto h2 = rand_tensor(rng, {4, 3});
        auto w = rand_tensor(rng, {4, 4});
        auto tr = rand_tensor(rng, {4}, 0.5, 1.5);
        auto tc = rand_tensor(rng, {4}, 0.5, 1.5);
        LossFn f = [&](const std::vector<double>& x, std::vector<double>* grad) {
            Tape t;
            DenseTensor h1({4, 3});
            h1.v = x;
            int hin = t.leaf(h1, true);
            int k = t.exp_shift(t.matmul_nt(hin, t.leaf(h2)));
            for (int it = 0; it < iters; ++it) {
                k = t.scale_rows(t.row_normalize(k), tr);
                k = t.scale_cols(t.col_normalize(k), tc);
            }
            int loss = t.sum_all(t.mul(t.log_fn(k), t.leaf(w)));
            if (grad) *grad = t.backward(loss)[hin].v;
            return t.value(loss).v[0];
        };
        auto h1 = rand_tensor(rng, {4, 3});
        fd_check(f, h1.v, 1e-3);
    }
}

TEST_CASE("backward rejects non-scalar losses and fills unused leaves") {
    Tape t;
    DenseTensor x({2, 2});
    x.v = {1, 2, 3, 4};
    int a = t.leaf(x, true);
    int unused = t.leaf(x, true);
    int loss = t.sum_all(a);
    CHECK_THROWS_AS(t.backward(a), std::invalid_argument);
    auto g = t.backward(loss);
    REQUIRE(g[unused].v.size() == 4);
    for (double v : g[unused].v) CHECK(v == 0.0);
}

TEST_CASE("identical tapes give identical gradients") {
    auto run = [](std::vector<double>* out) {
        Rng rng(99);
        Tape t;
        auto x = rand_tensor(rng, {3, 3});
        auto w = rand_tensor(rng, {3, 3});
        int xin = t.leaf(x, true);
        int loss = t.softmax_cross_entropy(
            t.affine(xin, t.leaf(w), t.leaf(rand_tensor(rng, {3}))), {0, 1, 2});
        *out = t.backward(loss)[xin].v;
        return t.value(loss).v[0];
    };
    std::vector<double> g1, g2;
    double l1 = run(&g1), l2 = run(&g2);
    CHECK(l1 == l2);
    CHECK(g1 == g2);
}

TEST_CASE("adam is a no-op on zero gradients") {
    std::vector<double> p = {1.0, -2.0, 3.0};
    std::vector<double> g(3, 0.0);
    AdamState st;
    adam_step(p, g, st, 0.1);
    CHECK(p[0] == doctest::Approx(1.0));
    CHECK(p[1] == doctest::Approx(-2.0));
    CHECK(p[2] == doctest::Approx(3.0));
}

TEST_CASE("first adam step has magnitude close to the learning rate") {
    std::vector<double> p = {0.5};
    std::vector<double> g = {2.7};
    AdamState st;
    adam_step(p, g, st, 1e-3);
    CHECK(std::fabs(0.5 - p[0]) == doctest::Approx(1e-3).epsilon(1e-6));

    std::vector<double> pn = {0.5};
    std::vector<double> gn = {-2.7};
    AdamState stn;
    adam_step(pn, gn, stn, 1e-3);
    CHECK(pn[0] - 0.5 == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("adam runs are bit-identical") {
    auto run = [] {
        Rng rng(4);
        std::vector<double> p(10), g(10);
        for (auto& v : p) v = rng.normal();
        AdamState st;
        for (int step = 0; step < 25; ++step) {
            for (auto& v : g) v = rng.normal();
            adam_step(p, g, st, 1e-2);
        }
        return p;
    };
    CHECK(run() == run());
}
