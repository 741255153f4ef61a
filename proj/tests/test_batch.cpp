#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "../src/batch.hpp"
#include "../src/rng.hpp"
#include "../vendor/doctest.h"

using namespace pidlab;

namespace {

// which: 0 xor, 1 or, 2 and, 3 copy-x1, 4 label independent of both inputs
FeatureDataset onehot_gate(int which, long n) {
    FeatureDataset d;
    d.n = n;
    d.d1 = 2;
    d.d2 = 2;
    d.classes = 2;
    d.x1.assign(std::size_t(n) * 2, 0.0);
    d.x2.assign(std::size_t(n) * 2, 0.0);
    d.y.resize(std::size_t(n));
    for (long i = 0; i < n; ++i) {
        int a = int(i & 1), b = int((i >> 1) & 1);
        int y = 0;
        switch (which) {
            case 0: y = a ^ b; break;
            case 1: y = a | b; break;
            case 2: y = a & b; break;
            case 3: y = a; break;
            default: y = int((i >> 2) & 1); break;
        }
        d.x1[std::size_t(i) * 2 + a] = 1.0;
        d.x2[std::size_t(i) * 2 + b] = 1.0;
        d.y[std::size_t(i)] = y;
    }
    return d;
}

CouplingNet zeroed_net(int d1, int d2, int classes) {
    CouplingNet net = init_coupling(d1, d2, classes, 32, 1);
    for (DenseTensor* t : {&net.enc1.w1, &net.enc1.b1, &net.enc1.w2, &net.enc1.b2, &net.enc1.w3,
                           &net.enc1.b3, &net.enc2.w1, &net.enc2.b1, &net.enc2.w2, &net.enc2.b2,
                           &net.enc2.w3, &net.enc2.b3})
        std::fill(t->v.begin(), t->v.end(), 0.0);
    return net;
}

DenseTensor random_soft_targets(int m, int classes, Rng& rng) {
    DenseTensor t({m, classes});
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int c = 0; c < classes; ++c) {
            t.at(i, c) = std::exp(rng.normal());
            s += t.at(i, c);
        }
        for (int c = 0; c < classes; ++c) t.at(i, c) /= s * m;
    }
    return t;
}

DenseTensor random_similarity(int classes, int m, Rng& rng) {
    DenseTensor a({classes, m, m});
    for (double& v : a.v) v = std::exp(rng.normal());
    return a;
}

double loss_value(const CouplingNet& net, const std::vector<double>& x1,
                  const std::vector<double>& x2, const std::vector<int>& y, int m,
                  const DenseTensor& p1, const DenseTensor& p2, int iters) {
    Tape tape;
    CouplingLossGraph g = build_coupling_loss(tape, net, x1, x2, y, m, p1, p2, iters, false);
    return tape.value(g.loss).v[0];
}

}  // namespace

TEST_CASE("unimodal model separates a deterministic modality") {
    FeatureDataset d = onehot_gate(3, 2048);
    BatchConfig cfg;
    cfg.seed = 5;
    ConditionalModel m1 = train_unimodal(d, 1, cfg);
    CHECK(m1.accuracy(d) >= 0.99);
    CHECK(m1.label_marginal[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("unimodal model on independent labels reproduces class frequencies") {
    FeatureDataset d;
    d.n = 4000;
    d.d1 = 2;
    d.d2 = 2;
    d.classes = 2;
    d.x1.assign(std::size_t(d.n) * 2, 0.0);
    d.x2.assign(std::size_t(d.n) * 2, 0.0);
    d.y.resize(std::size_t(d.n));
    for (long i = 0; i < d.n; ++i) {
        int a = int(i & 1);
        d.x1[std::size_t(i) * 2 + a] = 1.0;
        d.x2[std::size_t(i) * 2] = 1.0;
        d.y[std::size_t(i)] = ((i / 2) % 10) < 7 ? 0 : 1;
    }
    BatchConfig cfg;
    cfg.seed = 6;
    ConditionalModel m1 = train_unimodal(d, 1, cfg);
    DenseTensor probs = m1.predict(d.x1, int(d.n));
    for (int row : {0, 1}) {
        CHECK(probs.at(row, 0) == doctest::Approx(0.7).epsilon(0.08));
        CHECK(probs.at(row, 1) == doctest::Approx(0.3).epsilon(0.2));
    }
}

TEST_CASE("unimodal model sees only chance accuracy on a parity label") {
    FeatureDataset d = onehot_gate(0, 2048);
    BatchConfig cfg;
    cfg.seed = 7;
    ConditionalModel m1 = train_unimodal(d, 1, cfg);
    CHECK(std::fabs(m1.accuracy(d) - 0.5) <= 0.05);
}

TEST_CASE("unimodal training rejects constant labels") {
    FeatureDataset d = onehot_gate(3, 64);
    std::fill(d.y.begin(), d.y.end(), 0);
    CHECK_THROWS_AS(train_unimodal(d, 1, {}), std::invalid_argument);
}

TEST_CASE("batch config rejects degenerate sizes") {
    BatchConfig cfg;
    cfg.m = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    BatchConfig cfg2;
    cfg2.lr = 0.0;
    CHECK_THROWS_AS(cfg2.validate(), std::invalid_argument);
}

TEST_CASE("zeroed encoders give an all-ones similarity tensor") {
    int m = 6;
    CouplingNet net = zeroed_net(3, 2, 2);
    Rng rng(9);
    std::vector<double> x1(std::size_t(m) * 3), x2(std::size_t(m) * 2);
    for (double& v : x1) v = rng.normal();
    for (double& v : x2) v = rng.normal();
    DenseTensor a = similarity_logits(net, x1, x2, m);
    REQUIRE(a.shape == std::vector<int>{2, m, m});
    for (double v : a.v) CHECK(v == 1.0);
}

TEST_CASE("projection of an all-ones tensor onto uniform targets is uniform") {
    int m = 8, classes = 3;
    DenseTensor a({classes, m, m});
    std::fill(a.v.begin(), a.v.end(), 1.0);
    DenseTensor t({m, classes});
    std::fill(t.v.begin(), t.v.end(), 1.0 / double(m * classes));
    BatchCoupling c = sinkhorn_project(a, t, t, 20);
    for (int y = 0; y < classes; ++y)
        for (double v : c.q[std::size_t(y)].v)
            CHECK(v == doctest::Approx(1.0 / double(m * m * classes)).epsilon(1e-12));
    CHECK(c.residual <= 1e-15);
}

TEST_CASE("projection hits the prescribed marginals after twenty sweeps") {
    Rng rng(11);
    int m = 64, classes = 3;
    DenseTensor a = random_similarity(classes, m, rng);
    DenseTensor rt = random_soft_targets(m, classes, rng);
    DenseTensor ct = random_soft_targets(m, classes, rng);
    BatchCoupling c = sinkhorn_project(a, rt, ct, 20);
    CHECK(c.residual <= 1e-6);

    // the stored targets keep per-index mass 1/m up to the per-label averaging
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int y = 0; y < classes; ++y) s += c.row_targets.at(i, y);
        CHECK(s == doctest::Approx(1.0 / m).epsilon(0.2));
    }
}

TEST_CASE("a coupling already satisfying the targets is a fixed point") {
    Rng rng(12);
    int m = 16, classes = 2;
    DenseTensor a = random_similarity(classes, m, rng);
    DenseTensor rt = random_soft_targets(m, classes, rng);
    DenseTensor ct = random_soft_targets(m, classes, rng);
    BatchCoupling c0 = sinkhorn_project(a, rt, ct, 400);

    DenseTensor converged({classes, m, m});
    for (int y = 0; y < classes; ++y)
        std::copy(c0.q[std::size_t(y)].v.begin(), c0.q[std::size_t(y)].v.end(),
                  converged.v.begin() + std::size_t(y) * m * m);
    BatchCoupling c1 = sinkhorn_project(converged, rt, ct, 20);
    for (int y = 0; y < classes; ++y)
        for (std::size_t i = 0; i < c0.q[std::size_t(y)].v.size(); ++i)
            CHECK(std::fabs(c1.q[std::size_t(y)].v[i] - c0.q[std::size_t(y)].v[i]) <= 1e-12);
}

TEST_CASE("projection validates its inputs") {
    int m = 4, classes = 2;
    DenseTensor a({classes, m, m});
    std::fill(a.v.begin(), a.v.end(), 1.0);
    DenseTensor good({m, classes});
    std::fill(good.v.begin(), good.v.end(), 1.0 / double(m * classes));

    DenseTensor bad = good;
    bad.v[0] *= 2.0;
    CHECK_THROWS_AS(sinkhorn_project(a, bad, good, 5), std::invalid_argument);

    DenseTensor zero = a;
    zero.v[3] = 0.0;
    CHECK_THROWS_AS(sinkhorn_project(zero, good, good, 5), std::invalid_argument);
}

TEST_CASE("objective vanishes when the coupling ignores the label") {
    Rng rng(13);
    int m = 6, classes = 2;
    DenseTensor slice({m, m});
    for (double& v : slice.v) v = std::exp(rng.normal());
    DenseTensor a({classes, m, m});
    for (int y = 0; y < classes; ++y)
        std::copy(slice.v.begin(), slice.v.end(), a.v.begin() + std::size_t(y) * m * m);
    DenseTensor t({m, classes});
    std::fill(t.v.begin(), t.v.end(), 1.0 / double(m * classes));
    BatchCoupling c = sinkhorn_project(a, t, t, 50);

    DenseTensor pred = random_soft_targets(m, classes, rng);
    for (double& v : pred.v) v *= m;  // probability rows
    std::vector<int> y(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) y[std::size_t(i)] = i % classes;
    CHECK(std::fabs(batch_objective(c, pred, y)) <= 1e-12);
}

TEST_CASE("objective is positive for a label-revealing coupling") {
    int m = 2, classes = 2;
    DenseTensor a({classes, m, m});
    auto set = [&](int y, int i, int j, double v) {
        a.v[(std::size_t(y) * m + i) * m + j] = v;
    };
    set(0, 0, 0, 100.0);
    set(0, 0, 1, 1.0);
    set(0, 1, 0, 1.0);
    set(0, 1, 1, 100.0);
    set(1, 0, 0, 1.0);
    set(1, 0, 1, 100.0);
    set(1, 1, 0, 100.0);
    set(1, 1, 1, 1.0);
    DenseTensor t({m, classes});
    std::fill(t.v.begin(), t.v.end(), 1.0 / double(m * classes));
    BatchCoupling c = sinkhorn_project(a, t, t, 50);
    DenseTensor pred({m, classes});
    std::fill(pred.v.begin(), pred.v.end(), 0.5);
    std::vector<int> y = {0, 1};
    CHECK(batch_objective(c, pred, y) > 0.1);
}

TEST_CASE("sampled objective agrees with the exact inner expectation") {
    Rng rng(14);
    int m = 8, classes = 2;
    DenseTensor a = random_similarity(classes, m, rng);
    DenseTensor rt = random_soft_targets(m, classes, rng);
    DenseTensor ct = random_soft_targets(m, classes, rng);
    BatchCoupling c = sinkhorn_project(a, rt, ct, 50);
    DenseTensor pred = random_soft_targets(m, classes, rng);
    for (double& v : pred.v) v *= m;
    std::vector<int> y(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) y[std::size_t(i)] = int(rng.below(classes));

    double exact = batch_objective(c, pred, y);
    Rng sampler(99);
    double acc = 0.0;
    int reps = 20000;
    for (int r = 0; r < reps; ++r) acc += batch_objective(c, pred, y, &sampler);
    CHECK(acc / reps == doctest::Approx(exact).epsilon(0.05));
}

TEST_CASE("conditional sampling follows the coupling rows") {
    Rng rng(15);
    int m = 4, classes = 2;
    DenseTensor a = random_similarity(classes, m, rng);
    DenseTensor t({m, classes});
    std::fill(t.v.begin(), t.v.end(), 1.0 / double(m * classes));
    BatchCoupling c = sinkhorn_project(a, t, t, 60);

    const DenseTensor& q = c.q[0];
    double row = 0.0;
    for (int j = 0; j < m; ++j) row += q.at(1, j);
    std::vector<double> freq(std::size_t(m), 0.0);
    Rng sampler(16);
    int reps = 40000;
    for (int r = 0; r < reps; ++r) freq[std::size_t(sample_x2(c, 1, 0, sampler))] += 1.0;
    for (int j = 0; j < m; ++j)
        CHECK(freq[std::size_t(j)] / reps == doctest::Approx(q.at(1, j) / row).epsilon(0.08));
}

TEST_CASE("coupling loss gradients match finite differences through the projection") {
    Rng rng(17);
    int m = 4, d1 = 2, d2 = 3, classes = 2;
    CouplingNet net = init_coupling(d1, d2, classes, 6, 18);
    std::vector<double> x1(std::size_t(m) * d1), x2(std::size_t(m) * d2);
    for (double& v : x1) v = rng.normal();
    for (double& v : x2) v = rng.normal();
    std::vector<int> y = {0, 1, 1, 0};
    DenseTensor p1 = random_soft_targets(m, classes, rng);
    DenseTensor p2 = random_soft_targets(m, classes, rng);
    for (double& v : p1.v) v *= m;
    for (double& v : p2.v) v *= m;

    for (int iters : {1, 5, 20}) {
        Tape tape;
        CouplingLossGraph g = build_coupling_loss(tape, net, x1, x2, y, m, p1, p2, iters, true);
        std::vector<DenseTensor> grads = tape.backward(g.loss);

        std::vector<DenseTensor*> slots = {&net.enc1.w1, &net.enc1.b1, &net.enc1.w2, &net.enc1.b2,
                                           &net.enc1.w3, &net.enc1.b3, &net.enc2.w1, &net.enc2.b1,
                                           &net.enc2.w2, &net.enc2.b2, &net.enc2.w3, &net.enc2.b3};
        for (std::size_t s = 0; s < slots.size(); ++s) {
            std::size_t c = rng.below(slots[s]->v.size());
            double keep = slots[s]->v[c];
            double eps = 1e-5 * std::max(1.0, std::fabs(keep));
            slots[s]->v[c] = keep + eps;
            double up = loss_value(net, x1, x2, y, m, p1, p2, iters);
            slots[s]->v[c] = keep - eps;
            double dn = loss_value(net, x1, x2, y, m, p1, p2, iters);
            slots[s]->v[c] = keep;
            double fd = (up - dn) / (2.0 * eps);
            double ad = grads[std::size_t(g.params[s])].v[c];
            CHECK(std::fabs(fd - ad) / std::max({std::fabs(fd), std::fabs(ad), 1e-6}) <= 1e-3);
        }
    }
}

TEST_CASE("coupling training is deterministic and reduces the objective on a gate") {
    FeatureDataset d = onehot_gate(0, 1024);
    BatchConfig cfg;
    cfg.seed = 19;
    cfg.epochs = 4;
    cfg.m = 128;
    ConditionalModel m1 = train_unimodal(d, 1, cfg);
    ConditionalModel m2 = train_unimodal(d, 2, cfg);

    CouplingResult a = train_coupling(d, m1, m2, cfg);
    CouplingResult b = train_coupling(d, m1, m2, cfg);
    REQUIRE(a.loss_history.size() == b.loss_history.size());
    REQUIRE(!a.loss_history.empty());
    for (std::size_t i = 0; i < a.loss_history.size(); ++i)
        CHECK(a.loss_history[i] == b.loss_history[i]);
    CHECK(a.net.enc1.w1.v == b.net.enc1.w1.v);
    CHECK(a.net.enc2.w3.v == b.net.enc2.w3.v);
    CHECK(a.loss_history.back() <= a.loss_history.front());
}

TEST_CASE("batch estimate recovers pure synergy on the parity gate") {
    FeatureDataset d = onehot_gate(0, 4096);
    BatchConfig cfg;
    cfg.seed = 23;
    PidResult res = estimate_pid_batch(d, cfg, LogBase::bits);
    CHECK(std::fabs(res.r) <= 0.05);
    CHECK(std::fabs(res.u1) <= 0.05);
    CHECK(std::fabs(res.u2) <= 0.05);
    CHECK(res.s == doctest::Approx(1.0).epsilon(0.05));
    CHECK(res.diag.s_present);
    CHECK(res.diag.residual <= 1e-6);
    // the four components and the totals are tied together by construction
    CHECK(res.r == doctest::Approx(res.total_mi - res.s - res.u1 - res.u2).epsilon(1e-9));
}

TEST_CASE("batch estimate splits the inclusive gate into redundancy and synergy") {
    FeatureDataset d = onehot_gate(1, 4096);
    BatchConfig cfg;
    cfg.seed = 29;
    PidResult res = estimate_pid_batch(d, cfg, LogBase::bits);
    CHECK(res.r == doctest::Approx(0.311).epsilon(0.2));
    CHECK(std::fabs(res.r - 0.311) <= 0.05);
    CHECK(std::fabs(res.u1) <= 0.05);
    CHECK(std::fabs(res.u2) <= 0.05);
    CHECK(std::fabs(res.s - 0.5) <= 0.05);
}

TEST_CASE("batch estimate assigns a copied modality to unique information") {
    FeatureDataset d = onehot_gate(3, 4096);
    BatchConfig cfg;
    cfg.seed = 31;
    PidResult res = estimate_pid_batch(d, cfg, LogBase::bits);
    CHECK(std::fabs(res.r) <= 0.05);
    CHECK(std::fabs(res.u1 - 1.0) <= 0.05);
    CHECK(std::fabs(res.u2) <= 0.05);
    CHECK(std::fabs(res.s) <= 0.05);
}

TEST_CASE("batch estimate reports nothing when the features carry nothing") {
    FeatureDataset d = onehot_gate(4, 4096);
    BatchConfig cfg;
    cfg.seed = 37;
    PidResult res = estimate_pid_batch(d, cfg, LogBase::bits);
    CHECK(std::fabs(res.r) <= 0.02);
    CHECK(std::fabs(res.u1) <= 0.02);
    CHECK(std::fabs(res.u2) <= 0.02);
    CHECK(std::fabs(res.s) <= 0.02);
}

TEST_CASE("literal redundancy reporting equals the coupling information") {
    FeatureDataset d = onehot_gate(3, 1024);
    BatchConfig cfg;
    cfg.seed = 41;
    cfg.epochs = 3;
    cfg.literal_r = true;
    PidResult res = estimate_pid_batch(d, cfg, LogBase::bits);
    CHECK(res.r == doctest::Approx(res.total_mi - res.s).epsilon(1e-9));
}

TEST_CASE("joint information can be skipped or supplied externally") {
    FeatureDataset d = onehot_gate(0, 512);
    BatchConfig cfg;
    cfg.seed = 43;
    cfg.epochs = 2;
    cfg.skip_joint_mi = true;
    PidResult res = estimate_pid_batch(d, cfg, LogBase::bits);
    CHECK(!res.diag.s_present);
    CHECK(!std::isfinite(res.s));

    // a perfect multimodal predictor pins the total at one bit
    cfg.skip_joint_mi = false;
    std::vector<double> cond(std::size_t(d.n), 1.0);
    PidResult res2 = estimate_pid_batch(d, cfg, LogBase::bits, &cond);
    CHECK(res2.total_mi == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res2.diag.s_present);
}

TEST_CASE("batch estimation is reproducible for a fixed seed") {
    FeatureDataset d = onehot_gate(1, 1024);
    BatchConfig cfg;
    cfg.seed = 47;
    cfg.epochs = 2;
    PidResult a = estimate_pid_batch(d, cfg, LogBase::bits);
    PidResult b = estimate_pid_batch(d, cfg, LogBase::bits);
    CHECK(a.r == b.r);
    CHECK(a.u1 == b.u1);
    CHECK(a.u2 == b.u2);
    CHECK(a.s == b.s);
    CHECK(a.diag.objective == b.diag.objective);
}
