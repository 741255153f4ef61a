#include "doctest.h"

#include <cmath>

#include "cvx.hpp"
#include "info.hpp"
#include "rng.hpp"

using namespace pidlab;

namespace {

CategoricalJoint gate(int (*f)(int, int)) {
    CategoricalJoint j(2, 2, 2);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) j.at(a, b, f(a, b)) = 0.25;
    return j;
}

CategoricalJoint gate_and() { return gate([](int a, int b) { return a & b; }); }
CategoricalJoint gate_or() { return gate([](int a, int b) { return a | b; }); }
CategoricalJoint gate_xor() { return gate([](int a, int b) { return a ^ b; }); }

CategoricalJoint random_joint(Rng& rng, int n1, int n2, int ny) {
    CategoricalJoint j(n1, n2, ny);
    double total = 0.0;
    for (auto& v : j.p) {
        v = -std::log(rng.uniform() + 1e-300);
        total += v;
    }
    for (auto& v : j.p) v /= total;
    return j;
}

constexpr double ln2 = 0.6931471805599453094;

}  // namespace

TEST_CASE("constraints_from computes the pairwise marginals") {
    auto cx = constraints_from(gate_xor());
    for (double v : cx.marg1) CHECK(v == doctest::Approx(0.25));
    for (double v : cx.marg2) CHECK(v == doctest::Approx(0.25));
    CHECK(cx.py[0] == doctest::Approx(0.5));

    auto ca = constraints_from(gate_and());
    CHECK(ca.m1(0, 0) == doctest::Approx(0.5));
    CHECK(ca.m1(0, 1) == doctest::Approx(0.0));
    CHECK(ca.m1(1, 0) == doctest::Approx(0.25));
    CHECK(ca.m1(1, 1) == doctest::Approx(0.25));
    CHECK(ca.py[0] == doctest::Approx(0.75));
    ca.validate();

    CategoricalJoint consty(2, 2, 1);
    consty.p.assign(4, 0.25);
    auto cc = constraints_from(consty);
    CHECK(cc.py.size() == 1);
    CHECK(cc.py[0] == doctest::Approx(1.0));
}

TEST_CASE("feasible_init builds the conditional independence coupling") {
    auto q = feasible_init(constraints_from(gate_xor()));
    for (double v : q.p) CHECK(v == doctest::Approx(0.125));

    CategoricalJoint p(2, 1, 2);
    p.at(0, 0, 0) = 0.5;
    p.at(1, 0, 1) = 0.5;
    auto q2 = feasible_init(constraints_from(p));
    for (std::size_t i = 0; i < p.p.size(); ++i) CHECK(q2.p[i] == doctest::Approx(p.p[i]));

    Rng rng(21);
    auto pr = random_joint(rng, 3, 3, 2);
    auto cons = constraints_from(pr);
    CHECK(marginal_residual(pr, feasible_init(cons)) <= 1e-12);
}

TEST_CASE("ipf_project leaves feasible points alone") {
    auto p = gate_and();
    auto cons = constraints_from(p);
    CvxConfig cfg;
    auto out = ipf_project(p, cons, cfg);
    for (std::size_t i = 0; i < p.p.size(); ++i)
        CHECK(out.p[i] == doctest::Approx(p.p[i]).epsilon(1e-12));
}

TEST_CASE("ipf_project reaches uniform targets") {
    CategoricalJoint q(2, 2, 1);
    q.at(0, 0, 0) = 0.4;
    q.at(0, 1, 0) = 0.3;
    q.at(1, 0, 0) = 0.2;
    q.at(1, 1, 0) = 0.1;
    TransportPolytopeSet cons;
    cons.n1 = cons.n2 = 2;
    cons.ny = 1;
    cons.marg1 = {0.5, 0.5};
    cons.marg2 = {0.5, 0.5};
    cons.py = {1.0};
    CvxConfig cfg;
    auto out = ipf_project(q, cons, cfg);
    for (int a = 0; a < 2; ++a) {
        CHECK(out.at(a, 0, 0) + out.at(a, 1, 0) == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(out.at(0, a, 0) + out.at(1, a, 0) == doctest::Approx(0.5).epsilon(1e-10));
    }
}

TEST_CASE("ipf_project is the KL projection onto the polytope") {
    CategoricalJoint p(2, 2, 1);
    p.at(0, 0, 0) = 0.30;
    p.at(0, 1, 0) = 0.20;
    p.at(1, 0, 0) = 0.25;
    p.at(1, 1, 0) = 0.25;
    auto cons = constraints_from(p);

    Rng rng(5);
    CategoricalJoint pert = feasible_init(cons);
    for (auto& v : pert.p) v *= 0.5 + rng.uniform();
    CvxConfig cfg;
    auto proj = ipf_project(pert, cons, cfg);
    CHECK(marginal_residual(p, proj) <= 1e-9);

    auto kl_vs_pert = [&](const CategoricalJoint& x) {
        double kl = 0.0;
        for (std::size_t i = 0; i < x.p.size(); ++i)
            if (x.p[i] > 0.0) kl += x.p[i] * std::log(x.p[i] / pert.p[i]);
        return kl;
    };
    // single free parameter t = q(0,0); scan the whole feasible segment
    double r0 = 0.5, c0 = 0.55;
    double t_lo = std::max(0.0, r0 + c0 - 1.0), t_hi = std::min(r0, c0);
    double best = 1e30;
    for (int i = 0; i <= 4000; ++i) {
        double t = t_lo + (t_hi - t_lo) * i / 4000.0;
        CategoricalJoint x(2, 2, 1);
        x.at(0, 0, 0) = t;
        x.at(0, 1, 0) = r0 - t;
        x.at(1, 0, 0) = c0 - t;
        x.at(1, 1, 0) = 1.0 - r0 - c0 + t;
        best = std::min(best, kl_vs_pert(x));
    }
    CHECK(kl_vs_pert(proj) <= best + 1e-6);
}

TEST_CASE("ipf_project flags infeasible support") {
    CategoricalJoint q(2, 2, 1);
    q.at(0, 0, 0) = 0.5;
    q.at(1, 1, 0) = 0.5;
    TransportPolytopeSet cons;
    cons.n1 = cons.n2 = 2;
    cons.ny = 1;
    cons.marg1 = {1.0, 0.0};
    cons.marg2 = {0.5, 0.5};
    cons.py = {1.0};
    CvxConfig cfg;
    CHECK_THROWS_AS(ipf_project(q, cons, cfg), numeric_error);
}

TEST_CASE("solve_maxent on xor reaches one bit of conditional entropy") {
    CvxConfig cfg;
    auto [q, diag] = solve_maxent(gate_xor(), cfg);
    CHECK(diag.conditional_entropy == doctest::Approx(ln2).epsilon(1e-9));
    CHECK(diag.converged);
    CHECK(diag.residual <= 10 * cfg.ipf_tol);
    for (double v : q.p) CHECK(v == doctest::Approx(0.125).epsilon(1e-8));
}

TEST_CASE("solve_maxent with a constant second input returns p itself") {
    CategoricalJoint p(2, 1, 2);
    p.at(0, 0, 0) = 0.4;
    p.at(0, 0, 1) = 0.1;
    p.at(1, 0, 1) = 0.5;
    CvxConfig cfg;
    auto [q, diag] = solve_maxent(p, cfg);
    for (std::size_t i = 0; i < p.p.size(); ++i)
        CHECK(q.p[i] == doctest::Approx(p.p[i]).epsilon(1e-10));
    CHECK(diag.converged);
}

TEST_CASE("solve_maxent on the and gate finds the half-bit optimum") {
    CvxConfig cfg;
    auto [q, diag] = solve_maxent(gate_and(), cfg);
    CHECK(diag.conditional_entropy == doctest::Approx(0.5 * ln2).epsilon(1e-6));
    CHECK(q.at(0, 0, 0) == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(q.at(1, 1, 0) == doctest::Approx(0.25).epsilon(1e-4));
    CHECK(q.at(1, 1, 1) == doctest::Approx(0.25).epsilon(1e-4));
}

TEST_CASE("solve_maxent objective history is monotone") {
    CvxConfig cfg;
    auto [q, diag] = solve_maxent(gate_and(), cfg);
    for (std::size_t i = 1; i < diag.objective_history.size(); ++i)
        CHECK(diag.objective_history[i] >= diag.objective_history[i - 1] - 1e-12);
    CHECK(diag.objective_history.size() == std::size_t(diag.outer_iterations) + 1);
}

TEST_CASE("solve_maxent drops labels that never occur") {
    CategoricalJoint p(2, 2, 3);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) p.at(a, b, (a ^ b) * 2) = 0.25;  // label 1 unused
    CvxConfig cfg;
    auto [q, diag] = solve_maxent(p, cfg);
    CHECK(q.ny == 3);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) CHECK(q.at(a, b, 1) == 0.0);
    CHECK(diag.conditional_entropy == doctest::Approx(ln2).epsilon(1e-9));
}

TEST_CASE("estimate_pid_cvx recovers the bitwise gate table") {
    CvxConfig cfg;
    auto rx = estimate_pid_cvx(gate_xor(), cfg, LogBase::bits);
    CHECK(rx.r == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    CHECK(rx.u1 == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    CHECK(rx.u2 == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
    CHECK(rx.s == doctest::Approx(1.0).epsilon(1e-6));

    auto ra = estimate_pid_cvx(gate_and(), cfg, LogBase::bits);
    CHECK(ra.r == doctest::Approx(0.3112781245).epsilon(1e-4));
    CHECK(ra.u1 == doctest::Approx(0.0).scale(1.0).epsilon(1e-4));
    CHECK(ra.u2 == doctest::Approx(0.0).scale(1.0).epsilon(1e-4));
    CHECK(ra.s == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(ra.total_mi == doctest::Approx(0.8112781245).epsilon(1e-9));

    auto ro = estimate_pid_cvx(gate_or(), cfg, LogBase::bits);
    CHECK(ro.r == doctest::Approx(0.3112781245).epsilon(1e-4));
    CHECK(ro.u1 == doctest::Approx(0.0).scale(1.0).epsilon(1e-4));
    CHECK(ro.u2 == doctest::Approx(0.0).scale(1.0).epsilon(1e-4));
    CHECK(ro.s == doctest::Approx(0.5).epsilon(1e-4));
}

TEST_CASE("estimate_pid_cvx on an independent target is all zeros") {
    CategoricalJoint p(2, 2, 2);
    p.p.assign(8, 0.125);
    CvxConfig cfg;
    auto r = estimate_pid_cvx(p, cfg, LogBase::bits);
    CHECK(r.r == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(r.u1 == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(r.u2 == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
    CHECK(r.s == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
}

TEST_CASE("estimate_pid_cvx satisfies the decomposition identities") {
    Rng rng(77);
    CvxConfig cfg;
    for (int trial = 0; trial < 5; ++trial) {
        auto p = random_joint(rng, 3, 2, 2);
        auto r = estimate_pid_cvx(p, cfg, LogBase::bits);
        auto res = consistency_residuals(p, r);
        for (double e : res) CHECK(e <= 1e-4);
        CHECK(r.r >= 0.0);
        CHECK(r.u1 >= 0.0);
        CHECK(r.u2 >= 0.0);
        CHECK(r.s >= -1e-9);
        CHECK(r.diag.residual <= 10 * cfg.ipf_tol);
    }
}

TEST_CASE("modality swap exchanges the unique components") {
    Rng rng(13);
    CvxConfig cfg;
    auto p = random_joint(rng, 2, 3, 2);
    CategoricalJoint swapped(3, 2, 2);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 3; ++b)
            for (int c = 0; c < 2; ++c) swapped.at(b, a, c) = p.at(a, b, c);
    auto r1 = estimate_pid_cvx(p, cfg, LogBase::bits);
    auto r2 = estimate_pid_cvx(swapped, cfg, LogBase::bits);
    CHECK(r1.r == doctest::Approx(r2.r).scale(1.0).epsilon(1e-5));
    CHECK(r1.u1 == doctest::Approx(r2.u2).scale(1.0).epsilon(1e-5));
    CHECK(r1.u2 == doctest::Approx(r2.u1).scale(1.0).epsilon(1e-5));
    CHECK(r1.s == doctest::Approx(r2.s).scale(1.0).epsilon(1e-5));
}

TEST_CASE("relabeling categories leaves the decomposition unchanged") {
    Rng rng(29);
    CvxConfig cfg;
    auto p = random_joint(rng, 3, 2, 2);
    int sig1[3] = {2, 0, 1};
    int sig2[2] = {1, 0};
    int sigy[2] = {1, 0};
    CategoricalJoint rel(3, 2, 2);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c) rel.at(sig1[a], sig2[b], sigy[c]) = p.at(a, b, c);
    auto r1 = estimate_pid_cvx(p, cfg, LogBase::bits);
    auto r2 = estimate_pid_cvx(rel, cfg, LogBase::bits);
    CHECK(r1.r == doctest::Approx(r2.r).scale(1.0).epsilon(1e-9));
    CHECK(r1.u1 == doctest::Approx(r2.u1).scale(1.0).epsilon(1e-9));
    CHECK(r1.u2 == doctest::Approx(r2.u2).scale(1.0).epsilon(1e-9));
    CHECK(r1.s == doctest::Approx(r2.s).scale(1.0).epsilon(1e-9));
}

TEST_CASE("brute force on xor finds pure synergy") {
    auto r = brute_force_pid(gate_xor(), 1e-4);
    CHECK(r.s == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(r.r == doctest::Approx(0.0).scale(1.0).epsilon(1e-3));
}

TEST_CASE("brute force with a trivial second input is the plug-in value") {
    CategoricalJoint p(3, 1, 2);
    p.at(0, 0, 0) = 0.3;
    p.at(1, 0, 0) = 0.2;
    p.at(1, 0, 1) = 0.1;
    p.at(2, 0, 1) = 0.4;
    auto r = brute_force_pid(p, 1e-4);
    auto direct = pid_from_optimum(p, p, LogBase::bits);
    CHECK(r.u1 == doctest::Approx(direct.u1).epsilon(1e-9));
    CHECK(r.r == doctest::Approx(direct.r).scale(1.0).epsilon(1e-9));
    CHECK(r.s == doctest::Approx(direct.s).scale(1.0).epsilon(1e-9));
}

TEST_CASE("brute force rejects large instances") {
    CategoricalJoint p(4, 4, 3);
    double w = 1.0 / p.p.size();
    for (auto& v : p.p) v = w;
    CHECK_THROWS_AS(brute_force_pid(p, 1e-3), std::invalid_argument);
}

TEST_CASE("solver matches the brute force oracle on random instances") {
    Rng rng(101);
    CvxConfig cfg;
    for (int trial = 0; trial < 8; ++trial) {
        auto p = random_joint(rng, 2, 2, 2);
        auto fast = estimate_pid_cvx(p, cfg, LogBase::bits);
        auto slow = brute_force_pid(p, 1e-4);
        CHECK(fast.r == doctest::Approx(slow.r).scale(1.0).epsilon(1e-3));
        CHECK(fast.u1 == doctest::Approx(slow.u1).scale(1.0).epsilon(1e-3));
        CHECK(fast.u2 == doctest::Approx(slow.u2).scale(1.0).epsilon(1e-3));
        CHECK(fast.s == doctest::Approx(slow.s).scale(1.0).epsilon(1e-3));
    }
    for (int trial = 0; trial < 2; ++trial) {
        auto p = random_joint(rng, 3, 3, 2);
        auto fast = estimate_pid_cvx(p, cfg, LogBase::bits);
        auto slow = brute_force_pid(p, 1e-4);
        CHECK(fast.r == doctest::Approx(slow.r).scale(1.0).epsilon(1e-3));
        CHECK(fast.u1 == doctest::Approx(slow.u1).scale(1.0).epsilon(1e-3));
        CHECK(fast.u2 == doctest::Approx(slow.u2).scale(1.0).epsilon(1e-3));
        CHECK(fast.s == doctest::Approx(slow.s).scale(1.0).epsilon(1e-3));
    }
}
