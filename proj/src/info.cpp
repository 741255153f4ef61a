#include "info.hpp"

#include <cmath>

namespace pidlab {

namespace {

// -sum p ln p over any nonnegative vector (not necessarily validated)
double ent_nats(const std::vector<double>& v) {
    double h = 0.0;
    for (double x : v)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

InfoValue tag(double nats, LogBase base) { return InfoValue{nats, LogBase::nats}.to(base); }

}  // namespace

InfoValue entropy(const std::vector<double>& dist, LogBase base) {
    double s = 0.0;
    for (double x : dist) {
        if (std::isnan(x) || x < 0.0)
            throw std::invalid_argument("entropy: negative or NaN entry");
        s += x;
    }
    if (std::fabs(s - 1.0) > 1e-9)
        throw std::invalid_argument("entropy: input sums to " + std::to_string(s));
    return tag(ent_nats(dist), base);
}

InfoValue mutual_information(const std::vector<double>& joint, int rows, int cols, LogBase base) {
    if (rows < 1 || cols < 1 || joint.size() != std::size_t(rows) * cols)
        throw std::invalid_argument("mutual_information: bad shape");
    double s = 0.0;
    for (double x : joint) {
        if (std::isnan(x) || x < 0.0)
            throw std::invalid_argument("mutual_information: negative or NaN entry");
        s += x;
    }
    if (std::fabs(s - 1.0) > 1e-9)
        throw std::invalid_argument("mutual_information: not normalized");

    std::vector<double> pa(rows, 0.0), pb(cols, 0.0);
    for (int a = 0; a < rows; ++a)
        for (int b = 0; b < cols; ++b) {
            pa[a] += joint[std::size_t(a) * cols + b];
            pb[b] += joint[std::size_t(a) * cols + b];
        }
    double mi = 0.0;
    for (int a = 0; a < rows; ++a)
        for (int b = 0; b < cols; ++b) {
            double pab = joint[std::size_t(a) * cols + b];
            if (pab == 0.0) continue;
            double denom = pa[a] * pb[b];
            if (denom == 0.0)
                throw std::invalid_argument("mutual_information: zero marginal under positive cell");
            mi += pab * std::log(pab / denom);
        }
    return tag(mi, base);
}

std::vector<double> marginal_x1y(const CategoricalJoint& j) {
    std::vector<double> m(std::size_t(j.n1) * j.ny, 0.0);
    for (int a = 0; a < j.n1; ++a)
        for (int b = 0; b < j.n2; ++b)
            for (int c = 0; c < j.ny; ++c) m[std::size_t(a) * j.ny + c] += j.at(a, b, c);
    return m;
}

std::vector<double> marginal_x2y(const CategoricalJoint& j) {
    std::vector<double> m(std::size_t(j.n2) * j.ny, 0.0);
    for (int a = 0; a < j.n1; ++a)
        for (int b = 0; b < j.n2; ++b)
            for (int c = 0; c < j.ny; ++c) m[std::size_t(b) * j.ny + c] += j.at(a, b, c);
    return m;
}

std::vector<double> marginal_y(const CategoricalJoint& j) {
    std::vector<double> m(j.ny, 0.0);
    for (std::size_t i = 0; i < j.p.size(); ++i) m[i % j.ny] += j.p[i];
    return m;
}

InfoValue pairwise_mi_x1(const CategoricalJoint& j, LogBase base) {
    return mutual_information(marginal_x1y(j), j.n1, j.ny, base);
}

InfoValue pairwise_mi_x2(const CategoricalJoint& j, LogBase base) {
    return mutual_information(marginal_x2y(j), j.n2, j.ny, base);
}

InfoValue conditional_mi(const CategoricalJoint& j, CondMi which, LogBase base) {
    j.validate();
    // I(A;Y|B) = H(A,B) + H(B,Y) - H(B) - H(A,B,Y) with (A,B) = (X1,X2) or (X2,X1)
    std::vector<double> pab(std::size_t(j.n1) * j.n2, 0.0);
    std::vector<double> pb, pby;
    int nb;
    if (which == CondMi::x1y_given_x2) {
        nb = j.n2;
        pby = marginal_x2y(j);
    } else {
        nb = j.n1;
        pby = marginal_x1y(j);
    }
    pb.assign(nb, 0.0);
    for (int b = 0; b < nb; ++b)
        for (int c = 0; c < j.ny; ++c) pb[b] += pby[std::size_t(b) * j.ny + c];
    for (int a = 0; a < j.n1; ++a)
        for (int b = 0; b < j.n2; ++b)
            for (int c = 0; c < j.ny; ++c) pab[std::size_t(a) * j.n2 + b] += j.at(a, b, c);

    double h_ab = ent_nats(pab);
    double h_by = ent_nats(pby);
    double h_b = ent_nats(pb);
    double h_aby = ent_nats(j.p);
    double v = h_ab + h_by - h_b - h_aby;
    if (v < 0.0 && v > -1e-12) v = 0.0;
    return tag(v, base);
}

InfoValue joint_mi(const CategoricalJoint& j, LogBase base) {
    j.validate();
    std::vector<double> pab(std::size_t(j.n1) * j.n2, 0.0);
    for (int a = 0; a < j.n1; ++a)
        for (int b = 0; b < j.n2; ++b)
            for (int c = 0; c < j.ny; ++c) pab[std::size_t(a) * j.n2 + b] += j.at(a, b, c);
    double v = ent_nats(pab) + ent_nats(marginal_y(j)) - ent_nats(j.p);
    if (v < 0.0 && v > -1e-12) v = 0.0;
    return tag(v, base);
}

InfoValue co_information(const CategoricalJoint& j, LogBase base) {
    double v = pairwise_mi_x1(j, LogBase::nats).value + pairwise_mi_x2(j, LogBase::nats).value -
               joint_mi(j, LogBase::nats).value;
    return tag(v, base);
}

double marginal_residual(const CategoricalJoint& p, const CategoricalJoint& q) {
    if (p.n1 != q.n1 || p.n2 != q.n2 || p.ny != q.ny)
        throw std::invalid_argument("marginal_residual: dimension mismatch");
    auto m1p = marginal_x1y(p), m1q = marginal_x1y(q);
    auto m2p = marginal_x2y(p), m2q = marginal_x2y(q);
    double r = 0.0;
    for (std::size_t i = 0; i < m1p.size(); ++i) r = std::max(r, std::fabs(m1p[i] - m1q[i]));
    for (std::size_t i = 0; i < m2p.size(); ++i) r = std::max(r, std::fabs(m2p[i] - m2q[i]));
    return r;
}

namespace {

double clamp_component(double v, double& min_raw) {
    min_raw = std::min(min_raw, v);
    if (v < 0.0 && v >= -1e-6) return 0.0;
    return v;
}

}  // namespace

PidResult pid_from_optimum(const CategoricalJoint& p, const CategoricalJoint& q_star,
                           LogBase base) {
    p.validate();
    q_star.validate();
    double res = marginal_residual(p, q_star);
    if (res > 1e-8)
        throw numeric_error("pid_from_optimum: q_star infeasible, marginal residual " +
                            std::to_string(res));

    double u1 = conditional_mi(q_star, CondMi::x1y_given_x2, LogBase::nats).value;
    double u2 = conditional_mi(q_star, CondMi::x2y_given_x1, LogBase::nats).value;
    double i1 = pairwise_mi_x1(p, LogBase::nats).value;
    double total = joint_mi(p, LogBase::nats).value;
    double r = i1 - u1;
    double s = total - joint_mi(q_star, LogBase::nats).value;

    PidResult out;
    out.base = LogBase::nats;
    out.diag.residual = res;
    double min_raw = 0.0;
    out.r = clamp_component(r, min_raw);
    out.u1 = clamp_component(u1, min_raw);
    out.u2 = clamp_component(u2, min_raw);
    out.s = clamp_component(s, min_raw);
    out.total_mi = total;
    out.diag.min_raw_component = min_raw;
    return out.to(base);
}

std::array<double, 5> consistency_residuals(const CategoricalJoint& p, const PidResult& result) {
    LogBase b = result.base;
    double i1 = pairwise_mi_x1(p, b).value;
    double i2 = pairwise_mi_x2(p, b).value;
    double i12 = joint_mi(p, b).value;
    double c1 = conditional_mi(p, CondMi::x1y_given_x2, b).value;
    double c2 = conditional_mi(p, CondMi::x2y_given_x1, b).value;
    return {std::fabs(result.r + result.u1 - i1),
            std::fabs(result.r + result.u2 - i2),
            std::fabs(result.r + result.u1 + result.u2 + result.s - i12),
            std::fabs(result.u1 + result.s - c1),
            std::fabs(result.u2 + result.s - c2)};
}

}  // namespace pidlab
