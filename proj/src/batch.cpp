#include "batch.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "discretize.hpp"
#include "info.hpp"

namespace pidlab {

namespace {

DenseTensor gaussian(int rows, int cols, double stddev, Rng& rng) {
    DenseTensor t({rows, cols});
    for (double& x : t.v) x = stddev * rng.normal();
    return t;
}

// feature rows extended with a one-hot block for one fixed label
DenseTensor with_label(const double* x, int m, int d, int classes, int label) {
    DenseTensor t({m, d + classes});
    for (int i = 0; i < m; ++i) {
        double* row = t.v.data() + std::size_t(i) * (d + classes);
        const double* src = x + std::size_t(i) * d;
        for (int j = 0; j < d; ++j) row[j] = src[j];
        row[d + label] = 1.0;
    }
    return t;
}

void softmax_rows(DenseTensor& t) {
    int n = t.rows(), c = t.cols();
    for (int i = 0; i < n; ++i) {
        double* row = t.v.data() + std::size_t(i) * c;
        double mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        double s = 0.0;
        for (int j = 0; j < c; ++j) {
            row[j] = std::exp(row[j] - mx);
            s += row[j];
        }
        for (int j = 0; j < c; ++j) row[j] /= s;
    }
}

std::vector<int> push_mlp(Tape& tape, const MlpParams& p, bool trainable) {
    return {tape.leaf(p.w1, trainable), tape.leaf(p.b1, trainable),
            tape.leaf(p.w2, trainable), tape.leaf(p.b2, trainable),
            tape.leaf(p.w3, trainable), tape.leaf(p.b3, trainable)};
}

int mlp_nodes(Tape& tape, const std::vector<int>& p, int x) {
    int h1 = tape.leaky_relu(tape.affine(x, p[0], p[1]));
    int h2 = tape.leaky_relu(tape.affine(h1, p[2], p[3]));
    return tape.affine(h2, p[4], p[5]);
}

struct HarmonizedTargets {
    DenseTensor row;  // m x classes
    DenseTensor col;
    std::vector<double> mass;  // per label, shared by both sides
};

// per-label masses of the two sides are averaged so both marginals are
// simultaneously attainable
HarmonizedTargets harmonize(const DenseTensor& row_t, const DenseTensor& col_t) {
    int m = row_t.rows(), classes = row_t.cols();
    HarmonizedTargets h{row_t, col_t, std::vector<double>(classes, 0.0)};
    for (int y = 0; y < classes; ++y) {
        double m1 = 0.0, m2 = 0.0;
        for (int i = 0; i < m; ++i) {
            m1 += row_t.at(i, y);
            m2 += col_t.at(i, y);
        }
        if (!(m1 > 0.0) || !(m2 > 0.0))
            throw numeric_error("sinkhorn_project: a label has zero target mass");
        double avg = 0.5 * (m1 + m2);
        for (int i = 0; i < m; ++i) {
            h.row.at(i, y) *= avg / m1;
            h.col.at(i, y) *= avg / m2;
        }
        h.mass[y] = avg;
    }
    return h;
}

void check_targets(const DenseTensor& t, int m, const char* name) {
    if (t.ndim() != 2 || t.rows() != m)
        throw std::invalid_argument(std::string("sinkhorn_project: bad ") + name + " shape");
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int y = 0; y < t.cols(); ++y) {
            if (t.at(i, y) < 0.0)
                throw std::invalid_argument("sinkhorn_project: negative target");
            s += t.at(i, y);
        }
        if (std::fabs(s - 1.0 / m) > 1e-8)
            throw std::invalid_argument("sinkhorn_project: target rows must sum to 1/m");
    }
}

std::vector<double> gather(const std::vector<double>& x, int d, const std::vector<long>& idx) {
    std::vector<double> out(idx.size() * std::size_t(d));
    for (std::size_t r = 0; r < idx.size(); ++r)
        std::copy_n(x.data() + std::size_t(idx[r]) * d, d, out.data() + r * d);
    return out;
}

// similarity slices with a per-slice max shift; scale per slice is irrelevant
// once the coupling is marginal-projected
DenseTensor similarity_shifted(const CouplingNet& net, const std::vector<double>& x1,
                               const std::vector<double>& x2, int m) {
    DenseTensor a({net.classes, m, m});
    for (int y = 0; y < net.classes; ++y) {
        DenseTensor h1 = mlp_forward(net.enc1, with_label(x1.data(), m, net.d1, net.classes, y));
        DenseTensor h2 = mlp_forward(net.enc2, with_label(x2.data(), m, net.d2, net.classes, y));
        double* slice = a.v.data() + std::size_t(y) * m * m;
        double mx = -1e300;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double dot = 0.0;
                for (int k = 0; k < net.feat; ++k) dot += h1.at(i, k) * h2.at(j, k);
                slice[std::size_t(i) * m + j] = dot;
                mx = std::max(mx, dot);
            }
        for (std::size_t c = 0; c < std::size_t(m) * m; ++c) slice[c] = std::exp(slice[c] - mx);
    }
    return a;
}

double label_mi_nats(const DenseTensor& probs, const std::vector<int>& y,
                     const std::vector<double>& marginal) {
    double acc = 0.0;
    long n = probs.rows();
    for (long i = 0; i < n; ++i) {
        double p = probs.at(int(i), y[std::size_t(i)]);
        if (!(p > 0.0)) throw numeric_error("label_mi: zero predicted probability");
        acc += std::log(p / marginal[std::size_t(y[std::size_t(i)])]);
    }
    return acc / double(n);
}

}  // namespace

void BatchConfig::validate() const {
    if (m < 2) throw std::invalid_argument("BatchConfig: m must be >= 2");
    if (epochs < 0) throw std::invalid_argument("BatchConfig: epochs must be >= 0");
    if (unimodal_epochs < 0)
        throw std::invalid_argument("BatchConfig: unimodal_epochs must be >= 0");
    if (!(lr > 0.0)) throw std::invalid_argument("BatchConfig: lr must be positive");
    if (sinkhorn_iters < 1) throw std::invalid_argument("BatchConfig: sinkhorn_iters must be >= 1");
    if (eval_batches < 1) throw std::invalid_argument("BatchConfig: eval_batches must be >= 1");
    if (hidden < 1) throw std::invalid_argument("BatchConfig: hidden must be >= 1");
}

MlpParams init_mlp(int in_dim, int hidden, int out_dim, Rng& rng) {
    MlpParams p;
    p.w1 = gaussian(in_dim, hidden, 1.0 / std::sqrt(double(in_dim)), rng);
    p.b1 = DenseTensor({hidden});
    p.w2 = gaussian(hidden, hidden, 1.0 / std::sqrt(double(hidden)), rng);
    p.b2 = DenseTensor({hidden});
    p.w3 = gaussian(hidden, out_dim, 1.0 / std::sqrt(double(hidden)), rng);
    p.b3 = DenseTensor({out_dim});
    return p;
}

DenseTensor mlp_forward(const MlpParams& p, const DenseTensor& x) {
    Tape tape;
    int xi = tape.leaf(x);
    int out = mlp_nodes(tape, push_mlp(tape, p, false), xi);
    return tape.value(out);
}

DenseTensor ConditionalModel::predict(const std::vector<double>& x, int n) const {
    if (std::size_t(n) * in_dim != x.size())
        throw std::invalid_argument("ConditionalModel::predict: input size mismatch");
    DenseTensor in({n, in_dim});
    in.v = x;
    DenseTensor out = mlp_forward(net, in);
    softmax_rows(out);
    return out;
}

double ConditionalModel::accuracy(const FeatureDataset& d) const {
    const std::vector<double>& x = modality == 1 ? d.x1 : d.x2;
    DenseTensor probs = predict(x, int(d.n));
    long hits = 0;
    for (long i = 0; i < d.n; ++i) {
        int best = 0;
        for (int c = 1; c < classes; ++c)
            if (probs.at(int(i), c) > probs.at(int(i), best)) best = c;
        if (best == d.y[std::size_t(i)]) ++hits;
    }
    return double(hits) / double(d.n);
}

ConditionalModel train_unimodal(const FeatureDataset& d, int modality, const BatchConfig& cfg) {
    d.validate();
    cfg.validate();
    if (modality != 1 && modality != 2)
        throw std::invalid_argument("train_unimodal: modality must be 1 or 2");

    ConditionalModel model;
    model.modality = modality;
    model.in_dim = modality == 1 ? d.d1 : d.d2;
    model.classes = d.classes;
    model.label_marginal.assign(std::size_t(d.classes), 0.0);
    for (long i = 0; i < d.n; ++i) model.label_marginal[std::size_t(d.y[std::size_t(i)])] += 1.0;
    int seen = 0;
    for (double& v : model.label_marginal) {
        if (v > 0.0) ++seen;
        v /= double(d.n);
    }
    if (seen < 2) throw std::invalid_argument("train_unimodal: labels are constant");

    Rng rng(mix_seed(cfg.seed, 0xC0u + std::uint64_t(modality)));
    model.net = init_mlp(model.in_dim, cfg.hidden, d.classes, rng);

    const std::vector<double>& x = modality == 1 ? d.x1 : d.x2;
    std::vector<long> order(std::size_t(d.n));
    for (long i = 0; i < d.n; ++i) order[std::size_t(i)] = i;

    std::vector<DenseTensor*> slots = {&model.net.w1, &model.net.b1, &model.net.w2,
                                       &model.net.b2, &model.net.w3, &model.net.b3};
    std::vector<AdamState> adam(slots.size());

    for (int epoch = 0; epoch < cfg.unimodal_epochs; ++epoch) {
        rng.shuffle(order);
        for (long start = 0; start < d.n; start += cfg.m) {
            long stop = std::min<long>(d.n, start + cfg.m);
            int b = int(stop - start);
            DenseTensor xb({b, model.in_dim});
            std::vector<int> yb(static_cast<std::size_t>(b));
            for (int r = 0; r < b; ++r) {
                long src = order[std::size_t(start + r)];
                std::copy_n(x.data() + std::size_t(src) * model.in_dim, model.in_dim,
                            xb.v.data() + std::size_t(r) * model.in_dim);
                yb[std::size_t(r)] = d.y[std::size_t(src)];
            }
            Tape tape;
            std::vector<int> params = push_mlp(tape, model.net, true);
            int logits = mlp_nodes(tape, params, tape.leaf(xb));
            int loss = tape.softmax_cross_entropy(logits, yb);
            std::vector<DenseTensor> grads = tape.backward(loss);
            for (std::size_t k = 0; k < slots.size(); ++k)
                adam_step(slots[k]->v, grads[std::size_t(params[k])].v, adam[k], cfg.lr);
        }
    }
    return model;
}

CouplingNet init_coupling(int d1, int d2, int classes, int hidden, std::uint64_t seed) {
    CouplingNet net;
    net.d1 = d1;
    net.d2 = d2;
    net.classes = classes;
    net.feat = hidden;
    Rng r1(mix_seed(seed, 21)), r2(mix_seed(seed, 22));
    net.enc1 = init_mlp(d1 + classes, hidden, hidden, r1);
    net.enc2 = init_mlp(d2 + classes, hidden, hidden, r2);
    return net;
}

DenseTensor similarity_logits(const CouplingNet& net, const std::vector<double>& x1,
                              const std::vector<double>& x2, int m) {
    if (x1.size() != std::size_t(m) * net.d1 || x2.size() != std::size_t(m) * net.d2)
        throw std::invalid_argument("similarity_logits: input size mismatch");
    DenseTensor a({net.classes, m, m});
    for (int y = 0; y < net.classes; ++y) {
        DenseTensor h1 = mlp_forward(net.enc1, with_label(x1.data(), m, net.d1, net.classes, y));
        DenseTensor h2 = mlp_forward(net.enc2, with_label(x2.data(), m, net.d2, net.classes, y));
        double* slice = a.v.data() + std::size_t(y) * m * m;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double dot = 0.0;
                for (int k = 0; k < net.feat; ++k) dot += h1.at(i, k) * h2.at(j, k);
                slice[std::size_t(i) * m + j] = std::exp(dot);
            }
    }
    return a;
}

BatchCoupling sinkhorn_project(const DenseTensor& a, const DenseTensor& row_targets,
                               const DenseTensor& col_targets, int iters) {
    if (a.ndim() != 3 || a.shape[1] != a.shape[2])
        throw std::invalid_argument("sinkhorn_project: similarity must be classes x m x m");
    int classes = a.shape[0], m = a.shape[1];
    check_targets(row_targets, m, "row targets");
    check_targets(col_targets, m, "col targets");
    if (row_targets.cols() != classes || col_targets.cols() != classes)
        throw std::invalid_argument("sinkhorn_project: target class count mismatch");
    for (double v : a.v)
        if (!(v > 0.0)) throw std::invalid_argument("sinkhorn_project: similarities must be positive");
    if (iters < 1) throw std::invalid_argument("sinkhorn_project: iters must be >= 1");

    HarmonizedTargets ht = harmonize(row_targets, col_targets);

    BatchCoupling out;
    out.m = m;
    out.classes = classes;
    out.row_targets = ht.row;
    out.col_targets = ht.col;
    out.q.assign(std::size_t(classes), DenseTensor({m, m}));

    for (int y = 0; y < classes; ++y) {
        DenseTensor& q = out.q[std::size_t(y)];
        std::copy_n(a.v.data() + std::size_t(y) * m * m, std::size_t(m) * m, q.v.data());
        for (int t = 0; t < iters; ++t) {
            for (int i = 0; i < m; ++i) {
                double s = 0.0;
                for (int j = 0; j < m; ++j) s += q.at(i, j);
                double f = ht.row.at(i, y) / s;
                for (int j = 0; j < m; ++j) q.at(i, j) *= f;
            }
            for (int j = 0; j < m; ++j) {
                double s = 0.0;
                for (int i = 0; i < m; ++i) s += q.at(i, j);
                double f = ht.col.at(j, y) / s;
                for (int i = 0; i < m; ++i) q.at(i, j) *= f;
            }
        }
    }

    double res = 0.0;
    for (int y = 0; y < classes; ++y) {
        const DenseTensor& q = out.q[std::size_t(y)];
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int j = 0; j < m; ++j) s += q.at(i, j);
            res = std::max(res, std::fabs(s - ht.row.at(i, y)));
        }
        for (int j = 0; j < m; ++j) {
            double s = 0.0;
            for (int i = 0; i < m; ++i) s += q.at(i, j);
            res = std::max(res, std::fabs(s - ht.col.at(j, y)));
        }
    }
    out.residual = res;
    return out;
}

int sample_x2(const BatchCoupling& c, int i, int y, Rng& rng) {
    const DenseTensor& q = c.q.at(std::size_t(y));
    double total = 0.0;
    for (int j = 0; j < c.m; ++j) total += q.at(i, j);
    if (!(total > 0.0)) throw numeric_error("sample_x2: empty conditional");
    double u = rng.uniform() * total, acc = 0.0;
    for (int j = 0; j < c.m; ++j) {
        acc += q.at(i, j);
        if (u < acc) return j;
    }
    return c.m - 1;
}

double batch_objective(const BatchCoupling& c, const DenseTensor& pred1,
                       const std::vector<int>& y, Rng* rng) {
    int m = c.m, classes = c.classes;
    if (pred1.ndim() != 2 || pred1.rows() != m || pred1.cols() != classes)
        throw std::invalid_argument("batch_objective: predictions must be m x classes");
    if (int(y.size()) != m) throw std::invalid_argument("batch_objective: label count mismatch");

    // row-conditional slices q(j | i, y)
    std::vector<DenseTensor> cond(std::size_t(classes), DenseTensor({m, m}));
    for (int lab = 0; lab < classes; ++lab) {
        const DenseTensor& q = c.q[std::size_t(lab)];
        DenseTensor& dst = cond[std::size_t(lab)];
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int j = 0; j < m; ++j) s += q.at(i, j);
            if (!(s > 0.0)) throw numeric_error("batch_objective: empty conditional row");
            for (int j = 0; j < m; ++j) dst.at(i, j) = q.at(i, j) / s;
        }
    }

    double acc = 0.0;
    std::vector<double> weights(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        int lab = y[std::size_t(i)];
        if (lab < 0 || lab >= classes)
            throw std::invalid_argument("batch_objective: label out of range");
        const DenseTensor& sel = cond[std::size_t(lab)];
        auto term = [&](int j) {
            double mix = 0.0;
            for (int ly = 0; ly < classes; ++ly)
                mix += cond[std::size_t(ly)].at(i, j) * pred1.at(i, ly);
            return std::log(sel.at(i, j)) - std::log(mix);
        };
        if (rng != nullptr) {
            for (int j = 0; j < m; ++j) weights[std::size_t(j)] = sel.at(i, j);
            acc += term(int(rng->categorical(weights)));
        } else {
            double inner = 0.0;
            for (int j = 0; j < m; ++j) inner += sel.at(i, j) * term(j);
            acc += inner;
        }
    }
    return acc / double(m);
}

CouplingLossGraph build_coupling_loss(Tape& tape, const CouplingNet& net,
                                      const std::vector<double>& x1,
                                      const std::vector<double>& x2, const std::vector<int>& y,
                                      int m, const DenseTensor& pred1, const DenseTensor& pred2,
                                      int sinkhorn_iters, bool trainable) {
    if (int(y.size()) != m) throw std::invalid_argument("build_coupling_loss: label count");
    DenseTensor row_t = pred1, col_t = pred2;
    for (double& v : row_t.v) v /= double(m);
    for (double& v : col_t.v) v /= double(m);
    HarmonizedTargets ht = harmonize(row_t, col_t);

    CouplingLossGraph g;
    std::vector<int> p1 = push_mlp(tape, net.enc1, trainable);
    std::vector<int> p2 = push_mlp(tape, net.enc2, trainable);
    g.params = p1;
    g.params.insert(g.params.end(), p2.begin(), p2.end());

    int sel = -1, mix = -1;
    for (int lab = 0; lab < net.classes; ++lab) {
        int in1 = tape.leaf(with_label(x1.data(), m, net.d1, net.classes, lab));
        int in2 = tape.leaf(with_label(x2.data(), m, net.d2, net.classes, lab));
        int k = tape.exp_shift(tape.matmul_nt(mlp_nodes(tape, p1, in1), mlp_nodes(tape, p2, in2)));
        DenseTensor rt({m}), ct({m}), ind({m}), pw({m});
        for (int i = 0; i < m; ++i) {
            rt.v[std::size_t(i)] = ht.row.at(i, lab);
            ct.v[std::size_t(i)] = ht.col.at(i, lab);
            ind.v[std::size_t(i)] = y[std::size_t(i)] == lab ? 1.0 : 0.0;
            pw.v[std::size_t(i)] = pred1.at(i, lab);
        }
        for (int t = 0; t < sinkhorn_iters; ++t) {
            k = tape.scale_rows(tape.row_normalize(k), rt);
            k = tape.scale_cols(tape.col_normalize(k), ct);
        }
        int cond = tape.row_normalize(k);
        int sel_part = tape.scale_rows(cond, ind);
        int mix_part = tape.scale_rows(cond, pw);
        sel = lab == 0 ? sel_part : tape.add(sel, sel_part);
        mix = lab == 0 ? mix_part : tape.add(mix, mix_part);
    }
    // mean over rows of sum_j sel (log sel - log mix); each sel row sums to one
    int diff = tape.sub(tape.log_fn(sel), tape.log_fn(mix));
    g.loss = tape.scale(tape.sum_all(tape.mul(sel, diff)), 1.0 / double(m));
    return g;
}

CouplingResult train_coupling(const FeatureDataset& d, const ConditionalModel& model1,
                              const ConditionalModel& model2, const BatchConfig& cfg) {
    d.validate();
    cfg.validate();
    if (model1.in_dim != d.d1 || model2.in_dim != d.d2 || model1.classes != d.classes ||
        model2.classes != d.classes)
        throw std::invalid_argument("train_coupling: model shapes do not match the dataset");

    CouplingResult out;
    out.net = init_coupling(d.d1, d.d2, d.classes, cfg.hidden, mix_seed(cfg.seed, 31));
    Rng rng(mix_seed(cfg.seed, 32));

    std::vector<DenseTensor*> slots = {&out.net.enc1.w1, &out.net.enc1.b1, &out.net.enc1.w2,
                                       &out.net.enc1.b2, &out.net.enc1.w3, &out.net.enc1.b3,
                                       &out.net.enc2.w1, &out.net.enc2.b1, &out.net.enc2.w2,
                                       &out.net.enc2.b2, &out.net.enc2.w3, &out.net.enc2.b3};
    std::vector<AdamState> adam(slots.size());

    long batches = std::max<long>(1, d.n / cfg.m);
    std::vector<long> idx(static_cast<std::size_t>(cfg.m));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (long b = 0; b < batches; ++b) {
            for (int r = 0; r < cfg.m; ++r) idx[std::size_t(r)] = long(rng.below(std::uint64_t(d.n)));
            std::vector<double> x1b = gather(d.x1, d.d1, idx);
            std::vector<double> x2b = gather(d.x2, d.d2, idx);
            std::vector<int> yb(static_cast<std::size_t>(cfg.m));
            for (int r = 0; r < cfg.m; ++r) yb[std::size_t(r)] = d.y[std::size_t(idx[std::size_t(r)])];
            DenseTensor pred1 = model1.predict(x1b, cfg.m);
            DenseTensor pred2 = model2.predict(x2b, cfg.m);

            Tape tape;
            CouplingLossGraph g = build_coupling_loss(tape, out.net, x1b, x2b, yb, cfg.m, pred1,
                                                      pred2, cfg.sinkhorn_iters, true);
            double loss = tape.value(g.loss).v[0];
            if (!std::isfinite(loss))
                throw numeric_error("train_coupling: objective is not finite at epoch " +
                                    std::to_string(epoch) + ", batch " + std::to_string(b));
            out.loss_history.push_back(loss);
            std::vector<DenseTensor> grads = tape.backward(g.loss);
            for (std::size_t k = 0; k < slots.size(); ++k)
                adam_step(slots[k]->v, grads[std::size_t(g.params[k])].v, adam[k], cfg.lr);
        }
    }
    return out;
}

double coupling_mi(const BatchCoupling& c) {
    int m = c.m, classes = c.classes;
    std::vector<double> mass(std::size_t(classes), 0.0);
    double total = 0.0;
    for (int y = 0; y < classes; ++y) {
        for (int i = 0; i < m; ++i) mass[std::size_t(y)] += c.row_targets.at(i, y);
        total += mass[std::size_t(y)];
    }

    // conditionals q(j | i, y) with their row masses
    std::vector<DenseTensor> cond(std::size_t(classes), DenseTensor({m, m}));
    for (int y = 0; y < classes; ++y) {
        const DenseTensor& q = c.q[std::size_t(y)];
        for (int i = 0; i < m; ++i) {
            double s = 0.0;
            for (int j = 0; j < m; ++j) s += q.at(i, j);
            if (!(s > 0.0)) throw numeric_error("coupling_mi: empty conditional row");
            for (int j = 0; j < m; ++j) cond[std::size_t(y)].at(i, j) = q.at(i, j) / s;
        }
    }

    double acc = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            double denom = 0.0;
            for (int y = 0; y < classes; ++y)
                denom += cond[std::size_t(y)].at(i, j) * c.row_targets.at(i, y);
            for (int y = 0; y < classes; ++y) {
                double w = cond[std::size_t(y)].at(i, j) * c.row_targets.at(i, y);
                if (w <= 0.0) continue;
                acc += w * std::log(w * total / (denom * mass[std::size_t(y)]));
            }
        }
    }
    return acc / total;
}

PidResult estimate_pid_batch(const FeatureDataset& d, const BatchConfig& cfg, LogBase base,
                             const std::vector<double>* multimodal_row_cond) {
    auto t0 = std::chrono::steady_clock::now();
    d.validate();
    cfg.validate();
    if (multimodal_row_cond != nullptr && long(multimodal_row_cond->size()) != d.n)
        throw std::invalid_argument("estimate_pid_batch: multimodal prediction count mismatch");

    ConditionalModel m1 = train_unimodal(d, 1, cfg);
    ConditionalModel m2 = train_unimodal(d, 2, cfg);
    CouplingResult cr = train_coupling(d, m1, m2, cfg);

    DenseTensor full1 = m1.predict(d.x1, int(d.n));
    DenseTensor full2 = m2.predict(d.x2, int(d.n));
    double ip1 = label_mi_nats(full1, d.y, m1.label_marginal);
    double ip2 = label_mi_nats(full2, d.y, m2.label_marginal);

    Rng rng(mix_seed(cfg.seed, 33));
    double iqt = 0.0, worst_residual = 0.0;
    std::vector<long> idx(static_cast<std::size_t>(cfg.m));
    for (int b = 0; b < cfg.eval_batches; ++b) {
        for (int r = 0; r < cfg.m; ++r) idx[std::size_t(r)] = long(rng.below(std::uint64_t(d.n)));
        std::vector<double> x1b = gather(d.x1, d.d1, idx);
        std::vector<double> x2b = gather(d.x2, d.d2, idx);
        DenseTensor row_t = m1.predict(x1b, cfg.m);
        DenseTensor col_t = m2.predict(x2b, cfg.m);
        for (double& v : row_t.v) v /= double(cfg.m);
        for (double& v : col_t.v) v /= double(cfg.m);
        DenseTensor a = similarity_shifted(cr.net, x1b, x2b, cfg.m);
        BatchCoupling coupling = sinkhorn_project(a, row_t, col_t, cfg.sinkhorn_iters);
        worst_residual = std::max(worst_residual, coupling.residual);
        iqt += coupling_mi(coupling);
    }
    iqt /= double(cfg.eval_batches);

    double ip12 = std::numeric_limits<double>::quiet_NaN();
    if (multimodal_row_cond != nullptr) {
        double acc = 0.0;
        for (long i = 0; i < d.n; ++i) {
            double p = (*multimodal_row_cond)[std::size_t(i)];
            if (!(p > 0.0))
                throw numeric_error("estimate_pid_batch: nonpositive multimodal probability");
            acc += std::log(p / m1.label_marginal[std::size_t(d.y[std::size_t(i)])]);
        }
        ip12 = acc / double(d.n);
    } else if (!cfg.skip_joint_mi) {
        ClusterOptions opts;
        opts.k = int(std::min<long>(opts.k, d.n));
        DiscretizeResult dr = cluster_dataset(d, opts, mix_seed(cfg.seed, 34));
        ip12 = joint_mi(empirical_joint(dr.data), LogBase::nats).value;
    }

    PidResult res;
    res.base = LogBase::nats;
    res.u1 = iqt - ip2;
    res.u2 = iqt - ip1;
    res.r = cfg.literal_r ? iqt : ip1 + ip2 - iqt;
    res.s = std::isfinite(ip12) ? ip12 - iqt : ip12;
    res.total_mi = ip12;

    double min_raw = 0.0;
    auto clamp = [&min_raw](double& v) {
        if (!std::isfinite(v)) return;
        if (v < 0.0) {
            min_raw = std::min(min_raw, v);
            if (v >= -1e-6) v = 0.0;
        }
    };
    clamp(res.r);
    clamp(res.u1);
    clamp(res.u2);
    clamp(res.s);

    res.diag.iterations = long(cr.loss_history.size());
    res.diag.objective = cr.loss_history.empty() ? 0.0 : cr.loss_history.back();
    res.diag.residual = worst_residual;
    res.diag.converged = true;
    res.diag.min_raw_component = min_raw;
    res.diag.s_present = std::isfinite(res.s);
    res.diag.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res.to(base);
}

}  // namespace pidlab
