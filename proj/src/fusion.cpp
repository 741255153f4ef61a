#include "fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "cvx.hpp"
#include "rng.hpp"

namespace pidlab {

namespace {

constexpr int kCode = 32;    // per-modality encoder width
constexpr int kHidden = 32;  // head hidden width

DenseTensor gauss_matrix(int rows, int cols, Rng& rng) {
    DenseTensor t({rows, cols});
    double s = 1.0 / std::sqrt(double(rows));
    for (double& x : t.v) x = s * rng.normal();
    return t;
}

AffineParams init_affine(int in, int out, Rng& rng) {
    AffineParams p;
    p.w = gauss_matrix(in, out, rng);
    p.b = DenseTensor({out});
    return p;
}

HeadParams init_head(int in, int classes, Rng& rng) {
    HeadParams h;
    h.w1 = gauss_matrix(in, kHidden, rng);
    h.b1 = DenseTensor({kHidden});
    h.w2 = gauss_matrix(kHidden, classes, rng);
    h.b2 = DenseTensor({classes});
    return h;
}

FusionModel init_model(FusionKind kind, int d1, int d2, int classes, Rng& rng) {
    FusionModel m;
    m.kind = kind;
    m.d1 = d1;
    m.d2 = d2;
    m.classes = classes;
    switch (kind) {
        case FusionKind::early_fusion:
            m.encoders.push_back(init_affine(d1 + d2, kCode, rng));
            m.heads.push_back(init_head(kCode, classes, rng));
            break;
        case FusionKind::additive:
            m.encoders.push_back(init_affine(d1, kCode, rng));
            m.encoders.push_back(init_affine(d2, kCode, rng));
            m.heads.push_back(init_head(kCode, classes, rng));
            m.heads.push_back(init_head(kCode, classes, rng));
            break;
        case FusionKind::elementwise:
            m.encoders.push_back(init_affine(d1, kCode, rng));
            m.encoders.push_back(init_affine(d2, kCode, rng));
            m.heads.push_back(init_head(kCode, classes, rng));
            break;
        case FusionKind::tensor:
            m.encoders.push_back(init_affine(d1, kCode, rng));
            m.encoders.push_back(init_affine(d2, kCode, rng));
            m.heads.push_back(init_head(kCode * kCode, classes, rng));
            break;
        case FusionKind::unimodal_x1:
            m.encoders.push_back(init_affine(d1, kCode, rng));
            m.heads.push_back(init_head(kCode, classes, rng));
            break;
        case FusionKind::unimodal_x2:
            m.encoders.push_back(init_affine(d2, kCode, rng));
            m.heads.push_back(init_head(kCode, classes, rng));
            break;
    }
    return m;
}

// pointers into the model in a fixed order, mirrored by the graph's param ids
std::vector<DenseTensor*> param_slots(FusionModel& m) {
    std::vector<DenseTensor*> s;
    for (auto& e : m.encoders) {
        s.push_back(&e.w);
        s.push_back(&e.b);
    }
    for (auto& h : m.heads) {
        s.push_back(&h.w1);
        s.push_back(&h.b1);
        s.push_back(&h.w2);
        s.push_back(&h.b2);
    }
    return s;
}

struct Graph {
    int logits = -1;
    std::vector<int> params;  // leaf ids, param_slots order
};

Graph fusion_graph(Tape& t, const FusionModel& m, const DenseTensor& x1b, const DenseTensor& x2b,
                   bool trainable) {
    Graph g;
    std::vector<int> ew, eb;
    for (const auto& e : m.encoders) {
        ew.push_back(t.leaf(e.w, trainable));
        eb.push_back(t.leaf(e.b, trainable));
        g.params.push_back(ew.back());
        g.params.push_back(eb.back());
    }
    struct HeadIds {
        int w1, b1, w2, b2;
    };
    std::vector<HeadIds> hs;
    for (const auto& h : m.heads) {
        HeadIds ids{t.leaf(h.w1, trainable), t.leaf(h.b1, trainable), t.leaf(h.w2, trainable),
                    t.leaf(h.b2, trainable)};
        hs.push_back(ids);
        g.params.push_back(ids.w1);
        g.params.push_back(ids.b1);
        g.params.push_back(ids.w2);
        g.params.push_back(ids.b2);
    }
    auto head = [&](int hi, int x) {
        int a = t.affine(x, hs[hi].w1, hs[hi].b1);
        return t.affine(t.leaky_relu(a), hs[hi].w2, hs[hi].b2);
    };
    switch (m.kind) {
        case FusionKind::early_fusion: {
            int n = x1b.rows();
            DenseTensor xc({n, m.d1 + m.d2});
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < m.d1; ++j) xc.at(i, j) = x1b.at(i, j);
                for (int j = 0; j < m.d2; ++j) xc.at(i, m.d1 + j) = x2b.at(i, j);
            }
            int x = t.leaf(std::move(xc));
            g.logits = head(0, t.affine(x, ew[0], eb[0]));
            break;
        }
        case FusionKind::additive: {
            int e1 = t.affine(t.leaf(x1b), ew[0], eb[0]);
            int e2 = t.affine(t.leaf(x2b), ew[1], eb[1]);
            g.logits = t.scale(t.add(head(0, e1), head(1, e2)), 0.5);
            break;
        }
        case FusionKind::elementwise: {
            int e1 = t.affine(t.leaf(x1b), ew[0], eb[0]);
            int e2 = t.affine(t.leaf(x2b), ew[1], eb[1]);
            g.logits = head(0, t.mul(e1, e2));
            break;
        }
        case FusionKind::tensor: {
            int e1 = t.affine(t.leaf(x1b), ew[0], eb[0]);
            int e2 = t.affine(t.leaf(x2b), ew[1], eb[1]);
            g.logits = head(0, t.outer_rows(e1, e2));
            break;
        }
        case FusionKind::unimodal_x1:
            g.logits = head(0, t.affine(t.leaf(x1b), ew[0], eb[0]));
            break;
        case FusionKind::unimodal_x2:
            g.logits = head(0, t.affine(t.leaf(x2b), ew[0], eb[0]));
            break;
    }
    return g;
}

void gather_rows(const std::vector<double>& src, int dim, const std::vector<int>& idx, int from,
                 int count, DenseTensor& out) {
    for (int i = 0; i < count; ++i) {
        const double* r = src.data() + std::size_t(idx[from + i]) * dim;
        std::copy(r, r + dim, out.v.begin() + std::size_t(i) * dim);
    }
}

}  // namespace

std::string fusion_kind_name(FusionKind k) {
    switch (k) {
        case FusionKind::early_fusion: return "early_fusion";
        case FusionKind::additive: return "additive";
        case FusionKind::elementwise: return "elementwise";
        case FusionKind::tensor: return "tensor";
        case FusionKind::unimodal_x1: return "unimodal_x1";
        case FusionKind::unimodal_x2: return "unimodal_x2";
    }
    throw std::logic_error("fusion_kind_name: bad kind");
}

FusionKind fusion_kind_from(const std::string& name) {
    for (FusionKind k : {FusionKind::early_fusion, FusionKind::additive, FusionKind::elementwise,
                         FusionKind::tensor, FusionKind::unimodal_x1, FusionKind::unimodal_x2}) {
        if (name == fusion_kind_name(k)) return k;
    }
    throw std::invalid_argument("fusion_kind_from: unknown kind '" + name + "'");
}

void TrainConfig::validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw std::invalid_argument("TrainConfig: lr must be positive");
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be nonnegative");
    if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be positive");
}

DenseTensor FusionModel::logits(const std::vector<double>& x1, const std::vector<double>& x2,
                                long n) const {
    if (n < 1) throw std::invalid_argument("FusionModel::logits: need at least one row");
    if (x1.size() != std::size_t(n) * d1 || x2.size() != std::size_t(n) * d2)
        throw std::invalid_argument("FusionModel::logits: feature sizes disagree with n");
    DenseTensor out({int(n), classes});
    const long chunk = 4096;  // bounds tape memory on wide graphs
    for (long s = 0; s < n; s += chunk) {
        int bs = int(std::min(n - s, chunk));
        DenseTensor x1b({bs, d1}), x2b({bs, d2});
        std::copy(x1.begin() + std::size_t(s) * d1, x1.begin() + std::size_t(s + bs) * d1,
                  x1b.v.begin());
        std::copy(x2.begin() + std::size_t(s) * d2, x2.begin() + std::size_t(s + bs) * d2,
                  x2b.v.begin());
        Tape t;
        Graph g = fusion_graph(t, *this, x1b, x2b, false);
        const DenseTensor& lg = t.value(g.logits);
        std::copy(lg.v.begin(), lg.v.end(), out.v.begin() + std::size_t(s) * classes);
    }
    return out;
}

DenseTensor FusionModel::probabilities(const std::vector<double>& x1,
                                       const std::vector<double>& x2, long n) const {
    DenseTensor p = logits(x1, x2, n);
    for (long i = 0; i < n; ++i) {
        double hi = p.at(int(i), 0);
        for (int c = 1; c < classes; ++c) hi = std::max(hi, p.at(int(i), c));
        double total = 0.0;
        for (int c = 0; c < classes; ++c) {
            double e = std::exp(p.at(int(i), c) - hi);
            p.at(int(i), c) = e;
            total += e;
        }
        for (int c = 0; c < classes; ++c) p.at(int(i), c) /= total;
    }
    return p;
}

std::vector<int> FusionModel::predict(const FeatureDataset& d) const {
    if (d.d1 != d1 || d.d2 != d2)
        throw std::invalid_argument("FusionModel::predict: feature widths disagree with the model");
    DenseTensor lg = logits(d.x1, d.x2, d.n);
    std::vector<int> out(std::size_t(d.n));
    for (long i = 0; i < d.n; ++i) {
        int best = 0;
        for (int c = 1; c < classes; ++c)
            if (lg.at(int(i), c) > lg.at(int(i), best)) best = c;
        out[std::size_t(i)] = best;
    }
    return out;
}

double FusionModel::accuracy(const FeatureDataset& d) const {
    std::vector<int> pred = predict(d);
    long hits = 0;
    for (long i = 0; i < d.n; ++i)
        if (pred[std::size_t(i)] == d.y[std::size_t(i)]) ++hits;
    return double(hits) / double(d.n);
}

FusionTrainResult train_fusion(FusionKind kind, const FeatureDataset& train,
                               const FeatureDataset& val, const TrainConfig& cfg) {
    cfg.validate();
    train.validate();
    val.validate();
    if (val.d1 != train.d1 || val.d2 != train.d2 || val.classes != train.classes)
        throw std::invalid_argument("train_fusion: val dimensions disagree with train");
    if (train.classes < 2) throw std::invalid_argument("train_fusion: need at least two classes");

    Rng init_rng(mix_seed(cfg.seed, 0xF5 + std::uint64_t(int(kind))));
    FusionModel model = init_model(kind, train.d1, train.d2, train.classes, init_rng);

    model.mean1.assign(std::size_t(train.d1), 0.0);
    model.mean2.assign(std::size_t(train.d2), 0.0);
    for (long i = 0; i < train.n; ++i) {
        const double* r1 = train.row1(i);
        const double* r2 = train.row2(i);
        for (int j = 0; j < train.d1; ++j) model.mean1[std::size_t(j)] += r1[j];
        for (int j = 0; j < train.d2; ++j) model.mean2[std::size_t(j)] += r2[j];
    }
    for (double& v : model.mean1) v /= double(train.n);
    for (double& v : model.mean2) v /= double(train.n);

    std::vector<DenseTensor*> slots = param_slots(model);
    std::vector<AdamState> adam(slots.size());
    Rng order_rng(mix_seed(cfg.seed, 0xE1));
    std::vector<int> order(std::size_t(train.n));
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        for (long start = 0; start < train.n; start += cfg.batch) {
            int bs = int(std::min<long>(cfg.batch, train.n - start));
            DenseTensor x1b({bs, train.d1}), x2b({bs, train.d2});
            gather_rows(train.x1, train.d1, order, int(start), bs, x1b);
            gather_rows(train.x2, train.d2, order, int(start), bs, x2b);
            std::vector<int> yb(static_cast<std::size_t>(bs));
            for (int i = 0; i < bs; ++i) yb[std::size_t(i)] = train.y[std::size_t(order[start + i])];

            Tape t;
            Graph g = fusion_graph(t, model, x1b, x2b, true);
            int loss = t.softmax_cross_entropy(g.logits, std::move(yb));
            std::vector<DenseTensor> grads = t.backward(loss);
            for (std::size_t k = 0; k < slots.size(); ++k)
                adam_step(slots[k]->v, grads[std::size_t(g.params[k])].v, adam[k], cfg.lr);
        }
    }

    FusionTrainResult out;
    out.model = std::move(model);
    out.train_acc = out.model.accuracy(train);
    out.val_acc = out.model.accuracy(val);
    return out;
}

FeatureDataset predict_dataset(const FusionModel& m, const FeatureDataset& d) {
    FeatureDataset out = d;
    out.y = m.predict(d);
    out.classes = m.classes;
    return out;
}

PidResult quantify_model(const FusionModel& m, const FeatureDataset& d, const ClusterOptions& opts,
                         std::uint64_t cluster_seed, PidEstimator est, LogBase base,
                         const BatchConfig& batch_cfg) {
    FeatureDataset pd = predict_dataset(m, d);
    if (est == PidEstimator::cvx) {
        DiscretizeResult disc = cluster_dataset(pd, opts, cluster_seed);
        return estimate_pid_cvx(empirical_joint(disc.data), {}, base);
    }
    return estimate_pid_batch(pd, batch_cfg, base);
}

double robustness_drop(const FusionModel& m, const FeatureDataset& d, int modality) {
    if (modality != 1 && modality != 2)
        throw std::invalid_argument("robustness_drop: modality must be 1 or 2");
    const std::vector<double>& mean = modality == 1 ? m.mean1 : m.mean2;
    int dim = modality == 1 ? m.d1 : m.d2;
    if (int(mean.size()) != dim)
        throw std::invalid_argument("robustness_drop: model carries no training means");
    double base_acc = m.accuracy(d);
    FeatureDataset dd = d;
    std::vector<double>& x = modality == 1 ? dd.x1 : dd.x2;
    for (long i = 0; i < dd.n; ++i)
        std::copy(mean.begin(), mean.end(), x.begin() + std::size_t(i) * dim);
    return base_acc - m.accuracy(dd);
}

}  // namespace pidlab
