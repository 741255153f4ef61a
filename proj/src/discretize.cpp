#include "discretize.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "rng.hpp"

namespace pidlab {

long long BinningCodebook::categories() const {
    long long total = 1;
    for (int j = 0; j < dims; ++j) {
        total *= bins(j);
        if (total > 10'000'000)
            throw std::invalid_argument("binned category space exceeds 1e7 cells");
    }
    return total;
}

namespace {

std::vector<double> uniform_edges(double lo, double hi, int bins) {
    std::vector<double> e(bins + 1);
    for (int j = 0; j <= bins; ++j) e[j] = lo + double(j) * (hi - lo) / double(bins);
    return e;
}

}  // namespace

BinningCodebook fit_bins(const std::vector<double>& data, int n, int d, int bins_per_dim) {
    if (n < 2) throw std::invalid_argument("fit_bins: need at least 2 rows");
    if (data.size() != std::size_t(n) * d) throw std::invalid_argument("fit_bins: bad shape");
    int bins = bins_per_dim;
    if (bins == auto_bins) bins = std::min(100, int(std::lround(2.0 * std::cbrt(double(n)))));
    if (bins < 2) throw std::invalid_argument("fit_bins: need at least 2 bins");

    BinningCodebook cb;
    cb.dims = d;
    cb.edges.resize(d);
    for (int j = 0; j < d; ++j) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            double v = data[std::size_t(i) * d + j];
            if (std::isnan(v)) throw std::invalid_argument("fit_bins: NaN input");
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (lo == hi) {
            cb.edges[j] = {lo - 0.5, lo + 0.5};
            cb.warnings.push_back("dimension " + std::to_string(j) +
                                  " is constant; using a single bin");
        } else {
            cb.edges[j] = uniform_edges(lo, hi, bins);
        }
    }
    return cb;
}

BinningCodebook fixed_bins(double lo, double hi, int bins, int dims) {
    if (!(lo < hi) || bins < 1 || dims < 1) throw std::invalid_argument("fixed_bins: bad range");
    BinningCodebook cb;
    cb.dims = dims;
    cb.edges.assign(dims, uniform_edges(lo, hi, bins));
    return cb;
}

std::vector<int> apply_bins(const BinningCodebook& cb, const std::vector<double>& data, int n) {
    if (data.size() != std::size_t(n) * cb.dims)
        throw std::invalid_argument("apply_bins: bad shape");
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i) {
        long long id = 0;
        for (int j = 0; j < cb.dims; ++j) {
            double v = data[std::size_t(i) * cb.dims + j];
            if (std::isnan(v)) throw std::invalid_argument("apply_bins: NaN input");
            const auto& e = cb.edges[j];
            // half-open [e_b, e_{b+1}); out-of-range values land in the end bins
            auto it = std::upper_bound(e.begin(), e.end(), v);
            int b = int(it - e.begin()) - 1;
            b = std::clamp(b, 0, cb.bins(j) - 1);
            id = id * cb.bins(j) + b;
        }
        ids[i] = int(id);
    }
    return ids;
}

PcaModel fit_pca(const std::vector<double>& data, int n, int d, int out_dim) {
    if (out_dim < 1 || out_dim > d) throw std::invalid_argument("fit_pca: out_dim out of range");
    if (n < 2 || data.size() != std::size_t(n) * d)
        throw std::invalid_argument("fit_pca: bad shape");

    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(
        data.data(), n, d);
    Eigen::RowVectorXd mean = X.colwise().mean();
    Eigen::MatrixXd C = X.rowwise() - mean;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeThinU | Eigen::ComputeThinV);

    PcaModel m;
    m.in_dim = d;
    m.out_dim = out_dim;
    m.mean.assign(mean.data(), mean.data() + d);
    m.components.resize(std::size_t(out_dim) * d);
    m.variances.resize(out_dim);
    const auto& V = svd.matrixV();
    const auto& S = svd.singularValues();
    int avail = int(S.size());
    for (int c = 0; c < out_dim; ++c) {
        double var = c < avail ? S(c) * S(c) / double(n) : 0.0;
        m.variances[c] = var;
        for (int j = 0; j < d; ++j)
            m.components[std::size_t(c) * d + j] = c < avail ? V(j, c) : 0.0;
    }
    double total = 0.0;
    for (int c = 0; c < avail; ++c) total += S(c) * S(c) / double(n);
    double kept = 0.0;
    for (double v : m.variances) kept += v;
    m.discarded_variance = std::max(0.0, total - kept);

    double scale = S.size() > 0 ? S(0) : 0.0;
    for (int c = 0; c < out_dim; ++c)
        if (c >= avail || S(c) <= 1e-12 * std::max(1.0, scale)) {
            m.warnings.push_back("component " + std::to_string(c) +
                                 " has (near) zero variance; input rank deficient");
            break;
        }
    return m;
}

std::vector<double> apply_pca(const PcaModel& m, const std::vector<double>& data, int n) {
    if (data.size() != std::size_t(n) * m.in_dim)
        throw std::invalid_argument("apply_pca: bad shape");
    std::vector<double> out(std::size_t(n) * m.out_dim, 0.0);
    for (int i = 0; i < n; ++i) {
        const double* row = data.data() + std::size_t(i) * m.in_dim;
        for (int c = 0; c < m.out_dim; ++c) {
            const double* comp = m.components.data() + std::size_t(c) * m.in_dim;
            double acc = 0.0;
            for (int j = 0; j < m.in_dim; ++j) acc += (row[j] - m.mean[j]) * comp[j];
            out[std::size_t(i) * m.out_dim + c] = acc;
        }
    }
    return out;
}

namespace {

double sq_dist(const double* a, const double* b, int d) {
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
        double t = a[j] - b[j];
        acc += t * t;
    }
    return acc;
}

int nearest_centroid(const double* row, const std::vector<double>& centroids, int k, int d) {
    int best = 0;
    double best_d = sq_dist(row, centroids.data(), d);
    for (int c = 1; c < k; ++c) {
        double dd = sq_dist(row, centroids.data() + std::size_t(c) * d, d);
        if (dd < best_d) {
            best_d = dd;
            best = c;
        }
    }
    return best;
}

}  // namespace

ClusterCodebook fit_kmeans(const std::vector<double>& data, int n, int d, int k,
                           std::uint64_t seed, int max_iters) {
    if (k < 1 || k > n) throw std::invalid_argument("fit_kmeans: need 1 <= k <= n");
    if (data.size() != std::size_t(n) * d) throw std::invalid_argument("fit_kmeans: bad shape");

    Rng rng(seed);
    ClusterCodebook cb;
    cb.k = k;
    cb.dim = d;
    cb.centroids.resize(std::size_t(k) * d);

    // k-means++ seeding
    auto copy_point = [&](int c, int i) {
        std::copy_n(data.data() + std::size_t(i) * d, d, cb.centroids.data() + std::size_t(c) * d);
    };
    copy_point(0, int(rng.below(n)));
    std::vector<double> d2(n);
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            double best = sq_dist(data.data() + std::size_t(i) * d, cb.centroids.data(), d);
            for (int cc = 1; cc < c; ++cc)
                best = std::min(best, sq_dist(data.data() + std::size_t(i) * d,
                                              cb.centroids.data() + std::size_t(cc) * d, d));
            d2[i] = best;
            total += best;
        }
        copy_point(c, total > 0.0 ? int(rng.categorical(d2)) : int(rng.below(n)));
    }

    std::vector<int> assign(n, -1);
    double prev_inertia = std::numeric_limits<double>::infinity();
    bool reseeded_last = false;
    for (int iter = 0; iter < max_iters; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (int i = 0; i < n; ++i) {
            const double* row = data.data() + std::size_t(i) * d;
            int c = nearest_centroid(row, cb.centroids, k, d);
            inertia += sq_dist(row, cb.centroids.data() + std::size_t(c) * d, d);
            if (c != assign[i]) {
                assign[i] = c;
                changed = true;
            }
        }
        if (!reseeded_last && inertia > prev_inertia + 1e-9 * (1.0 + prev_inertia))
            throw numeric_error("fit_kmeans: inertia increased between iterations");
        prev_inertia = inertia;
        cb.inertia = inertia;
        cb.iterations = iter + 1;
        if (!changed && iter > 0) break;

        std::vector<double> sums(std::size_t(k) * d, 0.0);
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            ++counts[assign[i]];
            for (int j = 0; j < d; ++j)
                sums[std::size_t(assign[i]) * d + j] += data[std::size_t(i) * d + j];
        }
        reseeded_last = false;
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // restart an orphaned centroid at the point farthest from it
                int far = 0;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    double dd = sq_dist(data.data() + std::size_t(i) * d,
                                        cb.centroids.data() + std::size_t(c) * d, d);
                    if (dd > far_d) {
                        far_d = dd;
                        far = i;
                    }
                }
                copy_point(c, far);
                reseeded_last = true;
            } else {
                for (int j = 0; j < d; ++j)
                    cb.centroids[std::size_t(c) * d + j] = sums[std::size_t(c) * d + j] / counts[c];
            }
        }
    }
    return cb;
}

std::vector<int> assign_clusters(const ClusterCodebook& cb, const std::vector<double>& data,
                                 int n) {
    const std::vector<double>* pts = &data;
    std::vector<double> projected;
    if (cb.pca) {
        projected = apply_pca(*cb.pca, data, n);
        pts = &projected;
    }
    if (pts->size() != std::size_t(n) * cb.dim)
        throw std::invalid_argument("assign_clusters: bad shape");
    std::vector<int> ids(n);
    for (int i = 0; i < n; ++i)
        ids[i] = nearest_centroid(pts->data() + std::size_t(i) * cb.dim, cb.centroids, cb.k,
                                  cb.dim);
    return ids;
}

ClusterCodebook fit_cluster_codebook(const std::vector<double>& data, int n, int d,
                                     const ClusterOptions& opts, std::uint64_t seed) {
    if (d > opts.pca_dim) {
        PcaModel pca = fit_pca(data, n, d, opts.pca_dim);
        auto reduced = apply_pca(pca, data, n);
        ClusterCodebook cb = fit_kmeans(reduced, n, opts.pca_dim, opts.k, seed, opts.max_iters);
        cb.pca = std::move(pca);
        return cb;
    }
    return fit_kmeans(data, n, d, opts.k, seed, opts.max_iters);
}

DiscreteDataset apply_cluster_codebooks(const FeatureDataset& f, const ClusterCodebook& b1,
                                        const ClusterCodebook& b2) {
    DiscreteDataset d;
    d.n = f.n;
    d.k1 = b1.k;
    d.k2 = b2.k;
    d.classes = f.classes;
    d.split = f.split;
    d.c1 = assign_clusters(b1, f.x1, f.n);
    d.c2 = assign_clusters(b2, f.x2, f.n);
    d.y = f.y;
    d.validate();
    return d;
}

DiscretizeResult cluster_dataset(const FeatureDataset& f, const ClusterOptions& opts,
                                 std::uint64_t seed) {
    f.validate();
    DiscretizeResult r;
    r.book1 = fit_cluster_codebook(f.x1, f.n, f.d1, opts, mix_seed(seed, 1));
    r.book2 = fit_cluster_codebook(f.x2, f.n, f.d2, opts, mix_seed(seed, 2));
    r.data = apply_cluster_codebooks(f, r.book1, r.book2);
    return r;
}

DiscreteDataset bin_dataset(const FeatureDataset& f, const BinningCodebook& b1,
                            const BinningCodebook& b2) {
    f.validate();
    DiscreteDataset d;
    d.n = f.n;
    d.k1 = int(b1.categories());
    d.k2 = int(b2.categories());
    d.classes = f.classes;
    d.split = f.split;
    d.c1 = apply_bins(b1, f.x1, f.n);
    d.c2 = apply_bins(b2, f.x2, f.n);
    d.y = f.y;
    d.validate();
    return d;
}

CategoricalJoint empirical_joint(const DiscreteDataset& d) {
    d.validate();
    if (d.n < 1) throw std::invalid_argument("empirical_joint: empty dataset");
    CategoricalJoint j(d.k1, d.k2, d.classes);
    double w = 1.0 / double(d.n);
    for (int i = 0; i < d.n; ++i) j.at(d.c1[i], d.c2[i], d.y[i]) += w;
    return j;
}

}  // namespace pidlab
