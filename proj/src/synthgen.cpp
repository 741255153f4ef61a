#include "synthgen.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rng.hpp"

namespace pidlab {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kLabelFeatures = 32;
constexpr int kOwnDirections = 3;
constexpr int kSharedDirections = 1;
constexpr int kViewRank = 10;
constexpr double kLabelGain = 1.0;

int gate_output(Gate gate, int a, int b) {
    switch (gate) {
        case Gate::AND: return a & b;
        case Gate::OR: return a | b;
        default: return a ^ b;
    }
}

// matrix with N(0, 1/sqrt(cols)) entries, row-major
std::vector<double> random_map(int rows, int cols, Rng& rng) {
    std::vector<double> m(std::size_t(rows) * cols);
    double s = 1.0 / std::sqrt(double(cols));
    for (double& v : m) v = s * rng.normal();
    return m;
}

using Mat = Eigen::MatrixXd;

Mat orthonormalize(const Mat& m) {
    Eigen::HouseholderQR<Mat> qr(m);
    long k = std::min(m.rows(), m.cols());
    return Mat(qr.householderQ() * Mat::Identity(m.rows(), k));
}

// top principal directions of a modality, from the linearized mixing map
Mat view_projector(const std::vector<double>& t, int rows, int cols, int rank);

// Gram of a latent column block as seen through a modality's top principal
// subspace; image energy outside that subspace does not count
Mat retained_gram(const std::vector<double>& t, const Mat& proj, int cols, int start, int dim) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> tm(
        t.data(), proj.rows(), cols);
    Mat m = proj.transpose() * tm.middleCols(start, dim);
    return Mat(m.transpose() * m);
}

// top-k eigenvectors, descending eigenvalue order
Mat top_eigvecs(const Mat& g, int k) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(g);
    int take = int(std::min<long>(k, g.cols()));
    Mat out(g.rows(), take);
    for (int i = 0; i < take; ++i) out.col(i) = eig.eigenvectors().col(g.cols() - 1 - i);
    return out;
}

Mat view_projector(const std::vector<double>& t, int rows, int cols, int rank) {
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> tm(
        t.data(), rows, cols);
    return top_eigvecs(Mat(tm * tm.transpose()), rank);
}

// directions visible in both modalities: maximize the weaker side's image
// variance over a weight grid
Mat balanced_eigvecs(const Mat& ga, const Mat& gb, int k) {
    Mat best;
    double best_score = -1.0;
    for (int i = 1; i < 20; ++i) {
        double wgt = i / 20.0;
        Mat cand = top_eigvecs(Mat(wgt * ga + (1.0 - wgt) * gb), k);
        double worst = std::numeric_limits<double>::infinity();
        for (long j = 0; j < cand.cols(); ++j) {
            double va = cand.col(j).dot(ga * cand.col(j));
            double vb = cand.col(j).dot(gb * cand.col(j));
            worst = std::min(worst, std::min(va, vb));
        }
        if (worst > best_score) {
            best_score = worst;
            best = cand;
        }
    }
    return best;
}

}  // namespace

DiscreteDataset gen_bitwise(Gate gate, long n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gen_bitwise: n must be >= 1");
    DiscreteDataset d;
    d.n = n;
    d.k1 = 2;
    d.k2 = 2;
    d.classes = 2;
    d.c1.resize(std::size_t(n));
    d.c2.resize(std::size_t(n));
    d.y.resize(std::size_t(n));
    Rng rng(seed);
    for (long i = 0; i < n; ++i) {
        int a = int(rng.below(2)), b = int(rng.below(2));
        d.c1[std::size_t(i)] = a;
        d.c2[std::size_t(i)] = b;
        d.y[std::size_t(i)] = gate_output(gate, a, b);
    }
    return d;
}

void GmmSpec::validate() const {
    if (!(mean_norm >= 0.0) || !std::isfinite(mean_norm))
        throw std::invalid_argument("GmmSpec: mean norm must be finite and >= 0");
    if (!(angle >= 0.0) || !(angle <= kPi / 2.0))
        throw std::invalid_argument("GmmSpec: angle must lie in [0, pi/2]");
    if (n < 1) throw std::invalid_argument("GmmSpec: n must be >= 1");
}

std::pair<double, double> to_polar_signed(double a, double b) {
    double rho = std::hypot(a, b);
    double phi = std::atan2(b, a);
    if (phi < 0.0) return {-rho, phi + kPi};
    return {rho, phi};
}

std::pair<double, double> to_polar_standard(double a, double b) {
    return {std::hypot(a, b), std::atan2(b, a)};
}

FeatureDataset gen_gmm(const GmmSpec& spec) {
    spec.validate();
    if (spec.labels == GmmLabels::hard && spec.mean_norm == 0.0)
        throw std::invalid_argument("gen_gmm: hard labels need a nonzero mean");

    double mu1 = spec.mean_norm * std::cos(spec.angle);
    double mu2 = spec.mean_norm * std::sin(spec.angle);

    FeatureDataset d;
    d.n = spec.n;
    d.d1 = 1;
    d.d2 = 1;
    d.classes = 2;
    d.x1.resize(std::size_t(spec.n));
    d.x2.resize(std::size_t(spec.n));
    d.y.resize(std::size_t(spec.n));

    Rng rng(spec.seed);
    for (long i = 0; i < spec.n; ++i) {
        double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        double a = sign * mu1 + rng.normal();
        double b = sign * mu2 + rng.normal();
        int label;
        if (spec.labels == GmmLabels::hard)
            label = a * mu1 + b * mu2 >= 0.0 ? 1 : 0;
        else
            label = sign > 0.0 ? 1 : 0;
        if (spec.coords == GmmCoords::polar_signed) {
            auto [r, theta] = to_polar_signed(a, b);
            a = r;
            b = theta;
        } else if (spec.coords == GmmCoords::polar_standard) {
            auto [r, theta] = to_polar_standard(a, b);
            a = r;
            b = theta;
        }
        d.x1[std::size_t(i)] = a;
        d.x2[std::size_t(i)] = b;
        d.y[std::size_t(i)] = label;
    }
    return d;
}

void LatentSpec::validate() const {
    if (latent_dim < 2) throw std::invalid_argument("LatentSpec: latent_dim must be >= 2");
    if (!(sigma > 0.0)) throw std::invalid_argument("LatentSpec: sigma must be positive");
    if (out_dim < 1) throw std::invalid_argument("LatentSpec: out_dim must be >= 1");
    if (sources.empty()) throw std::invalid_argument("LatentSpec: at least one label source");
    for (const LatentSource& s : sources)
        if (s.which < 0 || s.which > 2)
            throw std::invalid_argument("LatentSpec: unknown label source");
    if (!(dropout >= 0.0) || !(dropout < 1.0))
        throw std::invalid_argument("LatentSpec: dropout must lie in [0, 1)");
    if (n < 1) throw std::invalid_argument("LatentSpec: n must be >= 1");
}

FeatureDataset gen_latent(const LatentSpec& spec) {
    spec.validate();
    int ld = spec.latent_dim;
    int concat = 2 * ld;

    Rng t1_rng(mix_seed(spec.seed, 1)), t2_rng(mix_seed(spec.seed, 2));
    std::vector<double> t1 = random_map(spec.out_dim, concat, t1_rng);
    std::vector<double> t2 = random_map(spec.out_dim, concat, t2_rng);

    int label_dim = 0;
    for (const LatentSource& s : spec.sources) label_dim += s.half ? ld / 2 : ld;

    // The label map reads each source along latent directions that dominate
    // the observable variance of the corresponding modality; the common
    // source uses directions visible in both. Directions are weighted to
    // contribute equally in observable terms. A label along arbitrary latent
    // directions is invisible in any low-rank view of x, and compression
    // downstream would erase exactly the signal these datasets carry.
    int k_own = std::min(kOwnDirections, ld);
    int rank = std::min(kViewRank, spec.out_dim);
    Mat p1 = view_projector(t1, spec.out_dim, concat, rank);
    Mat p2 = view_projector(t2, spec.out_dim, concat, rank);
    Mat g1_own = retained_gram(t1, p1, concat, 0, ld);
    Mat g2_own = retained_gram(t2, p2, concat, 0, ld);
    Mat g1_shared = retained_gram(t1, p1, concat, ld, ld);
    Mat g2_shared = retained_gram(t2, p2, concat, ld, ld);
    Mat own1 = top_eigvecs(g1_own, k_own);
    Mat own2 = top_eigvecs(g2_own, k_own);
    Mat shared = balanced_eigvecs(g1_shared, g2_shared, std::min(kSharedDirections, ld));

    std::vector<Mat> bases;
    std::vector<Eigen::VectorXd> col_scale;  // 1 / image standard deviation
    for (const LatentSource& s : spec.sources) {
        const Mat& full = s.which == 0 ? own1 : (s.which == 1 ? own2 : shared);
        Mat b = s.half ? orthonormalize(full.topRows(ld / 2)) : full;
        long hd = b.rows();
        Eigen::VectorXd sc(b.cols());
        for (long j = 0; j < b.cols(); ++j) {
            double v;
            if (s.which == 0)
                v = b.col(j).dot(g1_own.topLeftCorner(hd, hd) * b.col(j));
            else if (s.which == 1)
                v = b.col(j).dot(g2_own.topLeftCorner(hd, hd) * b.col(j));
            else
                v = std::min(b.col(j).dot(g1_shared.topLeftCorner(hd, hd) * b.col(j)),
                             b.col(j).dot(g2_shared.topLeftCorner(hd, hd) * b.col(j)));
            sc[j] = 1.0 / std::sqrt(std::max(v, 1e-12));
        }
        bases.push_back(std::move(b));
        col_scale.push_back(std::move(sc));
    }

    double norm_acc = 0.0;
    for (std::size_t si = 0; si < spec.sources.size(); ++si) {
        int take = spec.sources[si].half ? ld / 2 : ld;
        norm_acc += double(take) / (double(label_dim) * double(bases[si].cols())) *
                    col_scale[si].squaredNorm();
    }
    double gain = kLabelGain / std::sqrt(std::max(norm_acc, 1e-300));

    // Row signs are aligned so every feature reads a statistic the same way;
    // the summed readout then stays monotone in it instead of cancelling.
    // When two own sources are present, each feature reads both with the same
    // magnitudes but an independent sign, which balances the modalities and
    // keeps the interaction between them that only the pair can resolve.
    int n_own = 0;
    for (const LatentSource& s : spec.sources)
        if (s.which != 2) ++n_own;

    Rng map_rng(mix_seed(spec.seed, 3));
    std::vector<double> w(std::size_t(kLabelFeatures) * label_dim);
    Eigen::VectorXd own_mag(k_own);
    for (int r = 0; r < kLabelFeatures; ++r) {
        if (n_own >= 2)
            for (long j = 0; j < k_own; ++j) own_mag[j] = std::abs(map_rng.normal());
        int pos = 0;
        for (std::size_t si = 0; si < spec.sources.size(); ++si) {
            const Mat& basis = bases[si];
            int take = spec.sources[si].half ? ld / 2 : ld;
            double a = std::sqrt(double(take) / (double(label_dim) * double(basis.cols())));
            bool paired = n_own >= 2 && spec.sources[si].which != 2;
            double sign = paired && map_rng.uniform() < 0.5 ? -1.0 : 1.0;
            Eigen::VectorXd g(basis.cols());
            for (long j = 0; j < basis.cols(); ++j) {
                double mag = paired ? own_mag[j] : std::abs(map_rng.normal());
                g[j] = sign * mag * col_scale[si][j];
            }
            Eigen::VectorXd block = basis * (g * (a * gain));
            for (int c = 0; c < take; ++c) w[std::size_t(r) * label_dim + pos + c] = block[c];
            pos += take;
        }
    }
    std::vector<double> bias(kLabelFeatures);
    for (double& v : bias) v = 0.1 * map_rng.normal();

    FeatureDataset d;
    d.n = spec.n;
    d.d1 = spec.out_dim;
    d.d2 = spec.out_dim;
    d.classes = 2;
    d.x1.resize(std::size_t(spec.n) * spec.out_dim);
    d.x2.resize(std::size_t(spec.n) * spec.out_dim);
    d.y.resize(std::size_t(spec.n));

    Rng rng(mix_seed(spec.seed, 4));
    std::vector<double> z1(static_cast<std::size_t>(ld)), z2(static_cast<std::size_t>(ld)),
        zc(static_cast<std::size_t>(ld));
    std::vector<double> u(static_cast<std::size_t>(concat)),
        lab(static_cast<std::size_t>(label_dim));
    for (long i = 0; i < spec.n; ++i) {
        for (double& v : z1) v = spec.sigma * rng.normal();
        for (double& v : z2) v = spec.sigma * rng.normal();
        for (double& v : zc) v = spec.sigma * rng.normal();

        for (int m = 0; m < 2; ++m) {
            const std::vector<double>& zm = m == 0 ? z1 : z2;
            const std::vector<double>& t = m == 0 ? t1 : t2;
            std::copy(zm.begin(), zm.end(), u.begin());
            std::copy(zc.begin(), zc.end(), u.begin() + ld);
            double* out = (m == 0 ? d.x1 : d.x2).data() + std::size_t(i) * spec.out_dim;
            for (int r = 0; r < spec.out_dim; ++r) {
                double acc = 0.0;
                const double* row = t.data() + std::size_t(r) * concat;
                for (int c = 0; c < concat; ++c) acc += row[c] * u[std::size_t(c)];
                out[r] = std::tanh(acc) + 0.1 * rng.normal();
            }
        }

        int pos = 0;
        for (const LatentSource& s : spec.sources) {
            const std::vector<double>& z = s.which == 0 ? z1 : (s.which == 1 ? z2 : zc);
            int take = s.half ? ld / 2 : ld;
            std::copy_n(z.begin(), take, lab.begin() + pos);
            pos += take;
        }
        double acc = 0.0;
        for (int r = 0; r < kLabelFeatures; ++r) {
            double pre = bias[std::size_t(r)];
            const double* row = w.data() + std::size_t(r) * label_dim;
            for (int c = 0; c < label_dim; ++c) pre += row[c] * lab[std::size_t(c)];
            double keep = rng.uniform() < spec.dropout ? 0.0 : 1.0;
            acc += keep * std::tanh(pre);
        }
        d.y[std::size_t(i)] = acc / double(kLabelFeatures) >= 0.0 ? 1 : 0;
    }
    return d;
}

std::vector<NamedDataset> latent_suite(std::uint64_t seed, long train_n, long val_n) {
    if (train_n < 1 || val_n < 0)
        throw std::invalid_argument("latent_suite: need train rows and nonnegative val rows");

    const LatentSource z1{0, false}, z2{1, false}, zc{2, false};
    const LatentSource z1h{0, true}, z2h{1, true}, zch{2, true};
    struct Entry {
        const char* name;
        std::vector<LatentSource> sources;
    };
    const std::vector<Entry> table = {
        {"zc", {zc}},
        {"z1", {z1}},
        {"z2", {z2}},
        {"z1-z2", {z1, z2}},
        {"z1s-z2s-zcs", {z1h, z2h, zch}},
        {"z1-z2s-zcs", {z1, z2h, zch}},
        {"z1-z2-zcs", {z1, z2, zch}},
        {"z1s-z2s-zc", {z1h, z2h, zc}},
        {"z2s-zcs", {z2h, zch}},
        {"z2s-zc", {z2h, zc}},
    };

    std::vector<NamedDataset> out;
    out.reserve(table.size());
    for (std::size_t i = 0; i < table.size(); ++i) {
        LatentSpec spec;
        spec.sources = table[i].sources;
        spec.n = train_n + val_n;
        spec.seed = mix_seed(seed, 100 + i);
        FeatureDataset all = gen_latent(spec);

        NamedDataset nd;
        nd.name = table[i].name;
        nd.train.n = train_n;
        nd.train.d1 = all.d1;
        nd.train.d2 = all.d2;
        nd.train.classes = all.classes;
        nd.train.split = Split::train;
        nd.train.x1.assign(all.x1.begin(), all.x1.begin() + train_n * all.d1);
        nd.train.x2.assign(all.x2.begin(), all.x2.begin() + train_n * all.d2);
        nd.train.y.assign(all.y.begin(), all.y.begin() + train_n);

        nd.val.n = val_n;
        nd.val.d1 = all.d1;
        nd.val.d2 = all.d2;
        nd.val.classes = all.classes;
        nd.val.split = Split::val;
        if (val_n > 0) {
            nd.val.x1.assign(all.x1.begin() + train_n * all.d1, all.x1.end());
            nd.val.x2.assign(all.x2.begin() + train_n * all.d2, all.x2.end());
            nd.val.y.assign(all.y.begin() + train_n, all.y.end());
        }
        out.push_back(std::move(nd));
    }
    return out;
}

}  // namespace pidlab
