#pragma once
// Core domain types shared across the library.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pidlab {

// thrown on file problems; everything else uses std::invalid_argument /
// std::runtime_error
class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// numeric failure (divergence, infeasible support, ...)
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LogBase { bits, nats };

inline double ln_of_base(LogBase b) { return b == LogBase::bits ? 0.6931471805599453094 : 1.0; }

struct InfoValue {
    double value = 0.0;
    LogBase base = LogBase::nats;

    InfoValue to(LogBase target) const {
        if (target == base) return *this;
        return {value * ln_of_base(base) / ln_of_base(target), target};
    }
    double in_bits() const { return to(LogBase::bits).value; }
    double in_nats() const { return to(LogBase::nats).value; }
};

// Dense nonnegative 3-way probability tensor p(x1, x2, y), row-major with y
// fastest: index (a, b, c) -> (a*n2 + b)*ny + c.
struct CategoricalJoint {
    int n1 = 0, n2 = 0, ny = 0;
    std::vector<double> p;

    CategoricalJoint() = default;
    CategoricalJoint(int n1_, int n2_, int ny_)
        : n1(n1_), n2(n2_), ny(ny_), p(std::size_t(n1_) * n2_ * ny_, 0.0) {
        if (n1_ < 1 || n2_ < 1 || ny_ < 1)
            throw std::invalid_argument("CategoricalJoint: dims must be >= 1");
    }

    double& at(int a, int b, int c) { return p[(std::size_t(a) * n2 + b) * ny + c]; }
    double at(int a, int b, int c) const { return p[(std::size_t(a) * n2 + b) * ny + c]; }
    std::size_t cells() const { return p.size(); }

    double sum() const {
        double s = 0.0;
        for (double v : p) s += v;
        return s;
    }

    // throws unless entries are >= 0 and sum to 1 within tol
    void validate(double tol = 1e-9) const;
};

// Solver metadata attached to every PID estimate.
struct Diagnostics {
    long iterations = 0;
    double objective = 0.0;      // final H_q(Y|X1,X2) in nats for cvx; loss for batch
    double residual = 0.0;       // max-abs marginal constraint residual
    double wall_seconds = 0.0;
    bool converged = true;
    double min_raw_component = 0.0;  // most negative pre-clamp component, 0 if none
    bool s_present = true;
};

struct PidResult {
    double r = 0.0, u1 = 0.0, u2 = 0.0, s = 0.0;
    double total_mi = 0.0;
    LogBase base = LogBase::nats;
    Diagnostics diag;

    PidResult to(LogBase target) const {
        if (target == base) return *this;
        double f = ln_of_base(base) / ln_of_base(target);
        PidResult out = *this;
        out.r *= f; out.u1 *= f; out.u2 *= f; out.total_mi *= f;
        if (std::isfinite(out.s)) out.s *= f;
        out.base = target;
        return out;
    }
};

enum class Split { train, val, test };

// Continuous paired-modality data with integer class labels.
struct FeatureDataset {
    long n = 0;
    int d1 = 0, d2 = 0, classes = 0;
    std::vector<double> x1;  // n x d1, row-major
    std::vector<double> x2;  // n x d2
    std::vector<int> y;      // values in [0, classes)
    Split split = Split::train;

    const double* row1(long i) const { return x1.data() + std::size_t(i) * d1; }
    const double* row2(long i) const { return x2.data() + std::size_t(i) * d2; }
    void validate() const;
};

// Categorized counterpart: triples of category IDs.
struct DiscreteDataset {
    long n = 0;
    int k1 = 0, k2 = 0, classes = 0;
    std::vector<int> c1, c2, y;
    Split split = Split::train;

    void validate() const;
};

}  // namespace pidlab
