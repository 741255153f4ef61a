#include "types.hpp"

#include <cmath>

namespace pidlab {

void CategoricalJoint::validate(double tol) const {
    if (n1 < 1 || n2 < 1 || ny < 1) throw std::invalid_argument("joint: dims must be >= 1");
    if (p.size() != std::size_t(n1) * n2 * ny)
        throw std::invalid_argument("joint: cell count does not match dims");
    double s = 0.0;
    for (double v : p) {
        if (std::isnan(v) || v < 0.0) throw std::invalid_argument("joint: negative or NaN entry");
        s += v;
    }
    if (std::fabs(s - 1.0) > tol)
        throw std::invalid_argument("joint: entries sum to " + std::to_string(s) + ", expected 1");
}

void FeatureDataset::validate() const {
    if (n < 0 || d1 < 1 || d2 < 1 || classes < 1)
        throw std::invalid_argument("features: bad dimensions");
    if (x1.size() != std::size_t(n) * d1 || x2.size() != std::size_t(n) * d2 ||
        y.size() != std::size_t(n))
        throw std::invalid_argument("features: field sizes disagree with row count");
    for (int v : y)
        if (v < 0 || v >= classes) throw std::invalid_argument("features: label out of range");
    for (double v : x1)
        if (std::isnan(v)) throw std::invalid_argument("features: NaN in x1");
    for (double v : x2)
        if (std::isnan(v)) throw std::invalid_argument("features: NaN in x2");
}

void DiscreteDataset::validate() const {
    if (n < 0 || k1 < 1 || k2 < 1 || classes < 1)
        throw std::invalid_argument("discrete: bad dimensions");
    if (c1.size() != std::size_t(n) || c2.size() != std::size_t(n) || y.size() != std::size_t(n))
        throw std::invalid_argument("discrete: field sizes disagree with row count");
    for (long i = 0; i < n; ++i) {
        if (c1[i] < 0 || c1[i] >= k1 || c2[i] < 0 || c2[i] >= k2)
            throw std::invalid_argument("discrete: category ID out of range");
        if (y[i] < 0 || y[i] >= classes)
            throw std::invalid_argument("discrete: label out of range");
    }
}

}  // namespace pidlab
