#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "types.hpp"

namespace pidlab {

// bins_per_dim value requesting the sample-size rule round(2 n^(1/3)), capped at 100
constexpr int auto_bins = 0;

struct BinningCodebook {
    int dims = 0;
    std::vector<std::vector<double>> edges;  // per dim, ascending; b+1 edges for b bins
    std::vector<std::string> warnings;

    int bins(int dim) const { return int(edges[dim].size()) - 1; }
    long long categories() const;
};

BinningCodebook fit_bins(const std::vector<double>& data, int n, int d,
                         int bins_per_dim = auto_bins);
// codebook over an explicit range instead of the observed one
BinningCodebook fixed_bins(double lo, double hi, int bins, int dims);
// category IDs per row, multi-dim bin indices flattened row-major
std::vector<int> apply_bins(const BinningCodebook& cb, const std::vector<double>& data, int n);

struct PcaModel {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<double> mean;        // in_dim
    std::vector<double> components;  // out_dim x in_dim, row-major, orthonormal rows
    std::vector<double> variances;   // per component, descending
    double discarded_variance = 0.0;
    std::vector<std::string> warnings;
};

PcaModel fit_pca(const std::vector<double>& data, int n, int d, int out_dim);
std::vector<double> apply_pca(const PcaModel& m, const std::vector<double>& data, int n);

struct ClusterCodebook {
    int k = 0;
    int dim = 0;                     // centroid dimension (post-PCA when pca is set)
    std::vector<double> centroids;   // k x dim
    std::optional<PcaModel> pca;
    double inertia = 0.0;
    int iterations = 0;
};

ClusterCodebook fit_kmeans(const std::vector<double>& data, int n, int d, int k,
                           std::uint64_t seed, int max_iters = 100);
std::vector<int> assign_clusters(const ClusterCodebook& cb, const std::vector<double>& data,
                                 int n);

struct ClusterOptions {
    int k = 20;
    int pca_dim = 10;  // applied only when the input dimension exceeds it
    int max_iters = 100;
};

ClusterCodebook fit_cluster_codebook(const std::vector<double>& data, int n, int d,
                                     const ClusterOptions& opts, std::uint64_t seed);

struct DiscretizeResult {
    DiscreteDataset data;
    ClusterCodebook book1, book2;
};

DiscretizeResult cluster_dataset(const FeatureDataset& f, const ClusterOptions& opts,
                                 std::uint64_t seed);
DiscreteDataset apply_cluster_codebooks(const FeatureDataset& f, const ClusterCodebook& b1,
                                        const ClusterCodebook& b2);
DiscreteDataset bin_dataset(const FeatureDataset& f, const BinningCodebook& b1,
                            const BinningCodebook& b2);

CategoricalJoint empirical_joint(const DiscreteDataset& d);

}  // namespace pidlab
