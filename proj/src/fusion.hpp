#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "batch.hpp"
#include "diffkit.hpp"
#include "discretize.hpp"
#include "types.hpp"

namespace pidlab {

// The four fusion families plus the two single-branch baselines used for
// calibration experiments.
enum class FusionKind { early_fusion, additive, elementwise, tensor, unimodal_x1, unimodal_x2 };

std::string fusion_kind_name(FusionKind k);
FusionKind fusion_kind_from(const std::string& name);

struct AffineParams {
    DenseTensor w, b;  // x @ w + b
};

// affine -> leaky relu (0.2) -> affine
struct HeadParams {
    DenseTensor w1, b1, w2, b2;
};

struct TrainConfig {
    double lr = 1e-4;
    int epochs = 100;
    int batch = 128;
    std::uint64_t seed = 0;

    void validate() const;
};

// Linear per-modality encoders into a 32-dim code and a two-layer head with
// 32 hidden units. Kinds differ only in how the codes reach a head: one
// encoder on the concatenated input (early fusion), per-branch heads with
// averaged logits (additive), elementwise product, flattened outer product,
// or a single branch (unimodal baselines).
struct FusionModel {
    FusionKind kind = FusionKind::early_fusion;
    int d1 = 0, d2 = 0, classes = 0;
    std::vector<AffineParams> encoders;
    std::vector<HeadParams> heads;
    std::vector<double> mean1, mean2;  // training-set feature means, for imputation

    // n x classes raw scores; inference only
    DenseTensor logits(const std::vector<double>& x1, const std::vector<double>& x2,
                       long n) const;
    // rowwise softmax of the logits
    DenseTensor probabilities(const std::vector<double>& x1, const std::vector<double>& x2,
                              long n) const;
    std::vector<int> predict(const FeatureDataset& d) const;
    double accuracy(const FeatureDataset& d) const;
};

struct FusionTrainResult {
    FusionModel model;
    double train_acc = 0.0;
    double val_acc = 0.0;
};

// cross-entropy / Adam; deterministic given cfg.seed
FusionTrainResult train_fusion(FusionKind kind, const FeatureDataset& train,
                               const FeatureDataset& val, const TrainConfig& cfg = {});

// features copied, labels replaced by the model's argmax predictions
FeatureDataset predict_dataset(const FusionModel& m, const FeatureDataset& d);

enum class PidEstimator { cvx, batch };

// predict -> discretize -> estimate, on the prediction-labeled dataset
PidResult quantify_model(const FusionModel& m, const FeatureDataset& d,
                         const ClusterOptions& opts = {}, std::uint64_t cluster_seed = 47,
                         PidEstimator est = PidEstimator::cvx, LogBase base = LogBase::bits,
                         const BatchConfig& batch_cfg = {});

// accuracy on d minus accuracy with modality i replaced by its training mean
double robustness_drop(const FusionModel& m, const FeatureDataset& d, int modality);

}  // namespace pidlab
