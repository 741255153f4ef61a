#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "diffkit.hpp"
#include "rng.hpp"
#include "types.hpp"

namespace pidlab {

// three affine layers with leaky relu between them
struct MlpParams {
    DenseTensor w1, b1, w2, b2, w3, b3;
};

MlpParams init_mlp(int in_dim, int hidden, int out_dim, Rng& rng);
// plain forward pass, no gradient bookkeeping
DenseTensor mlp_forward(const MlpParams& p, const DenseTensor& x);

struct BatchConfig {
    int m = 256;
    int epochs = 10;           // coupling training
    int unimodal_epochs = 40;  // frozen classifier training
    double lr = 1e-3;
    int sinkhorn_iters = 20;
    std::uint64_t seed = 0;
    int eval_batches = 16;    // fresh batches averaged for the final estimate
    bool literal_r = false;   // report redundancy as the coupling MI itself
    bool skip_joint_mi = false;  // leave the synergy slot empty
    int hidden = 32;

    void validate() const;
};

// frozen p(y|x_i) classifier for one modality
struct ConditionalModel {
    int modality = 1;
    int in_dim = 0;
    int classes = 0;
    MlpParams net;
    std::vector<double> label_marginal;

    // n rows -> n x classes probabilities
    DenseTensor predict(const std::vector<double>& x, int n) const;
    double accuracy(const FeatureDataset& d) const;
};

ConditionalModel train_unimodal(const FeatureDataset& d, int modality,
                                const BatchConfig& cfg = {});

// two label-conditioned encoders; feature dim shared
struct CouplingNet {
    int d1 = 0, d2 = 0, classes = 0, feat = 32;
    MlpParams enc1, enc2;
};

CouplingNet init_coupling(int d1, int d2, int classes, int hidden, std::uint64_t seed);

// A[y][i][j] = exp(<h1[i,y], h2[j,y]>), shape {classes, m, m}
DenseTensor similarity_logits(const CouplingNet& net, const std::vector<double>& x1,
                              const std::vector<double>& x2, int m);

struct BatchCoupling {
    int m = 0, classes = 0;
    std::vector<DenseTensor> q;  // per label, m x m, jointly normalized
    DenseTensor row_targets;     // m x classes, mass-harmonized
    DenseTensor col_targets;
    double residual = 0.0;       // max-abs marginal mismatch after projection
};

// row/col targets are per-(index, label) masses, each index summing to 1/m;
// per-label masses of the two sides are averaged before projecting
BatchCoupling sinkhorn_project(const DenseTensor& a, const DenseTensor& row_targets,
                               const DenseTensor& col_targets, int iters);

// In-batch objective: average over rows i of
//   sum_j cond_{y_i}(i,j) [log cond_{y_i}(i,j) - log sum_y cond_y(i,j) pred1(i,y)].
// The inner sums are exact; with an rng the inner expectation is replaced by a
// single inverse-CDF draw of j per row.
double batch_objective(const BatchCoupling& c, const DenseTensor& pred1,
                       const std::vector<int>& y, Rng* rng = nullptr);

// inverse-CDF draw from q(j | i, y)
int sample_x2(const BatchCoupling& c, int i, int y, Rng& rng);

// Differentiable pipeline for one batch: similarity, unrolled projection, and
// the exact in-batch objective. Returns the loss node and the encoder
// parameter leaves (enc1 w1,b1,w2,b2,w3,b3 then enc2 likewise).
struct CouplingLossGraph {
    int loss = -1;
    std::vector<int> params;
};
CouplingLossGraph build_coupling_loss(Tape& tape, const CouplingNet& net,
                                      const std::vector<double>& x1,
                                      const std::vector<double>& x2, const std::vector<int>& y,
                                      int m, const DenseTensor& pred1, const DenseTensor& pred2,
                                      int sinkhorn_iters, bool trainable);

struct CouplingResult {
    CouplingNet net;
    std::vector<double> loss_history;
};

CouplingResult train_coupling(const FeatureDataset& d, const ConditionalModel& model1,
                              const ConditionalModel& model2, const BatchConfig& cfg);

// coupling mutual information I(Y; X1,X2) under the projected batch coupling, nats
double coupling_mi(const BatchCoupling& c);

// multimodal_row_cond: optional per-row probability of the row's own label
// under a jointly trained predictor, used for the total information term
PidResult estimate_pid_batch(const FeatureDataset& d, const BatchConfig& cfg,
                             LogBase base = LogBase::bits,
                             const std::vector<double>* multimodal_row_cond = nullptr);

}  // namespace pidlab
