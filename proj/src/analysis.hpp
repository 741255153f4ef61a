#pragma once

#include <string>
#include <vector>

#include "types.hpp"

namespace pidlab {

// Share-of-total view of a PID: entries are nonnegative and sum to one.
struct InteractionProfile {
    double r = 0.0, u1 = 0.0, u2 = 0.0, s = 0.0;
};

// Per-interaction agreement terms and their sum.
struct AgreementScore {
    double r = 0.0, u1 = 0.0, u2 = 0.0, s = 0.0, total = 0.0;
};

struct ModelRecord {
    std::string name;
    double accuracy = 0.0;
    PidResult pid;
};

// One corpus dataset with the models evaluated on it.
struct RegistryEntry {
    std::string dataset_id;
    PidResult dataset_pid;
    std::vector<ModelRecord> models;

    void validate() const;  // model names must be unique
};

struct SelectionResult {
    std::string dataset_id;  // nearest registry dataset
    double similarity = 0.0;
    std::vector<ModelRecord> recommendations;  // its top-k models by accuracy
};

// Componentwise division by the component sum. Tiny negative estimates are
// clamped to zero first; an all-zero or non-finite input is an error.
InteractionProfile normalize(const PidResult& p);

// Products of the dataset's normalized profile with the model's raw
// components, plus their sum. The model result is converted to the dataset's
// log base first so the weights multiply commensurate quantities.
AgreementScore agreement(const PidResult& dataset_pid, const PidResult& model_pid);

// L1 distance between normalized profiles; a pseudometric on PID results.
double similarity(const PidResult& a, const PidResult& b);

// Nearest registry dataset by profile similarity (ties broken by dataset ID),
// then that dataset's top-k models by accuracy (ties broken by name).
SelectionResult select_models(const PidResult& new_pid, const std::vector<RegistryEntry>& registry,
                              int k = 3);

// Sample Pearson correlation; both sequences need at least two entries and
// nonzero variance.
double pearson(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace pidlab
