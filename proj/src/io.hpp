#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "analysis.hpp"
#include "diffkit.hpp"
#include "fusion.hpp"
#include "types.hpp"

namespace pidlab {

// Paired-feature files: either the text form with a `#pidlab-features v1`
// header and one CSV row per sample, or the binary form starting with the
// magic "PIDF" (little-endian, 64-bit floats, row-major). The loader sniffs
// the magic. File problems and malformed content throw io_error.
FeatureDataset load_features(const std::string& path);
void save_features_text(const FeatureDataset& d, const std::string& path);
void save_features_binary(const FeatureDataset& d, const std::string& path);

// Categorized triples: `#pidlab-discrete v1` header, rows `c1,c2,y`.
DiscreteDataset load_discrete(const std::string& path);
void save_discrete(const DiscreteDataset& d, const std::string& path);

// Flat ordered key -> tensor container ("PIDC" magic); the checkpoint format.
struct TensorMap {
    std::vector<std::pair<std::string, DenseTensor>> items;

    bool has(const std::string& key) const;
    const DenseTensor& get(const std::string& key) const;
    void put(const std::string& key, DenseTensor t);  // rejects duplicates
    double scalar(const std::string& key) const;      // 1-element tensors
};

void save_tensors(const TensorMap& m, const std::string& path);
TensorMap load_tensors(const std::string& path);

// Fusion checkpoints carry the weights, the training means, and the training
// config (including the seed) so a run can be reproduced from the file alone.
TensorMap pack_fusion(const FusionModel& m, const TrainConfig& cfg);
FusionModel unpack_fusion(const TensorMap& t, TrainConfig* cfg_out = nullptr);

// Registry document: one schema-versioned JSON file for a whole corpus.
// Unreadable files throw io_error; malformed content throws invalid_argument.
std::vector<RegistryEntry> load_registry(const std::string& path);
void save_registry(const std::vector<RegistryEntry>& reg, const std::string& path);

// One JSON number with six significant digits.
std::string json_num(double v);

// PID report object; the only thing estimate/quantify print on stdout.
// Diagnostics omit wall time so identical runs produce identical bytes.
std::string render_report(const PidResult& res, const std::string& method,
                          const std::string& input_path, long n, int dim1, int dim2);

// Reads the PID values back out of a report document; extra fields are
// ignored so reports stay forward-compatible.
PidResult parse_report(const std::string& json_text);

// Selection report for the model-recommendation workflow.
std::string render_selection(const SelectionResult& sel);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace pidlab
