#pragma once

#include <cstdint>
#include <string>

#include "qjet/jet_data.hpp"
#include "qjet/model.hpp"

namespace qjet {

// One experiment, parsed from a flat key = value file with # comments.
struct ExperimentConfig {
    std::string model = "gnn"; // gnn | egnn | qgnn | eqgnn
    std::size_t hidden = 0;    // N_h; 0 picks the per-model default
    std::size_t layers = 0;    // P;   0 picks the per-model default
    double lr = 1e-3;
    std::size_t epochs = 20;
    std::size_t batch = 0; // 0 picks 64 (classical) or 1 (quantum)
    std::uint64_t seed = 1;
    std::size_t checkpoint_start = 15;
    std::size_t train_size = 10000;
    std::size_t val_size = 1250;
    std::size_t test_size = 1250;
    std::string data;         // JSONL or QJET1 cache path; empty with synth_n
    std::size_t synth_n = 0;  // > 0 generates a synthetic sample instead
    std::uint64_t synth_seed = 7;
    std::string output_dir = "runs";
    std::string run_name; // default: timestamped
    std::size_t encoder_hidden = 32;
    std::size_t head_hidden = 0;
    std::string activation = "softplus"; // softplus | tanh | relu | identity
    bool squared_modulus = false;
    bool scale_train_only = false;
    bool wrap_phi = false;
    std::size_t min_particles = 10;
    std::size_t nodes = 3;
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

// Applies per-model defaults and checks the invariants (quantum models force
// N_h = 2^nodes, sizes positive, ...). Throws ValidationError.
void resolve_and_validate(ExperimentConfig& cfg);

bool is_quantum(const ExperimentConfig& cfg);

ad::Activation activation_from_name(const std::string& name);

ModelSpec model_spec(const ExperimentConfig& cfg);
DatasetConfig dataset_config(const ExperimentConfig& cfg);

// Canonical key = value rendering (sorted keys); its FNV-1a hash ties
// checkpoints to the configuration that produced them.
std::string canonical_config(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

} // namespace qjet
