#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qjet/jet_data.hpp"
#include "qjet/metrics.hpp"
#include "qjet/model.hpp"
#include "qjet/tensor.hpp"

namespace qjet {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a model's parameter list, in declaration order.
class Adam {
  public:
    Adam(const std::vector<ParamRef>& params, AdamConfig cfg);
    void step(std::vector<ParamRef>& params);
    std::size_t steps_taken() const { return t_; }

  private:
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::size_t t_ = 0;
};

// -log softmax(logits)[label], stabilized by max subtraction.
ad::Tensor cross_entropy(const ad::Tensor& logits, int label);

struct EpochStats {
    double train_loss = 0.0;
    double val_loss = 0.0;
    double train_acc = 0.0;
    double val_acc = 0.0;
    double val_auc = 0.0;
    double seconds = 0.0; // wall clock, excluded from the determinism digest
};

struct TrainReport {
    std::vector<EpochStats> history; // epochs + 1 rows, index 0 = initialization
    std::size_t best_epoch = 0;
    double test_acc = 0.0;
    double test_auc = 0.0;
    RocCurve test_roc;
    std::vector<double> best_params; // snapshot the test metrics were computed from

    // FNV-1a over every deterministic field (wall-clock times excluded).
    std::uint64_t digest() const;
};

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch = 64;
    std::uint64_t seed = 1;
    std::size_t checkpoint_start = 15; // first epoch eligible for best-AUC snapshots
    AdamConfig adam;
    double divergence_limit = 1e6;
    // Called after each history row (including the epoch-0 baseline).
    std::function<void(std::size_t epoch, const EpochStats&)> on_epoch;
};

struct EvalResult {
    double loss = 0.0;
    double acc = 0.0;
    std::vector<double> scores;
    std::vector<int> labels;
};

EvalResult evaluate(Model& model, const std::vector<FeaturedJet>& jets);

// The epoch loop: seeded shuffling (its own RNG stream, separate from the
// model-init stream), Adam updates, per-epoch validation, best-val-AUC
// snapshots from `checkpoint_start` onward, and test metrics computed after
// restoring the best snapshot. Throws NumericalError on divergence.
TrainReport train_model(Model& model, const DatasetSplit& data, const TrainConfig& cfg);

// ---- checkpoints -------------------------------------------------------------

// Versioned binary, magic "QJCK1": config hash, epoch index, then the
// flattened parameter vector in declaration order (complex parameters store
// their re block then im block), little-endian doubles.
struct Checkpoint {
    std::uint64_t config_hash = 0;
    std::uint64_t epoch = 0;
    std::vector<double> params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

} // namespace qjet
