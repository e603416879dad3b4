#pragma once

#include <string>
#include <vector>

#include "qjet/config.hpp"
#include "qjet/training.hpp"

namespace qjet {

// Shortest exact decimal for a double: 17 significant digits, so every CSV
// round-trips bit for bit.
std::string fmt17(double v);

void write_history_csv(const std::string& path, const TrainReport& report);
void write_roc_csv(const std::string& path, const RocCurve& roc);
void write_report_json(const std::string& path, const ExperimentConfig& cfg,
                       const TrainReport& report, std::size_t param_count,
                       const AdamConfig& adam);

struct SweepRow {
    std::string config; // file name
    std::string model;
    std::size_t param_count = 0;
    double test_auc = 0.0;
    std::string status; // ok | failed: <reason>
};

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);

// Minimal CSV reader for the files this project writes (no quoting needed).
std::vector<std::vector<std::string>> read_csv(const std::string& path);

} // namespace qjet
