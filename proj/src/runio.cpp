#include "qjet/runio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qjet {

std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_history_csv(const std::string& path, const TrainReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("write_history_csv: cannot open " + path);
    out << "epoch,train_loss,val_loss,train_acc,val_acc,val_auc\n";
    for (std::size_t e = 0; e < report.history.size(); ++e) {
        const auto& s = report.history[e];
        out << e << ',' << fmt17(s.train_loss) << ',' << fmt17(s.val_loss) << ','
            << fmt17(s.train_acc) << ',' << fmt17(s.val_acc) << ',' << fmt17(s.val_auc)
            << '\n';
    }
    if (!out) throw IoError("write_history_csv: write failed for " + path);
}

void write_roc_csv(const std::string& path, const RocCurve& roc) {
    std::ofstream out(path);
    if (!out) throw IoError("write_roc_csv: cannot open " + path);
    out << "fpr,tpr\n";
    for (std::size_t i = 0; i < roc.fpr.size(); ++i)
        out << fmt17(roc.fpr[i]) << ',' << fmt17(roc.tpr[i]) << '\n';
    if (!out) throw IoError("write_roc_csv: write failed for " + path);
}

void write_report_json(const std::string& path, const ExperimentConfig& cfg,
                       const TrainReport& report, std::size_t param_count,
                       const AdamConfig& adam) {
    nlohmann::json j;
    j["model"] = cfg.model;
    j["hidden"] = cfg.hidden;
    j["layers"] = cfg.layers;
    j["param_count"] = param_count;
    j["seed"] = cfg.seed;
    j["epochs"] = cfg.epochs;
    j["batch"] = cfg.batch;
    j["checkpoint_start"] = cfg.checkpoint_start;
    j["optimizer"] = {{"name", "adam"},
                      {"lr", adam.lr},
                      {"beta1", adam.beta1},
                      {"beta2", adam.beta2},
                      {"eps", adam.eps}};
    j["init"] = {{"weights", "uniform +-sqrt(6/(fan_in+fan_out))"},
                 {"biases", "zero"},
                 {"gamma", "uniform [0, 0.1]"},
                 {"theta", "normal(0, 0.01) per re/im entry"}};
    auto hist = nlohmann::json::array();
    for (std::size_t e = 0; e < report.history.size(); ++e) {
        const auto& s = report.history[e];
        hist.push_back({{"epoch", e},
                        {"train_loss", s.train_loss},
                        {"val_loss", s.val_loss},
                        {"train_acc", s.train_acc},
                        {"val_acc", s.val_acc},
                        {"val_auc", s.val_auc},
                        {"seconds", s.seconds}});
    }
    j["history"] = std::move(hist);
    j["best_epoch"] = report.best_epoch;
    j["test_acc"] = report.test_acc;
    j["test_auc"] = report.test_auc;
    j["digest"] = report.digest();

    std::ofstream out(path);
    if (!out) throw IoError("write_report_json: cannot open " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write_report_json: write failed for " + path);
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("write_sweep_csv: cannot open " + path);
    out << "config,model,param_count,test_auc,status\n";
    for (const auto& r : rows)
        out << r.config << ',' << r.model << ',' << r.param_count << ','
            << fmt17(r.test_auc) << ',' << r.status << '\n';
    if (!out) throw IoError("write_sweep_csv: write failed for " + path);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_csv: cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

} // namespace qjet
