#include "qjet/metrics.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

namespace qjet {

namespace {

void check_lengths(const std::vector<double>& scores, const std::vector<int>& labels,
                   const char* op) {
    if (scores.empty())
        throw ValidationError(std::string(op) + ": empty input");
    if (scores.size() != labels.size())
        throw DimensionError(std::string(op) + ": " + std::to_string(scores.size()) +
                             " scores vs " + std::to_string(labels.size()) + " labels");
    for (int l : labels)
        if (l != 0 && l != 1)
            throw ValidationError(std::string(op) + ": labels must be binary");
}

} // namespace

double accuracy(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_lengths(scores, labels, "accuracy");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int predicted = scores[i] >= 0.5 ? 1 : 0;
        if (predicted == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

std::pair<RocCurve, double> roc_auc(const std::vector<double>& scores,
                                    const std::vector<int>& labels) {
    check_lengths(scores, labels, "roc_auc");
    const std::size_t npos = static_cast<std::size_t>(
        std::count(labels.begin(), labels.end(), 1));
    const std::size_t nneg = labels.size() - npos;
    if (npos == 0 || nneg == 0)
        throw ValidationError("roc_auc: AUC undefined with a single class");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.thresholds.push_back(std::numeric_limits<double>::infinity());
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);

    // Sweep tied-score groups; integrate in integer counts so the area is
    // exactly wins + ties/2 over npos * nneg.
    double area2 = 0.0; // twice the integer-count area
    std::size_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        std::size_t gp = 0, gn = 0;
        while (i < order.size() && scores[order[i]] == s) {
            if (labels[order[i]] == 1) ++gp;
            else ++gn;
            ++i;
        }
        area2 += static_cast<double>(gn) * static_cast<double>(2 * tp + gp);
        tp += gp;
        fp += gn;
        curve.thresholds.push_back(s);
        curve.fpr.push_back(static_cast<double>(fp) / static_cast<double>(nneg));
        curve.tpr.push_back(static_cast<double>(tp) / static_cast<double>(npos));
    }
    const double auc = area2 / (2.0 * static_cast<double>(npos) * static_cast<double>(nneg));
    return {std::move(curve), auc};
}

double auc_mann_whitney(const std::vector<double>& scores, const std::vector<int>& labels) {
    check_lengths(scores, labels, "auc_mann_whitney");
    double u = 0.0;
    std::size_t npos = 0, nneg = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        ++npos;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] == 1) continue;
            if (scores[i] > scores[j]) u += 1.0;
            else if (scores[i] == scores[j]) u += 0.5;
        }
    }
    nneg = scores.size() - npos;
    if (npos == 0 || nneg == 0)
        throw ValidationError("auc_mann_whitney: AUC undefined with a single class");
    return u / (static_cast<double>(npos) * static_cast<double>(nneg));
}

} // namespace qjet
