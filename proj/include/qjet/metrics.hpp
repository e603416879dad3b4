#pragma once

#include <utility>
#include <vector>

#include "qjet/errors.hpp"

namespace qjet {

// ROC points at descending score thresholds. thresholds[0] is +infinity so
// the curve starts at (0, 0); it ends at (1, 1) once every sample is
// accepted. Tied scores share one threshold, which makes the trapezoidal
// area equal to the half-credit Mann-Whitney statistic.
struct RocCurve {
    std::vector<double> thresholds;
    std::vector<double> fpr;
    std::vector<double> tpr;
};

// Fraction of samples whose predicted class (score >= 0.5 reads as class 1,
// so an exact 0.5 tie counts as class 1) matches the label.
double accuracy(const std::vector<double>& scores, const std::vector<int>& labels);

// Trapezoidal AUC over the ROC curve. Requires both classes present.
std::pair<RocCurve, double> roc_auc(const std::vector<double>& scores,
                                    const std::vector<int>& labels);

// Pairwise Mann-Whitney statistic (ties credited 1/2); the independent
// route the trapezoidal AUC is checked against.
double auc_mann_whitney(const std::vector<double>& scores, const std::vector<int>& labels);

} // namespace qjet
