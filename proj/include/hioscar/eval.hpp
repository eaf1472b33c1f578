#pragma once

#include "hioscar/hierarchy.hpp"
#include "hioscar/inference.hpp"
#include "hioscar/model.hpp"

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace hioscar {

struct IdReport {
    std::vector<std::string> classes;  // rows/columns of the confusion matrix
    std::map<std::string, double> per_class_f1;
    double macro_f1 = 0.0;
    std::vector<std::vector<std::size_t>> confusion;  // [truth][prediction]
};

/// F1 = 2TP / (2TP + FP + FN) per class. A class enters the macro average when
/// it occurs in the truths or in the predictions; label_set only widens the
/// confusion matrix.
IdReport macro_f1(const std::vector<std::string>& predictions, const std::vector<std::string>& truths,
                  const std::vector<std::string>& label_set = {});

/// Mann-Whitney AUROC with midranks: P(OOD score > ID score) + 0.5 P(tie).
double auroc(std::span<const double> id_scores, std::span<const double> ood_scores);
double auroc(std::span<const double> scores, const std::vector<bool>& is_ood);

inline constexpr double kTargetTpr = 0.95;

/// 0.5 * (FPR + FNR) at the largest threshold whose OOD true-positive rate is
/// at least 95%, with FNR taken at the nominal operating point (0.05).
double detection_error(std::span<const double> id_scores, std::span<const double> ood_scores);
double detection_error(std::span<const double> scores, const std::vector<bool>& is_ood);

struct OodReport {
    double auroc = 0.0;
    double detection_error = 0.0;
    double id_macro_f1 = 0.0;
    std::set<std::string> ood_classes;
    std::size_t n_id = 0;
    std::size_t n_ood = 0;
};

/// Scores every window by mean path entropy (softmax entropy for a flat head)
/// and pools all OOD classes into one positive set.
OodReport ood_set_evaluate(const HeadParameters& params, const Hierarchy& h,
                           std::span<const std::vector<double>> id_features, const std::vector<std::string>& id_labels,
                           std::span<const std::vector<double>> ood_features,
                           const std::vector<std::string>& ood_labels);

struct LocalizationPoint {
    double lambda_hat = 0.0;
    double mean_distance = 0.0;
    double mean_depth = 0.0;
};

struct LocalizationReport {
    std::vector<LocalizationPoint> per_lambda;
    std::string mapping_rule;
};

/// 0.00, 0.05, ..., 1.00.
std::vector<double> default_lambda_grid();

/// Reference node whose leaf set has the highest Jaccard overlap with the
/// deployment node's leaf set; ties go to the deeper node, then the smaller id.
NodeId map_to_reference(const Hierarchy& deployment, NodeId node, const Hierarchy& reference);

inline constexpr const char* kMappingRule = "max-jaccard-leaf-overlap; ties: deeper, then lower id";

LocalizationReport localization_sweep(std::span<const std::vector<double>> ood_features,
                                      const std::vector<std::string>& ood_labels, const HeadParameters& params,
                                      const Hierarchy& deployment, const EntropyRecord& train_entropies,
                                      const Hierarchy& reference, const std::vector<double>& lambda_grid);

struct PairedTTest {
    double mean_difference = 0.0;
    double t_statistic = 0.0;
    double degrees_of_freedom = 0.0;
    double p_value = 1.0;
    double cohens_d = 0.0;
};

/// Two-sided paired t-test over matched fold scores; Cohen's d = mean / sd of differences.
PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b);

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation
    std::size_t n = 0;
};
Summary summarize(std::span<const double> values);

}  // namespace hioscar
