#include "hioscar/eval.hpp"

#include "hioscar/common.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hioscar {

IdReport macro_f1(const std::vector<std::string>& predictions, const std::vector<std::string>& truths,
                  const std::vector<std::string>& label_set) {
    if (predictions.size() != truths.size()) {
        throw ArgumentError("macro_f1: " + std::to_string(predictions.size()) + " predictions for " +
                            std::to_string(truths.size()) + " truths");
    }
    if (truths.empty()) {
        throw ArgumentError("macro_f1: no samples");
    }
    std::set<std::string> all(label_set.begin(), label_set.end());
    all.insert(truths.begin(), truths.end());
    all.insert(predictions.begin(), predictions.end());

    IdReport report;
    report.classes.assign(all.begin(), all.end());
    const auto index = [&](const std::string& name) {
        return static_cast<std::size_t>(std::lower_bound(report.classes.begin(), report.classes.end(), name) -
                                        report.classes.begin());
    };
    const std::size_t k = report.classes.size();
    report.confusion.assign(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < truths.size(); ++i) {
        ++report.confusion[index(truths[i])][index(predictions[i])];
    }
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t tp = report.confusion[c][c];
        std::size_t fn = 0;
        std::size_t fp = 0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j != c) {
                fn += report.confusion[c][j];
                fp += report.confusion[j][c];
            }
        }
        if (tp + fn == 0 && fp == 0) {
            continue;  // neither present nor predicted
        }
        const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
        report.per_class_f1[report.classes[c]] = f1;
        sum += f1;
        ++counted;
    }
    report.macro_f1 = sum / static_cast<double>(counted);
    return report;
}

double auroc(std::span<const double> id_scores, std::span<const double> ood_scores) {
    if (id_scores.empty() || ood_scores.empty()) {
        throw ArgumentError("auroc: need both ID and OOD samples");
    }
    struct Item {
        double score;
        bool ood;
    };
    std::vector<Item> items;
    items.reserve(id_scores.size() + ood_scores.size());
    for (const double s : id_scores) {
        items.push_back({s, false});
    }
    for (const double s : ood_scores) {
        items.push_back({s, true});
    }
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });
    // Sum of OOD midranks (1-based).
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < items.size();) {
        std::size_t j = i;
        while (j < items.size() && items[j].score == items[i].score) {
            ++j;
        }
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t t = i; t < j; ++t) {
            if (items[t].ood) {
                rank_sum += midrank;
            }
        }
        i = j;
    }
    const auto n_ood = static_cast<double>(ood_scores.size());
    const auto n_id = static_cast<double>(id_scores.size());
    const double u = rank_sum - n_ood * (n_ood + 1.0) / 2.0;
    return u / (n_ood * n_id);
}

namespace {

void split_scores(std::span<const double> scores, const std::vector<bool>& is_ood, std::vector<double>& id,
                  std::vector<double>& ood) {
    if (scores.size() != is_ood.size()) {
        throw ArgumentError("score and label counts differ");
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        (is_ood[i] ? ood : id).push_back(scores[i]);
    }
    if (id.empty() || ood.empty()) {
        throw ArgumentError("need both ID and OOD samples");
    }
}

}  // namespace

double auroc(std::span<const double> scores, const std::vector<bool>& is_ood) {
    std::vector<double> id;
    std::vector<double> ood;
    split_scores(scores, is_ood, id, ood);
    return auroc(id, ood);
}

double detection_error(std::span<const double> id_scores, std::span<const double> ood_scores) {
    if (id_scores.empty() || ood_scores.empty()) {
        throw ArgumentError("detection_error: need both ID and OOD samples");
    }
    std::vector<double> ood(ood_scores.begin(), ood_scores.end());
    std::sort(ood.begin(), ood.end(), std::greater<>());
    // Smallest count of flagged OOD samples reaching the target TPR.
    const auto n_ood = static_cast<double>(ood.size());
    auto needed = static_cast<std::size_t>(std::ceil(kTargetTpr * n_ood - 1e-9));
    needed = std::clamp<std::size_t>(needed, 1, ood.size());
    // Flagging is score >= threshold, so the largest valid threshold is the
    // needed-th highest OOD score.
    const double threshold = ood[needed - 1];
    const auto false_positives =
        std::count_if(id_scores.begin(), id_scores.end(), [threshold](double s) { return s >= threshold; });
    const double fpr = static_cast<double>(false_positives) / static_cast<double>(id_scores.size());
    return 0.5 * (fpr + (1.0 - kTargetTpr));
}

double detection_error(std::span<const double> scores, const std::vector<bool>& is_ood) {
    std::vector<double> id;
    std::vector<double> ood;
    split_scores(scores, is_ood, id, ood);
    return detection_error(id, ood);
}

OodReport ood_set_evaluate(const HeadParameters& params, const Hierarchy& h,
                           std::span<const std::vector<double>> id_features, const std::vector<std::string>& id_labels,
                           std::span<const std::vector<double>> ood_features,
                           const std::vector<std::string>& ood_labels) {
    if (id_features.size() != id_labels.size() || ood_features.size() != ood_labels.size()) {
        throw ArgumentError("ood_set_evaluate: feature and label counts differ");
    }
    OodReport report;
    for (const auto& label : ood_labels) {
        if (h.find_leaf(label)) {
            throw ArgumentError("OOD set contains training class '" + label + "'");
        }
        report.ood_classes.insert(label);
    }
    std::vector<double> id_scores;
    std::vector<std::string> predictions;
    for (const auto& x : id_features) {
        const auto r = classify(x, params, h);
        id_scores.push_back(r.ood_score);
        predictions.push_back(h.class_name(r.leaf));
    }
    std::vector<double> ood_scores;
    for (const auto& x : ood_features) {
        ood_scores.push_back(classify(x, params, h).ood_score);
    }
    report.n_id = id_scores.size();
    report.n_ood = ood_scores.size();
    report.auroc = auroc(id_scores, ood_scores);
    report.detection_error = detection_error(id_scores, ood_scores);
    report.id_macro_f1 = macro_f1(predictions, id_labels).macro_f1;
    return report;
}

std::vector<double> default_lambda_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) {
        grid.push_back(static_cast<double>(i) / 20.0);
    }
    return grid;
}

NodeId map_to_reference(const Hierarchy& deployment, NodeId node, const Hierarchy& reference) {
    const auto source = deployment.leaf_classes(node);
    NodeId best = kNoNode;
    double best_score = -1.0;
    for (NodeId r = 0; r < static_cast<NodeId>(reference.size()); ++r) {
        const auto target = reference.leaf_classes(r);
        std::vector<std::string> common;
        std::set_intersection(source.begin(), source.end(), target.begin(), target.end(), std::back_inserter(common));
        const double union_size = static_cast<double>(source.size() + target.size() - common.size());
        const double score = static_cast<double>(common.size()) / union_size;
        const bool better = score > best_score ||
                            (score == best_score && reference.depth(r) > reference.depth(best));
        if (better) {
            best = r;
            best_score = score;
        }
    }
    return best;
}

LocalizationReport localization_sweep(std::span<const std::vector<double>> ood_features,
                                      const std::vector<std::string>& ood_labels, const HeadParameters& params,
                                      const Hierarchy& deployment, const EntropyRecord& train_entropies,
                                      const Hierarchy& reference, const std::vector<double>& lambda_grid) {
    if (ood_features.size() != ood_labels.size()) {
        throw ArgumentError("localization_sweep: feature and label counts differ");
    }
    if (ood_features.empty()) {
        throw ArgumentError("localization_sweep: no OOD windows");
    }
    if (!reference.has_merge_distances()) {
        throw CapabilityError("localization needs a reference hierarchy with merge distances");
    }
    std::vector<NodeId> truth;
    for (const auto& label : ood_labels) {
        const auto leaf = reference.find_leaf(label);
        if (!leaf) {
            throw ArgumentError("OOD class '" + label + "' is absent from the reference hierarchy");
        }
        truth.push_back(*leaf);
    }
    std::vector<NodeProbabilities> probabilities;
    probabilities.reserve(ood_features.size());
    for (const auto& x : ood_features) {
        probabilities.push_back(pairwise_softmax(forward(params, x), deployment));
    }
    std::vector<NodeId> mapped(deployment.size(), kNoNode);

    LocalizationReport report;
    report.mapping_rule = kMappingRule;
    for (const double lambda : lambda_grid) {
        const auto thresholds = thresholds_at(train_entropies, lambda);
        double distance_sum = 0.0;
        double depth_sum = 0.0;
        for (std::size_t i = 0; i < probabilities.size(); ++i) {
            const auto out = open_set_from_probabilities(probabilities[i], deployment, thresholds);
            auto& ref = mapped[static_cast<std::size_t>(out.terminal_node)];
            if (ref == kNoNode) {
                ref = map_to_reference(deployment, out.terminal_node, reference);
            }
            distance_sum += cumulative_cosine_distance(reference, ref, truth[i]);
            depth_sum += out.stopped_at_depth;
        }
        const auto n = static_cast<double>(probabilities.size());
        report.per_lambda.push_back({lambda, distance_sum / n, depth_sum / n});
    }
    return report;
}

PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw ArgumentError("paired_t_test: need at least two matched pairs");
    }
    std::vector<double> diff(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff[i] = a[i] - b[i];
    }
    const Summary s = summarize(diff);
    PairedTTest result;
    result.mean_difference = s.mean;
    result.degrees_of_freedom = static_cast<double>(diff.size() - 1);
    if (s.stddev == 0.0) {
        result.t_statistic = s.mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), s.mean);
        result.p_value = s.mean == 0.0 ? 1.0 : 0.0;
        result.cohens_d = result.t_statistic;
        return result;
    }
    result.t_statistic = s.mean / (s.stddev / std::sqrt(static_cast<double>(diff.size())));
    result.cohens_d = s.mean / s.stddev;
    const boost::math::students_t dist(result.degrees_of_freedom);
    result.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(result.t_statistic)));
    return result;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    s.n = values.size();
    if (values.empty()) {
        return s;
    }
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double sq = 0.0;
        for (const double v : values) {
            sq += (v - s.mean) * (v - s.mean);
        }
        s.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
    }
    return s;
}

}  // namespace hioscar
