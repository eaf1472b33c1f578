#pragma once

#include "hioscar/hierarchy.hpp"
#include "hioscar/model.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hioscar {

struct PathPrediction {
    NodeId leaf = kNoNode;
    std::vector<NodeId> path;  // root .. leaf inclusive
    double path_likelihood = 0.0;
    std::vector<double> decision_entropies;  // one per internal node on the path, root first
};

/// Pr(k) = p(k) * prod over anc(k) \ root of p(n).
double path_likelihood(const NodeProbabilities& p, const Hierarchy& h, NodeId leaf);
/// Pr(k) for every leaf, indexed by leaf id, via one top-down sweep.
std::vector<double> leaf_likelihoods(const NodeProbabilities& p, const Hierarchy& h);

/// Global argmax of the path likelihood; ties go to the smallest leaf id.
PathPrediction predict_leaf(const NodeProbabilities& p, const Hierarchy& h);

/// Natural-log entropy of an internal node's two children, in [0, ln 2].
double decision_entropy(const NodeProbabilities& p, const Hierarchy& h, NodeId n);
double mean_path_entropy(const PathPrediction& prediction);

/// ID decision entropies recorded per internal node along each training
/// sample's predicted path. Values per node are kept sorted.
struct EntropyRecord {
    std::map<NodeId, std::vector<double>> per_node;
};

struct ThresholdTable {
    double lambda_hat = 1.0;
    std::map<NodeId, double> per_node_threshold;
    std::map<NodeId, std::size_t> sample_counts;

    /// Untraversed nodes never trip: ln 2.
    double threshold(NodeId n) const;
};

/// Nearest-rank quantile of ascending values: element ceil(level * n), at least the first.
double nearest_rank_quantile(std::span<const double> sorted, double level);

EntropyRecord record_entropies(std::span<const std::vector<double>> features, const HeadParameters& params,
                               const Hierarchy& h);
ThresholdTable thresholds_at(const EntropyRecord& record, double lambda_hat);
ThresholdTable fit_thresholds(std::span<const std::vector<double>> features, const HeadParameters& params,
                              const Hierarchy& h, double lambda_hat);

struct OpenSetOutput {
    NodeId terminal_node = kNoNode;
    bool is_leaf = false;
    double ood_score = 0.0;
    NodeId closed_set_leaf = kNoNode;
    int stopped_at_depth = 0;
};

/// Walks the predicted path from the root and stops at the first node whose
/// decision entropy exceeds its threshold.
OpenSetOutput open_set_from_probabilities(const NodeProbabilities& p, const Hierarchy& h,
                                          const ThresholdTable& thresholds);
OpenSetOutput open_set_predict(std::span<const double> x, const HeadParameters& params, const Hierarchy& h,
                               const ThresholdTable& thresholds);

/// Closed-set leaf and OOD score for either head mode. In flat mode the score
/// is the entropy of the class softmax.
struct ClosedSetResult {
    NodeId leaf = kNoNode;
    double ood_score = 0.0;
};
ClosedSetResult classify(std::span<const double> x, const HeadParameters& params, const Hierarchy& h);

/// Mean Euclidean distance to the k nearest training vectors.
double knn_ood_score(std::span<const double> x, std::span<const std::vector<double>> train, std::size_t k);

std::string serialize_thresholds(const ThresholdTable& table);
ThresholdTable parse_thresholds(const std::string& text);
std::string serialize_entropy_record(const EntropyRecord& record);
EntropyRecord parse_entropy_record(const std::string& text);

/// CSV: window_id, closed_set_leaf, terminal_node, is_leaf, ood_score, stopped_at_depth.
std::string format_prediction_records(std::span<const std::int64_t> window_ids,
                                      std::span<const OpenSetOutput> outputs);

}  // namespace hioscar
