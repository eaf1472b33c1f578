#include "hioscar/inference.hpp"

#include "hioscar/common.hpp"
#include "hioscar/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hioscar {

using json = nlohmann::ordered_json;

namespace {

constexpr double kLn2 = std::numbers::ln2;

double plogp(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

double path_likelihood(const NodeProbabilities& p, const Hierarchy& h, NodeId leaf) {
    if (!h.valid(leaf) || !h.is_leaf(leaf)) {
        throw ArgumentError("path_likelihood: node " + std::to_string(leaf) + " is not a leaf");
    }
    double product = 1.0;
    for (NodeId n = leaf; n != h.root(); n = h.parent(n)) {
        product *= p.p[static_cast<std::size_t>(n)];
    }
    return product;
}

std::vector<double> leaf_likelihoods(const NodeProbabilities& p, const Hierarchy& h) {
    std::vector<double> mass(h.size(), 0.0);
    mass[static_cast<std::size_t>(h.root())] = 1.0;
    std::vector<NodeId> stack{h.root()};
    while (!stack.empty()) {
        const NodeId n = stack.back();
        stack.pop_back();
        if (h.is_leaf(n)) {
            continue;
        }
        const auto [a, b] = h.children(n);
        mass[static_cast<std::size_t>(a)] = mass[static_cast<std::size_t>(n)] * p.p[static_cast<std::size_t>(a)];
        mass[static_cast<std::size_t>(b)] = mass[static_cast<std::size_t>(n)] * p.p[static_cast<std::size_t>(b)];
        stack.push_back(a);
        stack.push_back(b);
    }
    mass.resize(h.leaf_count());
    return mass;
}

double decision_entropy(const NodeProbabilities& p, const Hierarchy& h, NodeId n) {
    const auto [a, b] = h.children(n);
    const double e = -(plogp(p.p[static_cast<std::size_t>(a)]) + plogp(p.p[static_cast<std::size_t>(b)]));
    return std::clamp(e, 0.0, kLn2);
}

PathPrediction predict_leaf(const NodeProbabilities& p, const Hierarchy& h) {
    const auto likelihoods = leaf_likelihoods(p, h);
    NodeId best = 0;
    for (NodeId k = 1; k < static_cast<NodeId>(likelihoods.size()); ++k) {
        if (likelihoods[static_cast<std::size_t>(k)] > likelihoods[static_cast<std::size_t>(best)]) {
            best = k;
        }
    }
    PathPrediction pred;
    pred.leaf = best;
    pred.path = anc(h, best);
    pred.path.push_back(best);
    pred.path_likelihood = likelihoods[static_cast<std::size_t>(best)];
    for (std::size_t i = 0; i + 1 < pred.path.size(); ++i) {
        pred.decision_entropies.push_back(decision_entropy(p, h, pred.path[i]));
    }
    return pred;
}

double mean_path_entropy(const PathPrediction& prediction) {
    if (prediction.decision_entropies.empty()) {
        throw ArgumentError("mean_path_entropy: path has no internal decisions");
    }
    double sum = 0.0;
    for (const double e : prediction.decision_entropies) {
        sum += e;
    }
    return sum / static_cast<double>(prediction.decision_entropies.size());
}

double ThresholdTable::threshold(NodeId n) const {
    const auto it = per_node_threshold.find(n);
    return it == per_node_threshold.end() ? kLn2 : it->second;
}

double nearest_rank_quantile(std::span<const double> sorted, double level) {
    if (sorted.empty()) {
        throw ArgumentError("nearest_rank_quantile: no values");
    }
    if (!(level >= 0.0 && level <= 1.0)) {
        throw ArgumentError("quantile level must lie in [0, 1]");
    }
    const double n = static_cast<double>(sorted.size());
    // The small slack keeps products like 0.5 * 4 from rounding up a rank.
    auto rank = static_cast<std::size_t>(std::ceil(level * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

EntropyRecord record_entropies(std::span<const std::vector<double>> features, const HeadParameters& params,
                               const Hierarchy& h) {
    if (features.empty()) {
        throw ArgumentError("record_entropies: empty training set");
    }
    if (params.mode != HeadMode::hierarchical) {
        throw CapabilityError("entropy thresholds need a hierarchical head");
    }
    EntropyRecord record;
    for (const auto& x : features) {
        const auto p = pairwise_softmax(forward(params, x), h);
        const auto pred = predict_leaf(p, h);
        for (std::size_t i = 0; i < pred.decision_entropies.size(); ++i) {
            record.per_node[pred.path[i]].push_back(pred.decision_entropies[i]);
        }
    }
    for (auto& [node, values] : record.per_node) {
        std::sort(values.begin(), values.end());
    }
    return record;
}

ThresholdTable thresholds_at(const EntropyRecord& record, double lambda_hat) {
    if (!(lambda_hat >= 0.0 && lambda_hat <= 1.0)) {
        throw ArgumentError("lambda_hat must lie in [0, 1]");
    }
    ThresholdTable table;
    table.lambda_hat = lambda_hat;
    for (const auto& [node, values] : record.per_node) {
        table.per_node_threshold[node] = nearest_rank_quantile(values, lambda_hat);
        table.sample_counts[node] = values.size();
    }
    return table;
}

ThresholdTable fit_thresholds(std::span<const std::vector<double>> features, const HeadParameters& params,
                              const Hierarchy& h, double lambda_hat) {
    if (!(lambda_hat >= 0.0 && lambda_hat <= 1.0)) {
        throw ArgumentError("lambda_hat must lie in [0, 1]");
    }
    return thresholds_at(record_entropies(features, params, h), lambda_hat);
}

OpenSetOutput open_set_from_probabilities(const NodeProbabilities& p, const Hierarchy& h,
                                          const ThresholdTable& thresholds) {
    const auto pred = predict_leaf(p, h);
    OpenSetOutput out;
    out.closed_set_leaf = pred.leaf;
    out.ood_score = mean_path_entropy(pred);
    out.terminal_node = pred.leaf;
    out.is_leaf = true;
    out.stopped_at_depth = h.depth(pred.leaf);
    for (std::size_t i = 0; i < pred.decision_entropies.size(); ++i) {
        const NodeId n = pred.path[i];
        if (pred.decision_entropies[i] > thresholds.threshold(n)) {
            out.terminal_node = n;
            out.is_leaf = false;
            out.stopped_at_depth = static_cast<int>(i);
            break;
        }
    }
    return out;
}

OpenSetOutput open_set_predict(std::span<const double> x, const HeadParameters& params, const Hierarchy& h,
                               const ThresholdTable& thresholds) {
    if (params.mode != HeadMode::hierarchical) {
        throw CapabilityError("open-set localization needs a hierarchical head");
    }
    return open_set_from_probabilities(pairwise_softmax(forward(params, x), h), h, thresholds);
}

ClosedSetResult classify(std::span<const double> x, const HeadParameters& params, const Hierarchy& h) {
    const auto z = forward(params, x);
    ClosedSetResult result;
    if (params.mode == HeadMode::flat) {
        const auto p = flat_softmax(z);
        result.leaf = static_cast<NodeId>(std::max_element(p.begin(), p.end()) - p.begin());
        double entropy = 0.0;
        for (const double v : p) {
            entropy -= plogp(v);
        }
        result.ood_score = std::max(entropy, 0.0);
        return result;
    }
    const auto pred = predict_leaf(pairwise_softmax(z, h), h);
    result.leaf = pred.leaf;
    result.ood_score = mean_path_entropy(pred);
    return result;
}

double knn_ood_score(std::span<const double> x, std::span<const std::vector<double>> train, std::size_t k) {
    if (k == 0) {
        throw ArgumentError("knn_ood_score: k must be positive");
    }
    if (k > train.size()) {
        throw ArgumentError("knn_ood_score: k exceeds the number of training vectors");
    }
    const auto& table = kernels::active();
    std::vector<double> dist(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train[i].size() != x.size()) {
            throw ArgumentError("knn_ood_score: dimension mismatch");
        }
        dist[i] = table.squared_distance(x.data(), train[i].data(), x.size());
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    std::sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k));
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sum += std::sqrt(dist[i]);
    }
    return sum / static_cast<double>(k);
}

std::string serialize_thresholds(const ThresholdTable& table) {
    json doc;
    doc["lambda_hat"] = table.lambda_hat;
    json thresholds = json::object();
    json counts = json::object();
    for (const auto& [node, value] : table.per_node_threshold) {
        thresholds[std::to_string(node)] = value;
    }
    for (const auto& [node, count] : table.sample_counts) {
        counts[std::to_string(node)] = count;
    }
    doc["thresholds"] = thresholds;
    doc["counts"] = counts;
    return doc.dump(2) + "\n";
}

ThresholdTable parse_thresholds(const std::string& text) {
    try {
        const json doc = json::parse(text);
        ThresholdTable table;
        table.lambda_hat = doc.at("lambda_hat").get<double>();
        for (const auto& [key, value] : doc.at("thresholds").items()) {
            table.per_node_threshold[std::stoi(key)] = value.get<double>();
        }
        for (const auto& [key, value] : doc.at("counts").items()) {
            table.sample_counts[std::stoi(key)] = value.get<std::size_t>();
        }
        return table;
    } catch (const std::exception& e) {
        throw FormatError(std::string("threshold table: ") + e.what());
    }
}

std::string serialize_entropy_record(const EntropyRecord& record) {
    json doc = json::object();
    for (const auto& [node, values] : record.per_node) {
        doc[std::to_string(node)] = values;
    }
    return doc.dump() + "\n";
}

EntropyRecord parse_entropy_record(const std::string& text) {
    try {
        const json doc = json::parse(text);
        EntropyRecord record;
        for (const auto& [key, value] : doc.items()) {
            auto values = value.get<std::vector<double>>();
            std::sort(values.begin(), values.end());
            record.per_node[std::stoi(key)] = std::move(values);
        }
        return record;
    } catch (const std::exception& e) {
        throw FormatError(std::string("entropy record: ") + e.what());
    }
}

std::string format_prediction_records(std::span<const std::int64_t> window_ids, std::span<const OpenSetOutput> outputs) {
    if (window_ids.size() != outputs.size()) {
        throw ArgumentError("format_prediction_records: length mismatch");
    }
    std::string out = "window_id,closed_set_leaf,terminal_node,is_leaf,ood_score,stopped_at_depth\n";
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const auto& o = outputs[i];
        out += std::to_string(window_ids[i]) + "," + std::to_string(o.closed_set_leaf) + "," +
               std::to_string(o.terminal_node) + "," + (o.is_leaf ? "1" : "0") + "," + format_double(o.ood_score) +
               "," + std::to_string(o.stopped_at_depth) + "\n";
    }
    return out;
}

}  // namespace hioscar
