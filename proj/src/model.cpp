#include "hioscar/model.hpp"

#include "hioscar/common.hpp"
#include "hioscar/kernels.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace hioscar {

using json = nlohmann::ordered_json;

namespace {

struct ForwardCache {
    std::vector<std::vector<double>> inputs;  // input of each layer
    std::vector<std::vector<double>> pre;     // pre-activations of hidden layers
    std::vector<double> mask;                 // dropout scale on the final layer's input
};

std::vector<double> forward_cached(const HeadParameters& params, std::span<const double> x, ForwardCache& cache,
                                   Rng* dropout_rng) {
    const auto& table = kernels::active();
    const std::size_t n_layers = params.layers.size();
    cache.inputs.resize(n_layers);
    cache.pre.resize(n_layers);
    cache.mask.clear();
    cache.inputs[0].assign(x.begin(), x.end());
    std::vector<double> out;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const auto& layer = params.layers[l];
        out.assign(layer.outputs, 0.0);
        table.gemv(layer.weights.data(), layer.bias.data(), cache.inputs[l].data(), out.data(), layer.outputs,
                   layer.inputs);
        if (l + 1 == n_layers) {
            break;
        }
        cache.pre[l] = out;
        auto& next = cache.inputs[l + 1];
        next.resize(out.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            next[i] = out[i] > 0.0 ? out[i] : 0.0;
        }
        if (l + 2 == n_layers && dropout_rng != nullptr && params.dropout_rate > 0.0) {
            const double keep = 1.0 - params.dropout_rate;
            cache.mask.resize(next.size());
            for (std::size_t i = 0; i < next.size(); ++i) {
                cache.mask[i] = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
                next[i] *= cache.mask[i];
            }
        }
    }
    return out;
}

void backward(const HeadParameters& params, const ForwardCache& cache, std::vector<double> dout, HeadGradient& grad) {
    const auto& table = kernels::active();
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        const auto& layer = params.layers[l];
        auto& g = grad[l];
        const auto& in = cache.inputs[l];
        for (std::size_t r = 0; r < layer.outputs; ++r) {
            if (dout[r] != 0.0) {
                table.axpy(dout[r], in.data(), g.weights.data() + r * layer.inputs, layer.inputs);
            }
            g.bias[r] += dout[r];
        }
        if (l == 0) {
            break;
        }
        std::vector<double> din(layer.inputs, 0.0);
        for (std::size_t r = 0; r < layer.outputs; ++r) {
            if (dout[r] != 0.0) {
                table.axpy(dout[r], layer.weights.data() + r * layer.inputs, din.data(), layer.inputs);
            }
        }
        if (l + 1 == params.layers.size() && !cache.mask.empty()) {
            for (std::size_t i = 0; i < din.size(); ++i) {
                din[i] *= cache.mask[i];
            }
        }
        const auto& pre = cache.pre[l - 1];
        for (std::size_t i = 0; i < din.size(); ++i) {
            if (!(pre[i] > 0.0)) {
                din[i] = 0.0;
            }
        }
        dout = std::move(din);
    }
}

HeadGradient zero_gradient(const HeadParameters& params) {
    HeadGradient grad(params.layers.size());
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        grad[l].weights.assign(params.layers[l].weights.size(), 0.0);
        grad[l].bias.assign(params.layers[l].bias.size(), 0.0);
    }
    return grad;
}

void scale_gradient(HeadGradient& grad, double factor) {
    for (auto& g : grad) {
        for (double& v : g.weights) {
            v *= factor;
        }
        for (double& v : g.bias) {
            v *= factor;
        }
    }
}

double clamped_log(double p) { return std::log(std::max(p, kProbabilityFloor)); }

// Marks anc(y): the internal nodes whose split lies on the path to y.
std::vector<char> on_path_mask(const Hierarchy& h, NodeId y) {
    std::vector<char> mask(h.size(), 0);
    for (NodeId p = h.parent(y); p != kNoNode; p = h.parent(p)) {
        mask[static_cast<std::size_t>(p)] = 1;
    }
    return mask;
}

void check_leaf(const Hierarchy& h, NodeId y) {
    if (!h.valid(y) || !h.is_leaf(y)) {
        throw ArgumentError("label node " + std::to_string(y) + " is not a leaf");
    }
}

void check_finite(double loss, std::size_t epoch, const char* what) {
    if (!std::isfinite(loss)) {
        throw TrainingError(std::string("non-finite ") + what + " at epoch " + std::to_string(epoch) +
                            "; check feature scaling and learning rate");
    }
}

}  // namespace

std::string to_string(HeadMode mode) { return mode == HeadMode::flat ? "flat" : "hierarchical"; }

HeadMode head_mode_from_string(const std::string& name) {
    if (name == "hierarchical") {
        return HeadMode::hierarchical;
    }
    if (name == "flat") {
        return HeadMode::flat;
    }
    throw ConfigError("unknown head mode '" + name + "' (expected hierarchical or flat)");
}

std::size_t HeadParameters::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) {
        n += l.weights.size() + l.bias.size();
    }
    return n;
}

HeadParameters HeadParameters::initialize(std::size_t inputs, const std::vector<std::size_t>& hidden_sizes,
                                          std::size_t outputs, double dropout_rate, HeadMode mode,
                                          std::uint64_t seed) {
    if (inputs == 0 || outputs == 0) {
        throw ArgumentError("head needs positive input and output widths");
    }
    HeadParameters params;
    params.hidden_sizes = hidden_sizes;
    params.dropout_rate = dropout_rate;
    params.mode = mode;
    Rng rng(seed);
    std::size_t fan_in = inputs;
    std::vector<std::size_t> widths = hidden_sizes;
    widths.push_back(outputs);
    for (const std::size_t width : widths) {
        if (width == 0) {
            throw ArgumentError("hidden layer sizes must be positive");
        }
        DenseLayer layer;
        layer.inputs = fan_in;
        layer.outputs = width;
        layer.weights.resize(width * fan_in);
        layer.bias.assign(width, 0.0);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (double& w : layer.weights) {
            w = rng.uniform(-limit, limit);
        }
        params.layers.push_back(std::move(layer));
        fan_in = width;
    }
    return params;
}

std::size_t head_width(const Hierarchy& h, HeadMode mode) {
    return mode == HeadMode::flat ? h.leaf_count() : h.size();
}

std::vector<double> forward(const HeadParameters& params, std::span<const double> x) {
    if (params.layers.empty()) {
        throw ArgumentError("forward: head has no layers");
    }
    if (x.size() != params.input_size()) {
        throw ArgumentError("forward: input has " + std::to_string(x.size()) + " features, head expects " +
                            std::to_string(params.input_size()));
    }
    ForwardCache cache;
    return forward_cached(params, x, cache, nullptr);
}

NodeProbabilities pairwise_softmax(std::span<const double> activations, const Hierarchy& h) {
    if (activations.size() != h.size()) {
        throw ArgumentError("pairwise_softmax: expected " + std::to_string(h.size()) + " activations, got " +
                            std::to_string(activations.size()));
    }
    NodeProbabilities probs;
    probs.p.assign(h.size(), 0.0);
    probs.p[static_cast<std::size_t>(h.root())] = 1.0;
    for (const NodeId n : h.internal_nodes()) {
        const auto [a, b] = h.children(n);
        const double za = activations[static_cast<std::size_t>(a)];
        const double zb = activations[static_cast<std::size_t>(b)];
        const double m = std::max(za, zb);
        const double ea = std::exp(za - m);
        const double eb = std::exp(zb - m);
        const double sum = ea + eb;
        probs.p[static_cast<std::size_t>(a)] = ea / sum;
        probs.p[static_cast<std::size_t>(b)] = eb / sum;
    }
    return probs;
}

std::vector<double> flat_softmax(std::span<const double> activations) {
    if (activations.empty()) {
        throw ArgumentError("flat_softmax: no activations");
    }
    const double m = *std::max_element(activations.begin(), activations.end());
    std::vector<double> p(activations.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(activations[i] - m);
        sum += p[i];
    }
    for (double& v : p) {
        v /= sum;
    }
    return p;
}

ClassWeights ClassWeights::inverse_frequency(std::span<const NodeId> labels, std::size_t class_count) {
    if (labels.empty() || class_count == 0) {
        throw ArgumentError("class weights need labelled samples");
    }
    std::vector<std::size_t> counts(class_count, 0);
    for (const NodeId y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
            throw ArgumentError("class weights: label out of range");
        }
        ++counts[static_cast<std::size_t>(y)];
    }
    ClassWeights weights;
    weights.w.resize(class_count);
    const auto total = static_cast<double>(labels.size());
    for (std::size_t k = 0; k < class_count; ++k) {
        if (counts[k] == 0) {
            throw ArgumentError("class weights: class " + std::to_string(k) + " has no training samples");
        }
        weights.w[k] = total / (static_cast<double>(counts[k]) * static_cast<double>(class_count));
    }
    return weights;
}

ClassWeights ClassWeights::uniform(std::size_t class_count, double value) {
    ClassWeights weights;
    weights.w.assign(class_count, value);
    return weights;
}

double loss_id(const NodeProbabilities& p, NodeId y, const ClassWeights& weights, const Hierarchy& h) {
    check_leaf(h, y);
    double sum = 0.0;
    for (NodeId n = y; n != h.root(); n = h.parent(n)) {
        sum -= clamped_log(p.p[static_cast<std::size_t>(n)]);
    }
    return weights[y] * sum;
}

double loss_ood(const NodeProbabilities& p, NodeId y, const Hierarchy& h) {
    check_leaf(h, y);
    const auto on_path = on_path_mask(h, y);
    double sum = 0.0;
    for (const NodeId n : h.internal_nodes()) {
        if (on_path[static_cast<std::size_t>(n)]) {
            continue;
        }
        const auto [a, b] = h.children(n);
        for (const NodeId c : {a, b}) {
            const double pc = p.p[static_cast<std::size_t>(c)];
            sum += pc * (clamped_log(pc) + std::log(2.0));
        }
    }
    return sum;
}

double total_loss(const NodeProbabilities& p, NodeId y, const ClassWeights& weights, const Hierarchy& h) {
    return loss_id(p, y, weights, h) + loss_ood(p, y, h);
}

double flat_loss(std::span<const double> class_probabilities, NodeId y, const ClassWeights& weights) {
    if (y < 0 || static_cast<std::size_t>(y) >= class_probabilities.size()) {
        throw ArgumentError("flat_loss: label out of range");
    }
    return -weights[y] * clamped_log(class_probabilities[static_cast<std::size_t>(y)]);
}

double sample_loss(std::span<const double> z, NodeId y, const ClassWeights& weights, const Hierarchy& h,
                   HeadMode mode, std::span<double> dz) {
    const bool want_grad = !dz.empty();
    if (want_grad) {
        std::fill(dz.begin(), dz.end(), 0.0);
    }
    if (mode == HeadMode::flat) {
        const auto p = flat_softmax(z);
        const double py = p.at(static_cast<std::size_t>(y));
        const double w = weights[y];
        if (want_grad && py > kProbabilityFloor) {
            for (std::size_t k = 0; k < p.size(); ++k) {
                dz[k] = w * (p[k] - (static_cast<NodeId>(k) == y ? 1.0 : 0.0));
            }
        }
        return -w * clamped_log(py);
    }

    check_leaf(h, y);
    const auto probs = pairwise_softmax(z, h);
    const auto& p = probs.p;
    const double w = weights[y];
    double loss = 0.0;

    // In-distribution term along the path to y.
    for (NodeId n = y; n != h.root(); n = h.parent(n)) {
        const NodeId s = h.sibling(n);
        const double pn = p[static_cast<std::size_t>(n)];
        loss -= w * clamped_log(pn);
        if (want_grad && pn > kProbabilityFloor) {
            const double ps = p[static_cast<std::size_t>(s)];
            dz[static_cast<std::size_t>(n)] -= w * ps;
            dz[static_cast<std::size_t>(s)] += w * ps;
        }
    }

    // Off-path splits pulled toward (0.5, 0.5).
    const auto on_path = on_path_mask(h, y);
    for (const NodeId n : h.internal_nodes()) {
        if (on_path[static_cast<std::size_t>(n)]) {
            continue;
        }
        const auto [a, b] = h.children(n);
        const double pa = p[static_cast<std::size_t>(a)];
        const double pb = p[static_cast<std::size_t>(b)];
        loss += pa * (clamped_log(pa) + std::log(2.0)) + pb * (clamped_log(pb) + std::log(2.0));
        if (want_grad) {
            // d/dz_a of KL = p_a p_b log(p_a / p_b) = p_a p_b (z_a - z_b)
            const double g = pa * pb * (z[static_cast<std::size_t>(a)] - z[static_cast<std::size_t>(b)]);
            dz[static_cast<std::size_t>(a)] += g;
            dz[static_cast<std::size_t>(b)] -= g;
        }
    }
    return loss;
}

LabelledFeatures label_features(const std::vector<FeatureVector>& features, const std::vector<std::string>& labels,
                                const Hierarchy& h) {
    if (features.size() != labels.size()) {
        throw ArgumentError("label_features: feature and label counts differ");
    }
    LabelledFeatures data;
    data.x.reserve(features.size());
    data.y.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        data.x.push_back(features[i].values);
        data.y.push_back(h.leaf_of(labels[i]));
    }
    return data;
}

namespace {

HeadGradient batch_gradient(const HeadParameters& params, const LabelledFeatures& data,
                            std::span<const std::size_t> batch, const ClassWeights& weights, const Hierarchy& h,
                            Rng* dropout_rng, double* mean_loss_out) {
    if (batch.empty()) {
        throw ArgumentError("gradient: empty batch");
    }
    if (params.output_size() != head_width(h, params.mode)) {
        throw ArgumentError("gradient: head width does not match the hierarchy");
    }
    HeadGradient grad = zero_gradient(params);
    ForwardCache cache;
    std::vector<double> dz(params.output_size());
    double loss_sum = 0.0;
    for (const std::size_t i : batch) {
        const auto z = forward_cached(params, data.x.at(i), cache, dropout_rng);
        loss_sum += sample_loss(z, data.y[i], weights, h, params.mode, dz);
        backward(params, cache, dz, grad);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    scale_gradient(grad, inv);
    if (mean_loss_out != nullptr) {
        *mean_loss_out = loss_sum * inv;
    }
    return grad;
}

}  // namespace

HeadGradient gradient(const HeadParameters& params, const LabelledFeatures& data, std::span<const std::size_t> batch,
                      const ClassWeights& weights, const Hierarchy& h, double* mean_loss_out) {
    return batch_gradient(params, data, batch, weights, h, nullptr, mean_loss_out);
}

double mean_loss(const HeadParameters& params, const LabelledFeatures& data, std::span<const std::size_t> indices,
                 const ClassWeights& weights, const Hierarchy& h) {
    if (indices.empty()) {
        throw ArgumentError("mean_loss: no samples");
    }
    double sum = 0.0;
    for (const std::size_t i : indices) {
        const auto z = forward(params, data.x.at(i));
        sum += sample_loss(z, data.y[i], weights, h, params.mode);
    }
    return sum / static_cast<double>(indices.size());
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("learning_rate must be non-negative");
    }
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(adam_epsilon > 0.0)) {
        throw ConfigError("adam_epsilon must be positive");
    }
    if (max_epochs == 0 || early_stop_patience == 0 || batch_size == 0) {
        throw ConfigError("max_epochs, early_stop_patience and batch_size must be positive");
    }
    if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("validation_fraction must lie in (0, 1)");
    }
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
        throw ConfigError("dropout_rate must lie in [0, 1)");
    }
}

AdamOptimizer::AdamOptimizer(const HeadParameters& params, const TrainConfig& config)
    : m_(zero_gradient(params)),
      v_(zero_gradient(params)),
      learning_rate_(config.learning_rate),
      beta1_(config.adam_beta1),
      beta2_(config.adam_beta2),
      epsilon_(config.adam_epsilon) {}

void AdamOptimizer::step(HeadParameters& params, const HeadGradient& grad) {
    ++t_;
    const kernels::AdamCoefficients coeff{learning_rate_,
                                          beta1_,
                                          beta2_,
                                          epsilon_,
                                          1.0 - std::pow(beta1_, static_cast<double>(t_)),
                                          1.0 - std::pow(beta2_, static_cast<double>(t_))};
    const auto& table = kernels::active();
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& layer = params.layers[l];
        table.adam_step(layer.weights.data(), grad[l].weights.data(), m_[l].weights.data(), v_[l].weights.data(),
                        layer.weights.size(), coeff);
        table.adam_step(layer.bias.data(), grad[l].bias.data(), m_[l].bias.data(), v_[l].bias.data(),
                        layer.bias.size(), coeff);
    }
}

TrainResult train(const LabelledFeatures& data, const Hierarchy& h, const TrainConfig& config, HeadMode mode) {
    config.validate();
    if (data.size() < 2) {
        throw ArgumentError("train: need at least two samples");
    }
    if (h.leaf_count() < 2) {
        throw ArgumentError("train: need at least two classes");
    }
    const std::size_t width = data.x.front().size();
    for (const auto& row : data.x) {
        if (row.size() != width) {
            throw ArgumentError("train: inconsistent feature lengths");
        }
    }

    Rng rng(config.seed);
    // Stratified validation split: round(fraction * count) per class, keeping
    // at least one fitting sample per class.
    std::map<NodeId, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[data.y[i]].push_back(i);
    }
    std::vector<std::size_t> fit_idx;
    std::vector<std::size_t> val_idx;
    for (auto& [label, idx] : by_class) {
        rng.shuffle(idx);
        auto n_val = static_cast<std::size_t>(std::llround(config.validation_fraction * static_cast<double>(idx.size())));
        n_val = std::min(n_val, idx.size() - 1);
        val_idx.insert(val_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
        fit_idx.insert(fit_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    }
    if (val_idx.empty()) {
        val_idx.push_back(fit_idx.back());
        fit_idx.pop_back();
    }
    std::sort(fit_idx.begin(), fit_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    std::vector<NodeId> fit_labels;
    for (const std::size_t i : fit_idx) {
        fit_labels.push_back(data.y[i]);
    }
    const auto weights = ClassWeights::inverse_frequency(fit_labels, h.leaf_count());

    TrainResult result;
    HeadParameters params = HeadParameters::initialize(width, config.hidden_sizes, head_width(h, mode),
                                                       config.dropout_rate, mode, rng.next());
    AdamOptimizer optimizer(params, config);
    Rng dropout_rng(rng.next());

    double best = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    result.params = params;
    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        std::vector<std::size_t> order = fit_idx;
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(start + config.batch_size, order.size());
            double batch_loss = 0.0;
            const auto grad = batch_gradient(params, data, std::span(order).subspan(start, end - start), weights, h,
                                             &dropout_rng, &batch_loss);
            check_finite(batch_loss, epoch, "batch loss");
            optimizer.step(params, grad);
        }
        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = mean_loss(params, data, fit_idx, weights, h);
        entry.validation_loss = mean_loss(params, data, val_idx, weights, h);
        check_finite(entry.train_loss, epoch, "training loss");
        check_finite(entry.validation_loss, epoch, "validation loss");
        result.log.push_back(entry);
        if (entry.validation_loss < best) {
            best = entry.validation_loss;
            result.params = params;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.early_stop_patience) {
            break;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
    const auto& params = checkpoint.params;
    json doc;
    doc["format"] = "hioscar-checkpoint";
    doc["version"] = kCheckpointVersion;
    doc["mode"] = to_string(params.mode);
    doc["hierarchy_fingerprint"] = checkpoint.hierarchy_fingerprint;
    doc["dropout_rate"] = params.dropout_rate;
    doc["hidden_sizes"] = params.hidden_sizes;
    json features;
    features["kind"] = to_string(checkpoint.feature_config.kind);
    features["ecdf_points"] = checkpoint.feature_config.ecdf_points;
    if (checkpoint.feature_config.external_path) {
        features["external_path"] = checkpoint.feature_config.external_path->string();
    }
    doc["feature_config"] = features;
    if (checkpoint.feature_scaler) {
        doc["feature_scaler"] = {{"mean", checkpoint.feature_scaler->mean()},
                                 {"scale", checkpoint.feature_scaler->scale()}};
    }
    json layers = json::array();
    for (const auto& layer : params.layers) {
        layers.push_back({{"inputs", layer.inputs},
                          {"outputs", layer.outputs},
                          {"weights", layer.weights},
                          {"bias", layer.bias}});
    }
    doc["layers"] = layers;
    return doc.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
    Checkpoint checkpoint;
    try {
        const json doc = json::parse(text);
        if (doc.value("format", "") != "hioscar-checkpoint") {
            throw FormatError("not a checkpoint file");
        }
        if (doc.at("version").get<int>() != kCheckpointVersion) {
            throw FormatError("unsupported checkpoint version " + doc.at("version").dump());
        }
        auto& params = checkpoint.params;
        params.mode = head_mode_from_string(doc.at("mode").get<std::string>());
        params.dropout_rate = doc.at("dropout_rate").get<double>();
        params.hidden_sizes = doc.at("hidden_sizes").get<std::vector<std::size_t>>();
        checkpoint.hierarchy_fingerprint = doc.at("hierarchy_fingerprint").get<std::string>();
        const auto& features = doc.at("feature_config");
        checkpoint.feature_config.kind = feature_kind_from_string(features.at("kind").get<std::string>());
        checkpoint.feature_config.ecdf_points = features.at("ecdf_points").get<std::size_t>();
        if (features.contains("external_path")) {
            checkpoint.feature_config.external_path = features["external_path"].get<std::string>();
        }
        if (doc.contains("feature_scaler")) {
            checkpoint.feature_scaler =
                FeatureScaler::from_moments(doc["feature_scaler"].at("mean").get<std::vector<double>>(),
                                            doc["feature_scaler"].at("scale").get<std::vector<double>>());
        }
        std::size_t expected_inputs = 0;
        for (const auto& item : doc.at("layers")) {
            DenseLayer layer;
            layer.inputs = item.at("inputs").get<std::size_t>();
            layer.outputs = item.at("outputs").get<std::size_t>();
            layer.weights = item.at("weights").get<std::vector<double>>();
            layer.bias = item.at("bias").get<std::vector<double>>();
            if (layer.weights.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs) {
                throw FormatError("checkpoint layer shape does not match its data");
            }
            if (expected_inputs != 0 && layer.inputs != expected_inputs) {
                throw FormatError("checkpoint layers are not chained");
            }
            for (const double w : layer.weights) {
                if (!std::isfinite(w)) {
                    throw FormatError("checkpoint contains non-finite weights");
                }
            }
            expected_inputs = layer.outputs;
            params.layers.push_back(std::move(layer));
        }
        if (params.layers.empty()) {
            throw FormatError("checkpoint has no layers");
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    } catch (const ConfigError& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
    return checkpoint;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ArgumentError("cannot write checkpoint " + path.string());
    }
    out << serialize_checkpoint(checkpoint);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const Hierarchy& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot open checkpoint " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    auto checkpoint = parse_checkpoint(buffer.str());
    const std::string actual = hierarchy_fingerprint(expected);
    if (checkpoint.hierarchy_fingerprint != actual) {
        throw FormatError("checkpoint " + path.string() + " was trained on hierarchy " +
                          checkpoint.hierarchy_fingerprint + ", not " + actual + "; refusing to evaluate");
    }
    if (checkpoint.params.output_size() != head_width(expected, checkpoint.params.mode)) {
        throw FormatError("checkpoint head width does not match the hierarchy");
    }
    return checkpoint;
}

}  // namespace hioscar
