#pragma once

#include "hioscar/features.hpp"
#include "hioscar/hierarchy.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hioscar {

/// hierarchical: one output per hierarchy node, softmax over sibling pairs.
/// flat: one output per class, single softmax (the no-hierarchy ablation).
enum class HeadMode { hierarchical, flat };

std::string to_string(HeadMode mode);
HeadMode head_mode_from_string(const std::string& name);

struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;  // outputs x inputs, row-major
    std::vector<double> bias;
};

/// MLP: F -> hidden... -> output width, ReLU between layers, dropout on the
/// input of the final layer while training.
struct HeadParameters {
    std::vector<DenseLayer> layers;
    std::vector<std::size_t> hidden_sizes;
    double dropout_rate = 0.2;
    HeadMode mode = HeadMode::hierarchical;

    std::size_t input_size() const { return layers.empty() ? 0 : layers.front().inputs; }
    std::size_t output_size() const { return layers.empty() ? 0 : layers.back().outputs; }
    std::size_t parameter_count() const;

    /// He-uniform weights, zero biases.
    static HeadParameters initialize(std::size_t inputs, const std::vector<std::size_t>& hidden_sizes,
                                     std::size_t outputs, double dropout_rate, HeadMode mode, std::uint64_t seed);
};

/// Output width the head needs for a hierarchy in the given mode.
std::size_t head_width(const Hierarchy& h, HeadMode mode);

/// Inference forward pass (no dropout).
std::vector<double> forward(const HeadParameters& params, std::span<const double> x);

/// p[n] for every node; p[root] = 1 and each sibling pair sums to one.
struct NodeProbabilities {
    std::vector<double> p;
};

NodeProbabilities pairwise_softmax(std::span<const double> activations, const Hierarchy& h);
/// Plain softmax over class outputs (flat mode); p has one entry per leaf.
std::vector<double> flat_softmax(std::span<const double> activations);

/// Inverse-frequency weights indexed by leaf id: w(y) = N / (count(y) * K).
struct ClassWeights {
    std::vector<double> w;

    static ClassWeights inverse_frequency(std::span<const NodeId> labels, std::size_t class_count);
    static ClassWeights uniform(std::size_t class_count, double value = 1.0);
    double operator[](NodeId leaf) const { return w.at(static_cast<std::size_t>(leaf)); }
};

inline constexpr double kProbabilityFloor = 1e-12;

/// W_y * sum over the path (excluding root, including y) of -log p(n).
double loss_id(const NodeProbabilities& p, NodeId y, const ClassWeights& weights, const Hierarchy& h);
/// Sum over internal nodes off anc(y) of KL(children || uniform).
double loss_ood(const NodeProbabilities& p, NodeId y, const Hierarchy& h);
double total_loss(const NodeProbabilities& p, NodeId y, const ClassWeights& weights, const Hierarchy& h);

/// Weighted cross-entropy of the flat head; its off-path term is identically 0.
double flat_loss(std::span<const double> class_probabilities, NodeId y, const ClassWeights& weights);

/// Loss of one sample given raw head outputs, in either mode. When
/// activation_grad is non-empty it receives dLoss/dActivation.
double sample_loss(std::span<const double> activations, NodeId y, const ClassWeights& weights, const Hierarchy& h,
                   HeadMode mode, std::span<double> activation_grad = {});

struct LayerGradient {
    std::vector<double> weights;
    std::vector<double> bias;
};
using HeadGradient = std::vector<LayerGradient>;

/// Features with their leaf ids (labels already mapped through the hierarchy).
struct LabelledFeatures {
    std::vector<std::vector<double>> x;
    std::vector<NodeId> y;

    std::size_t size() const { return x.size(); }
};

LabelledFeatures label_features(const std::vector<FeatureVector>& features, const std::vector<std::string>& labels,
                                const Hierarchy& h);

/// Exact gradient of the mean sample loss over `batch` (indices into data),
/// dropout disabled. Optionally reports the mean loss.
HeadGradient gradient(const HeadParameters& params, const LabelledFeatures& data, std::span<const std::size_t> batch,
                      const ClassWeights& weights, const Hierarchy& h, double* mean_loss = nullptr);

double mean_loss(const HeadParameters& params, const LabelledFeatures& data, std::span<const std::size_t> indices,
                 const ClassWeights& weights, const Hierarchy& h);

struct TrainConfig {
    double learning_rate = 1e-4;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t max_epochs = 250;
    std::size_t early_stop_patience = 5;
    std::size_t batch_size = 64;
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden_sizes{256};
    double dropout_rate = 0.2;

    void validate() const;
};

struct EpochLog {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
};

struct TrainResult {
    HeadParameters params;
    std::vector<EpochLog> log;
    std::size_t best_epoch = 0;
};

/// Adam with seeded shuffling; a stratified validation split is carved from
/// `data`. Returns the parameters of the best validation epoch.
TrainResult train(const LabelledFeatures& data, const Hierarchy& h, const TrainConfig& config,
                  HeadMode mode = HeadMode::hierarchical);

/// Optimizer state for one parameter set.
class AdamOptimizer {
public:
    AdamOptimizer(const HeadParameters& params, const TrainConfig& config);
    void step(HeadParameters& params, const HeadGradient& grad);

private:
    HeadGradient m_;
    HeadGradient v_;
    double learning_rate_;
    double beta1_;
    double beta2_;
    double epsilon_;
    std::size_t t_ = 0;
};

// Checkpoint: JSON with layer shapes and weights, the hierarchy fingerprint,
// the feature configuration and the training-set feature scaler.
struct Checkpoint {
    HeadParameters params;
    std::string hierarchy_fingerprint;
    FeatureConfig feature_config;
    std::optional<FeatureScaler> feature_scaler;
};

inline constexpr int kCheckpointVersion = 1;

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
/// Refuses (FormatError) when the stored fingerprint differs from `expected`'s.
Checkpoint load_checkpoint(const std::filesystem::path& path, const Hierarchy& expected);

}  // namespace hioscar
