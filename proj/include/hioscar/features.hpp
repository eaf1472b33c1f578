#pragma once

#include "hioscar/dataset.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hioscar {

struct FeatureVector {
    std::vector<double> values;
    std::vector<std::string> feature_names;
    std::int64_t window_id = 0;
};

enum class FeatureKind { handcrafted, ecdf, external };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& name);

struct FeatureConfig {
    FeatureKind kind = FeatureKind::handcrafted;
    std::size_t ecdf_points = 15;
    std::optional<std::filesystem::path> external_path;

    void validate() const;
};

/// Per channel, in order: mean, population std, range, median absolute
/// deviation, excess kurtosis, skewness, mean absolute deviation from the mean.
/// Zero-variance channels report skew = kurtosis = 0.
FeatureVector handcrafted_features(const Window& window, const std::vector<std::string>& channel_names = {});

/// Per channel: n_points sorted-sample reads at quantiles (i + 0.5) / n_points
/// (index floor(q * L)), followed by the channel mean.
FeatureVector ecdf_features(const Window& window, std::size_t n_points,
                            const std::vector<std::string>& channel_names = {});

/// Reads "window_id, v_0, ..., v_{F-1}" lines and matches them to windows by id.
std::vector<FeatureVector> import_embeddings(const std::filesystem::path& path, const std::vector<Window>& windows);
std::vector<FeatureVector> parse_embeddings(const std::string& text, const std::vector<Window>& windows,
                                            const std::string& source_name = "<memory>");

/// Writes features in the import format (round-trips through import_embeddings).
std::string format_features(const std::vector<FeatureVector>& features);
void export_features(const std::filesystem::path& path, const std::vector<FeatureVector>& features);

/// Dispatches on config.kind. For external features the file is read once.
std::vector<FeatureVector> extract_features(const std::vector<Window>& windows, const FeatureConfig& config,
                                            const std::vector<std::string>& channel_names = {});

/// Column-wise z-score over feature vectors; fit on training features only.
class FeatureScaler {
public:
    static FeatureScaler fit(const std::vector<FeatureVector>& features);
    static FeatureScaler from_moments(std::vector<double> mean, std::vector<double> scale);

    void apply(FeatureVector& feature) const;
    void apply(std::vector<FeatureVector>& features) const;

    const std::vector<double>& mean() const { return mean_; }
    const std::vector<double>& scale() const { return scale_; }

private:
    std::vector<double> mean_;
    std::vector<double> scale_;
};

/// Row-major copy of the feature values, for code that only needs numbers.
std::vector<std::vector<double>> feature_matrix(const std::vector<FeatureVector>& features);

}  // namespace hioscar
