#include "hioscar/features.hpp"

#include "hioscar/common.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace hioscar {

namespace {

std::string channel_name(const std::vector<std::string>& names, std::size_t c) {
    return c < names.size() ? names[c] : "ch" + std::to_string(c);
}

double median_of(std::vector<double> values) {
    const std::size_t n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) {
        return *mid;
    }
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

void require_finite(const FeatureVector& f) {
    for (const double v : f.values) {
        if (!std::isfinite(v)) {
            throw ArgumentError("window " + std::to_string(f.window_id) + " produced a non-finite feature");
        }
    }
}

}  // namespace

std::string to_string(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::handcrafted:
            return "handcrafted";
        case FeatureKind::ecdf:
            return "ecdf";
        case FeatureKind::external:
            return "external";
    }
    return "handcrafted";
}

FeatureKind feature_kind_from_string(const std::string& name) {
    if (name == "handcrafted") {
        return FeatureKind::handcrafted;
    }
    if (name == "ecdf") {
        return FeatureKind::ecdf;
    }
    if (name == "external") {
        return FeatureKind::external;
    }
    throw ConfigError("unknown feature kind '" + name + "' (expected handcrafted, ecdf or external)");
}

void FeatureConfig::validate() const {
    if (kind == FeatureKind::external && !external_path) {
        throw ConfigError("feature kind 'external' requires external_path");
    }
    if (kind == FeatureKind::ecdf && ecdf_points == 0) {
        throw ConfigError("ecdf_points must be positive");
    }
}

FeatureVector handcrafted_features(const Window& window, const std::vector<std::string>& channel_names) {
    if (window.length() < 2) {
        throw ArgumentError("handcrafted_features: window needs at least 2 samples");
    }
    FeatureVector out;
    out.window_id = window.window_id;
    out.values.reserve(7 * window.channel_count());
    for (std::size_t c = 0; c < window.channel_count(); ++c) {
        const auto& x = window.data[c];
        const auto n = static_cast<double>(x.size());
        double sum = 0.0;
        for (const double v : x) {
            sum += v;
        }
        const double mean = sum / n;
        double m2 = 0.0;
        double m3 = 0.0;
        double m4 = 0.0;
        double abs_dev = 0.0;
        for (const double v : x) {
            const double d = v - mean;
            const double d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
            abs_dev += std::abs(d);
        }
        m2 /= n;
        m3 /= n;
        m4 /= n;
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());

        const double median = median_of(x);
        std::vector<double> deviations(x.size());
        std::transform(x.begin(), x.end(), deviations.begin(), [median](double v) { return std::abs(v - median); });

        double skew = 0.0;
        double kurt = 0.0;
        if (m2 > 0.0) {
            skew = m3 / std::pow(m2, 1.5);
            kurt = m4 / (m2 * m2) - 3.0;
        }
        const std::string name = channel_name(channel_names, c);
        const double values[7] = {mean, std::sqrt(m2), *hi - *lo, median_of(std::move(deviations)),
                                  kurt, skew, abs_dev / n};
        static constexpr const char* suffixes[7] = {"mean", "std", "range", "mad", "kurtosis", "skew", "errnorm"};
        for (int k = 0; k < 7; ++k) {
            out.values.push_back(values[k]);
            out.feature_names.push_back(name + "_" + suffixes[k]);
        }
    }
    return out;
}

FeatureVector ecdf_features(const Window& window, std::size_t n_points, const std::vector<std::string>& channel_names) {
    if (n_points == 0) {
        throw ArgumentError("ecdf_features: n_points must be positive");
    }
    if (window.length() < n_points) {
        throw ArgumentError("ecdf_features: window has " + std::to_string(window.length()) + " samples, fewer than " +
                            std::to_string(n_points) + " points");
    }
    FeatureVector out;
    out.window_id = window.window_id;
    out.values.reserve((n_points + 1) * window.channel_count());
    for (std::size_t c = 0; c < window.channel_count(); ++c) {
        std::vector<double> sorted = window.data[c];
        std::sort(sorted.begin(), sorted.end());
        const std::size_t length = sorted.size();
        const std::string name = channel_name(channel_names, c);
        for (std::size_t i = 0; i < n_points; ++i) {
            const double q = (static_cast<double>(i) + 0.5) / static_cast<double>(n_points);
            const auto index = std::min(length - 1, static_cast<std::size_t>(std::floor(q * static_cast<double>(length))));
            out.values.push_back(sorted[index]);
            out.feature_names.push_back(name + "_ecdf" + std::to_string(i));
        }
        double sum = 0.0;
        for (const double v : window.data[c]) {
            sum += v;
        }
        out.values.push_back(sum / static_cast<double>(length));
        out.feature_names.push_back(name + "_mean");
    }
    return out;
}

std::vector<FeatureVector> parse_embeddings(const std::string& text, const std::vector<Window>& windows,
                                            const std::string& source_name) {
    std::map<std::int64_t, std::vector<double>> by_id;
    std::optional<std::size_t> width;
    std::istringstream in(text);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        const std::string trimmed = trim(line);
        if (trimmed.empty() || trimmed.front() == '#') {
            continue;
        }
        const auto fields = split(trimmed, ',');
        const std::string where = source_name + ":" + std::to_string(line_number);
        std::int64_t id = 0;
        try {
            const double raw = parse_double(fields[0]);
            id = static_cast<std::int64_t>(raw);
            if (static_cast<double>(id) != raw) {
                throw ParseError("");
            }
        } catch (const ParseError&) {
            throw FormatError(where + ": bad window_id '" + trim(fields[0]) + "'");
        }
        std::vector<double> values;
        values.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            try {
                values.push_back(parse_double(fields[i]));
            } catch (const ParseError&) {
                throw FormatError(where + ": non-numeric value '" + trim(fields[i]) + "'");
            }
        }
        if (values.empty()) {
            throw FormatError(where + ": no embedding values");
        }
        if (width && *width != values.size()) {
            throw FormatError(where + ": ragged embedding length " + std::to_string(values.size()) + ", expected " +
                              std::to_string(*width));
        }
        width = values.size();
        if (!by_id.emplace(id, std::move(values)).second) {
            throw FormatError(where + ": duplicate window_id " + std::to_string(id));
        }
    }

    std::vector<FeatureVector> out;
    std::vector<std::int64_t> missing;
    std::vector<std::string> names;
    if (width) {
        for (std::size_t i = 0; i < *width; ++i) {
            names.push_back("emb" + std::to_string(i));
        }
    }
    for (const auto& w : windows) {
        const auto it = by_id.find(w.window_id);
        if (it == by_id.end()) {
            missing.push_back(w.window_id);
            continue;
        }
        FeatureVector f;
        f.window_id = w.window_id;
        f.values = it->second;
        f.feature_names = names;
        out.push_back(std::move(f));
    }
    if (!missing.empty()) {
        std::string ids;
        for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
            ids += (i ? ", " : "") + std::to_string(missing[i]);
        }
        if (missing.size() > 20) {
            ids += ", ...";
        }
        throw FormatError(source_name + ": embeddings missing for " + std::to_string(missing.size()) +
                          " window id(s): " + ids);
    }
    return out;
}

std::vector<FeatureVector> import_embeddings(const std::filesystem::path& path, const std::vector<Window>& windows) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ArgumentError("cannot open embedding file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_embeddings(buffer.str(), windows, path.filename().string());
}

std::string format_features(const std::vector<FeatureVector>& features) {
    std::string out;
    for (const auto& f : features) {
        out += std::to_string(f.window_id);
        for (const double v : f.values) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

void export_features(const std::filesystem::path& path, const std::vector<FeatureVector>& features) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ArgumentError("cannot write " + path.string());
    }
    out << format_features(features);
}

std::vector<FeatureVector> extract_features(const std::vector<Window>& windows, const FeatureConfig& config,
                                            const std::vector<std::string>& channel_names) {
    config.validate();
    std::vector<FeatureVector> out;
    switch (config.kind) {
        case FeatureKind::handcrafted:
            out.reserve(windows.size());
            for (const auto& w : windows) {
                out.push_back(handcrafted_features(w, channel_names));
            }
            break;
        case FeatureKind::ecdf:
            out.reserve(windows.size());
            for (const auto& w : windows) {
                out.push_back(ecdf_features(w, config.ecdf_points, channel_names));
            }
            break;
        case FeatureKind::external:
            out = import_embeddings(*config.external_path, windows);
            break;
    }
    for (const auto& f : out) {
        require_finite(f);
    }
    return out;
}

FeatureScaler FeatureScaler::fit(const std::vector<FeatureVector>& features) {
    if (features.empty()) {
        throw ArgumentError("FeatureScaler::fit: no features");
    }
    const std::size_t width = features.front().values.size();
    FeatureScaler scaler;
    scaler.mean_.assign(width, 0.0);
    scaler.scale_.assign(width, 0.0);
    for (const auto& f : features) {
        if (f.values.size() != width) {
            throw ArgumentError("FeatureScaler::fit: inconsistent feature lengths");
        }
        for (std::size_t i = 0; i < width; ++i) {
            scaler.mean_[i] += f.values[i];
        }
    }
    const auto n = static_cast<double>(features.size());
    for (auto& m : scaler.mean_) {
        m /= n;
    }
    for (const auto& f : features) {
        for (std::size_t i = 0; i < width; ++i) {
            const double d = f.values[i] - scaler.mean_[i];
            scaler.scale_[i] += d * d;
        }
    }
    for (auto& s : scaler.scale_) {
        s = std::sqrt(s / n);
        if (!(s > 0.0)) {
            s = 1.0;
        }
    }
    return scaler;
}

FeatureScaler FeatureScaler::from_moments(std::vector<double> mean, std::vector<double> scale) {
    if (mean.size() != scale.size()) {
        throw ArgumentError("FeatureScaler: mean/scale length mismatch");
    }
    FeatureScaler scaler;
    scaler.mean_ = std::move(mean);
    scaler.scale_ = std::move(scale);
    return scaler;
}

void FeatureScaler::apply(FeatureVector& feature) const {
    if (feature.values.size() != mean_.size()) {
        throw ArgumentError("FeatureScaler::apply: feature length " + std::to_string(feature.values.size()) +
                            " does not match " + std::to_string(mean_.size()));
    }
    for (std::size_t i = 0; i < mean_.size(); ++i) {
        feature.values[i] = (feature.values[i] - mean_[i]) / scale_[i];
    }
}

void FeatureScaler::apply(std::vector<FeatureVector>& features) const {
    for (auto& f : features) {
        apply(f);
    }
}

std::vector<std::vector<double>> feature_matrix(const std::vector<FeatureVector>& features) {
    std::vector<std::vector<double>> rows;
    rows.reserve(features.size());
    for (const auto& f : features) {
        rows.push_back(f.values);
    }
    return rows;
}

}  // namespace hioscar
