#pragma once

// Generators shared by the unit and acceptance suites.

#include "hioscar/common.hpp"
#include "hioscar/hierarchy.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace hioscar::testing {

inline std::string class_label(std::size_t i) {
    std::string s = "c";
    if (i < 10) s += '0';
    return s + std::to_string(i);
}

/// Random binary tree over k leaves, built by merging random pairs.
inline Hierarchy random_tree(std::size_t k, Rng& rng, bool with_distances = false) {
    std::vector<HierarchyNode> nodes(2 * k - 1);
    for (std::size_t i = 0; i < k; ++i) {
        nodes[i].class_name = class_label(i);
    }
    std::vector<NodeId> open;
    for (std::size_t i = 0; i < k; ++i) open.push_back(static_cast<NodeId>(i));
    double distance = 0.0;
    for (std::size_t m = 0; m + 1 < k; ++m) {
        const auto a = static_cast<std::size_t>(rng.below(open.size()));
        const NodeId left = open[a];
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(a));
        const auto b = static_cast<std::size_t>(rng.below(open.size()));
        const NodeId right = open[b];
        open.erase(open.begin() + static_cast<std::ptrdiff_t>(b));
        const auto id = static_cast<NodeId>(k + m);
        nodes[id].left = left;
        nodes[id].right = right;
        nodes[left].parent = id;
        nodes[right].parent = id;
        if (with_distances) {
            distance += rng.uniform(0.01, 0.3);
            nodes[id].merge_distance = distance;
        }
        open.push_back(id);
    }
    return Hierarchy::from_nodes(std::move(nodes));
}

/// Isotropic Gaussian samples around the given means.
struct GaussianSet {
    std::vector<std::vector<double>> x;
    std::vector<std::string> y;
};

inline GaussianSet gaussian_clusters(const std::vector<std::vector<double>>& means,
                                     const std::vector<std::string>& names, std::size_t per_class, double sigma,
                                     Rng& rng) {
    GaussianSet out;
    for (std::size_t c = 0; c < means.size(); ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            std::vector<double> v(means[c].size());
            for (std::size_t f = 0; f < v.size(); ++f) {
                v[f] = means[c][f] + sigma * rng.normal();
            }
            out.x.push_back(std::move(v));
            out.y.push_back(names[c]);
        }
    }
    return out;
}

/// One-hot style class means scaled so that pairwise separation is
/// `scale * sqrt(2)`, plus a shared offset keeping centroids away from zero.
inline std::vector<std::vector<double>> orthogonal_means(std::size_t classes, std::size_t features, double scale) {
    std::vector<std::vector<double>> means(classes, std::vector<double>(features, 0.0));
    for (std::size_t c = 0; c < classes; ++c) {
        means[c][c % features] = scale;
    }
    return means;
}

/// Multi-subject accelerometer-like CSV: each subject performs each activity
/// for `seconds` at `hz`. Activities differ in frequency, amplitude and offset.
inline std::string activity_csv(std::size_t subjects, const std::vector<std::string>& activities, double seconds,
                                double hz, std::uint64_t seed) {
    Rng rng(seed);
    std::string out = "time,subject,activity,acc_x,acc_y,acc_z\n";
    for (std::size_t s = 0; s < subjects; ++s) {
        double t = 0.0;
        for (std::size_t a = 0; a < activities.size(); ++a) {
            const double freq = 0.5 + 0.7 * static_cast<double>(a);
            const double amp = 0.3 + 0.4 * static_cast<double>(a % 3);
            const double offset = 0.5 * static_cast<double>(a);
            const auto n = static_cast<std::size_t>(seconds * hz);
            for (std::size_t i = 0; i < n; ++i) {
                const double w = 2.0 * 3.141592653589793 * freq * t;
                out += format_double(t) + ",s" + std::to_string(s) + "," + activities[a] + "," +
                       format_double(amp * std::sin(w) + 0.1 * rng.normal()) + "," +
                       format_double(amp * std::cos(w) + offset + 0.1 * rng.normal()) + "," +
                       format_double(offset - 0.2 * std::sin(2.0 * w) + 0.1 * rng.normal()) + "\n";
                t += 1.0 / hz;
            }
        }
    }
    return out;
}

}  // namespace hioscar::testing
