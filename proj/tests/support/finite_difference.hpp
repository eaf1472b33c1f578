#pragma once

#include "hioscar/model.hpp"

#include <algorithm>
#include <cmath>

namespace hioscar::testing {

/// Largest relative deviation between the analytic gradient and central
/// differences of mean_loss, over every weight and bias.
inline double max_gradient_error(HeadParameters params, const LabelledFeatures& data,
                                 std::span<const std::size_t> batch, const ClassWeights& weights, const Hierarchy& h,
                                 double step = 1e-5) {
    const auto analytic = gradient(params, data, batch, weights, h);
    double worst = 0.0;
    auto probe = [&](double& slot, double exact) {
        const double saved = slot;
        slot = saved + step;
        const double up = mean_loss(params, data, batch, weights, h);
        slot = saved - step;
        const double down = mean_loss(params, data, batch, weights, h);
        slot = saved;
        const double numeric = (up - down) / (2.0 * step);
        const double scale = std::max({std::abs(exact), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(exact - numeric) / scale);
    };
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& layer = params.layers[l];
        for (std::size_t i = 0; i < layer.weights.size(); ++i) probe(layer.weights[i], analytic[l].weights[i]);
        for (std::size_t i = 0; i < layer.bias.size(); ++i) probe(layer.bias[i], analytic[l].bias[i]);
    }
    return worst;
}

}  // namespace hioscar::testing
