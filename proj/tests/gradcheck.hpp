#pragma once

#include "adns/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace adns::testing_util {

struct GradCheckResult {
    double worst_relative_error = 0.0;
    std::size_t entries = 0;
};

/// Central differences over every parameter of the backbone and the active
/// head, compared with backward(). Error per entry is |a - n| / max(floor, |a| + |n|).
inline GradCheckResult check_gradients(const MlpModel& model, const DenseMatrix& x, std::span<const std::size_t> labels,
                                       std::size_t task_id, const DenseMatrix* target, double beta, double tau,
                                       double step = 1e-5, double floor = 1e-6) {
    const GradientSet g = backward(model, forward(model, x, task_id), labels, target, beta, tau);
    auto loss = [&](const MlpModel& m) {
        const ForwardTrace t = forward(m, x, task_id);
        double v = cross_entropy(t.logits, labels);
        if (target && beta > 0.0) v += beta * distillation_loss(*target, t.logits, tau);
        return v;
    };
    GradCheckResult r;
    auto probe = [&](const std::function<double&(MlpModel&)>& entry, double analytic) {
        MlpModel plus = model, minus = model;
        entry(plus) += step;
        entry(minus) -= step;
        const double numeric = (loss(plus) - loss(minus)) / (2.0 * step);
        const double err = std::abs(numeric - analytic) / std::max(floor, std::abs(numeric) + std::abs(analytic));
        r.worst_relative_error = std::max(r.worst_relative_error, err);
        ++r.entries;
    };
    for (std::size_t l = 0; l < model.backbone_layers(); ++l) {
        for (std::size_t i = 0; i < g.weight[l].size(); ++i) {
            probe([&](MlpModel& m) -> double& { return m.mutable_backbone(l).weight.values()[i]; }, g.weight[l].data()[i]);
        }
        if (model.config().use_bias) {
            for (std::size_t i = 0; i < g.bias[l].size(); ++i) {
                probe([&](MlpModel& m) -> double& { return m.mutable_backbone(l).bias[i]; }, g.bias[l][i]);
            }
        }
    }
    for (std::size_t i = 0; i < g.head_weight.size(); ++i) {
        probe([&](MlpModel& m) -> double& { return m.mutable_head(task_id).weight.values()[i]; }, g.head_weight.data()[i]);
    }
    for (std::size_t i = 0; i < g.head_bias.size(); ++i) {
        probe([&](MlpModel& m) -> double& { return m.mutable_head(task_id).bias[i]; }, g.head_bias[i]);
    }
    return r;
}

/// Random model, batch, labels and recorded logits for one gradient check.
struct GradCheckCase {
    MlpModel model;
    DenseMatrix x;
    std::vector<std::size_t> labels;
    DenseMatrix target;
};

inline double smallest_pre_activation(const MlpModel& model, const DenseMatrix& x, std::size_t task_id) {
    double m = std::numeric_limits<double>::infinity();
    for (const DenseMatrix& z : forward(model, x, task_id).pre_activations)
        for (double v : z.data()) m = std::min(m, std::abs(v));
    return m;
}

/// The loss has kinks where a ReLU input is exactly zero, so the draw is
/// repeated until every pre-activation is well clear of the difference step.
/// Biases get small random values; zero biases put dead units on a kink.
inline GradCheckCase make_gradcheck_case(std::uint64_t seed, bool use_bias = true) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;) {
        GradCheckCase c;
        c.model = MlpModel({5, {4, 3}, Activation::ReLU, use_bias}, rng);
        c.model.add_head(3, rng);
        c.model.add_head(3, rng);  // task 2 is the checked head; task 1 stays untouched
        if (use_bias) {
            for (std::size_t l = 0; l < c.model.backbone_layers(); ++l)
                for (double& b : c.model.mutable_backbone(l).bias) b = 0.1 * n(rng);
        }
        for (double& b : c.model.mutable_head(2).bias) b = 0.1 * n(rng);
        c.x = DenseMatrix(6, 5);
        for (double& v : c.x.values()) v = n(rng);
        c.target = DenseMatrix(6, 3);
        for (double& v : c.target.values()) v = 3.0 * n(rng);
        std::uniform_int_distribution<std::size_t> label(0, 2);
        for (int i = 0; i < 6; ++i) c.labels.push_back(label(rng));
        if (smallest_pre_activation(c.model, c.x, 2) > 1e-3) return c;
    }
}

}  // namespace adns::testing_util
