#pragma once

#include "adns/trainer.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace adns::testing_util {

/// Two-task stream whose inputs lie in a `rank`-dimensional subspace of R^dim
/// (task 1) and anywhere in R^dim (task 2). Labels come from a random linear rule.
inline std::vector<TaskSplit> subspace_tasks(std::uint64_t seed, std::size_t dim = 8, std::size_t rank = 3,
                                             std::size_t n = 60) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    DenseMatrix mix(rank, dim);
    for (double& v : mix.values()) v = g(rng);
    auto make = [&](bool restricted, std::size_t task_id) {
        TaskDataset d;
        d.task_id = task_id;
        d.class_count = 2;
        DenseMatrix x(n, dim);
        if (restricted) {
            DenseMatrix z(n, rank);
            for (double& v : z.values()) v = g(rng);
            x = matmul(z, mix);
        } else {
            for (double& v : x.values()) v = g(rng);
        }
        d.features = x;
        for (std::size_t i = 0; i < n; ++i) {
            d.labels.push_back(x(i, 0) + 0.5 * x(i, 1) > 0.0 ? 1 : 0);
        }
        if (std::count(d.labels.begin(), d.labels.end(), 1u) == 0) d.labels[0] = 1;
        if (std::count(d.labels.begin(), d.labels.end(), 0u) == 0) d.labels[0] = 0;
        return d;
    };
    std::vector<TaskSplit> tasks;
    for (std::size_t t = 1; t <= 2; ++t) {
        TaskDataset train = make(t == 1, t);
        tasks.push_back({train, train});
    }
    return tasks;
}

/// `count` tasks whose inputs all lie in one shared `rank`-dimensional subspace.
inline std::vector<TaskSplit> shared_subspace_tasks(std::uint64_t seed, std::size_t count, std::size_t dim = 8,
                                                    std::size_t rank = 3, std::size_t n = 60) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    DenseMatrix mix(rank, dim);
    for (double& v : mix.values()) v = g(rng);
    std::vector<TaskSplit> tasks;
    for (std::size_t t = 1; t <= count; ++t) {
        TaskDataset d;
        d.task_id = t;
        d.class_count = 2;
        DenseMatrix z(n, rank);
        for (double& v : z.values()) v = g(rng);
        d.features = matmul(z, mix);
        for (std::size_t i = 0; i < n; ++i) d.labels.push_back(z(i, t % rank) > 0.0 ? 1 : 0);
        d.labels[0] = 0;
        d.labels[1] = 1;
        tasks.push_back({d, d});
    }
    return tasks;
}

/// Linear two-layer bias-free network trained with exact null-space projection.
inline TrainerConfig linear_null_space_config(Method method = Method::PureNullSpace) {
    TrainerConfig c;
    c.method = method;
    c.model = {0, {6}, Activation::Identity, false};
    c.learning_rate = 0.05;
    c.epochs = 15;
    c.batch_size = 10;
    c.schedule = {1.0, 1.0, 2};
    return c;
}

/// Max-abs change of task-1 logits on task-1 data caused by training task 2.
inline double task_one_logit_drift(std::uint64_t seed, Method method = Method::PureNullSpace) {
    const std::vector<TaskSplit> tasks = subspace_tasks(seed);
    const TrainerConfig config = linear_null_space_config(method);
    RunState state = make_run_state(config, tasks[0].train.features.cols());
    train_task(state, tasks[0].train, config);
    const DenseMatrix before = forward(state.model, tasks[0].train.features, 1).logits;
    train_task(state, tasks[1].train, config);
    const DenseMatrix after = forward(state.model, tasks[0].train.features, 1).logits;
    return max_abs_diff(before, after);
}

}  // namespace adns::testing_util
