#pragma once

#include "adns/data.hpp"
#include "adns/metrics.hpp"
#include "adns/mlp.hpp"
#include "adns/nullspace.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace adns {

enum class Method { Vanilla, PureNullSpace, AdNS, AdNSRandomMerge };
enum class Optimizer { SGD, AdamProjected };

std::string to_string(Method m);
std::string to_string(Optimizer o);
std::string to_string(RankStrategy s);

struct TrainerConfig {
    Method method = Method::AdNS;
    /// Rate for tasks t > 1; task 1 uses first_task_learning_rate when set.
    double learning_rate = 0.05;
    std::optional<double> first_task_learning_rate;
    /// Epochs at which the rate is multiplied by lr_decay (step decay).
    std::vector<std::size_t> lr_milestones;
    double lr_decay = 0.5;
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    double beta = 0.0;
    double tau = 2.0;
    ThresholdSchedule schedule;
    RankPolicy rank_policy;
    Optimizer optimizer = Optimizer::SGD;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    /// Epochs of the classifier-only warm-up that records distillation targets.
    std::size_t distill_epochs = 20;
    /// Plain-SGD rate of that warm-up; defaults to the task's learning rate.
    std::optional<double> distill_learning_rate;
    /// Start the task head from the warm-up classifier instead of a fresh one.
    bool warm_start_head = false;
    std::uint64_t seed = 0;
    /// input_dim is taken from the data.
    ModelConfig model{0, {64, 64}, Activation::ReLU, true};

    void validate() const;
    double learning_rate_for(std::size_t task_index, std::size_t epoch) const;
    bool uses_null_space() const noexcept { return method != Method::Vanilla; }
};

struct RunState {
    MlpModel model;
    CovarianceStore covariance;
    std::vector<LayerNullSpace> bases;  ///< U_pre per backbone layer; empty before task 1 ends
    std::size_t task_index = 0;         ///< tasks completed so far
    std::mt19937_64 rng;
};

RunState make_run_state(const TrainerConfig& config, std::size_t input_dim);

struct EpochRecord {
    std::size_t task = 0;
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double distill_loss = 0.0;
};
using EpochSink = std::function<void(const EpochRecord&)>;

/// Optimizer memory; reset at the start of every task.
struct OptimizerState {
    std::size_t step = 0;
    std::vector<DenseMatrix> m_weight, v_weight;
    std::vector<Vector> m_bias, v_bias;
    DenseMatrix m_head_weight, v_head_weight;
    Vector m_head_bias, v_head_bias;
};

struct StepSettings {
    Optimizer optimizer = Optimizer::SGD;
    double learning_rate = 0.05;
    bool project = false;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
};

/// One parameter update. Backbone weight steps are projected through U U^T
/// when `project` is set; biases and the active head are updated unprojected.
/// In AdamProjected mode the moments see raw gradients and only the final
/// step direction is projected.
void apply_update(MlpModel& model, const GradientSet& grads, std::span<const LayerNullSpace> bases,
                  const StepSettings& settings, OptimizerState& state);

/// Algorithm 1 for one task: trains (projected when t > 1 and the method uses
/// null spaces), then accumulates covariances and refreshes U_pre.
void train_task(RunState& state, const TaskDataset& train, const TrainerConfig& config,
                const EpochSink& sink = {});

/// Per-layer inputs of the backbone for a whole dataset.
std::vector<DenseMatrix> capture_layer_features(const MlpModel& model, const TaskDataset& data);

/// Accuracy of the task's own head on `data`.
double evaluate_task(const MlpModel& model, const TaskDataset& data);

struct RunResult {
    AccuracyMatrix accuracy;
    RunState state;
};

using TaskEndHook = std::function<void(const RunState&, const AccuracyMatrix&)>;

RunResult run_sequence(std::span<const TaskSplit> tasks, const TrainerConfig& config,
                       const EpochSink& sink = {}, const TaskEndHook& on_task_end = {});

/// Continues a run from `state.task_index`; used for resume. With `stop_after`
/// set, training stops once that many tasks are complete.
void continue_sequence(RunState& state, AccuracyMatrix& accuracy, std::span<const TaskSplit> tasks,
                       const TrainerConfig& config, const EpochSink& sink = {},
                       const TaskEndHook& on_task_end = {},
                       std::optional<std::size_t> stop_after = std::nullopt);

}  // namespace adns
