#include "adns/trainer.hpp"

#include "adns/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace adns {

std::string to_string(Method m) {
    switch (m) {
        case Method::Vanilla: return "Vanilla";
        case Method::PureNullSpace: return "PureNullSpace";
        case Method::AdNS: return "AdNS";
        case Method::AdNSRandomMerge: return "AdNSRandomMerge";
    }
    return "?";
}

std::string to_string(Optimizer o) { return o == Optimizer::SGD ? "SGD" : "AdamProjected"; }

std::string to_string(RankStrategy s) {
    switch (s) {
        case RankStrategy::Max: return "Max";
        case RankStrategy::Avg: return "Avg";
        case RankStrategy::Min: return "Min";
    }
    return "?";
}

void TrainerConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ValidationError("TrainerConfig: learning_rate must be > 0");
    if (first_task_learning_rate && !(*first_task_learning_rate > 0.0)) {
        throw ValidationError("TrainerConfig: first_task_learning_rate must be > 0");
    }
    if (!(lr_decay > 0.0)) throw ValidationError("TrainerConfig: lr_decay must be > 0");
    if (epochs < 1) throw ValidationError("TrainerConfig: epochs must be >= 1");
    if (batch_size < 1) throw ValidationError("TrainerConfig: batch_size must be >= 1");
    if (beta < 0.0) throw ValidationError("TrainerConfig: beta must be >= 0");
    if (!(tau > 0.0)) throw ValidationError("TrainerConfig: tau must be > 0");
    if (method == Method::Vanilla && beta > 0.0) {
        throw ValidationError("TrainerConfig: beta > 0 requires a null-space method (Vanilla has no distillation)");
    }
    if (beta > 0.0 && distill_epochs < 1) throw ValidationError("TrainerConfig: distill_epochs must be >= 1");
    if (distill_learning_rate && !(*distill_learning_rate > 0.0)) {
        throw ValidationError("TrainerConfig: distill_learning_rate must be > 0");
    }
    if (optimizer == Optimizer::AdamProjected &&
        !(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0 &&
          adam_epsilon > 0.0)) {
        throw ValidationError("TrainerConfig: invalid Adam parameters");
    }
    schedule.validate();
    rank_policy.validate();
    if (uses_null_space() && schedule.alpha_min < 1.0) {
        throw ValidationError("TrainerConfig: alpha must be >= 1 so the smallest eigenvalue is always kept");
    }
}

double TrainerConfig::learning_rate_for(std::size_t task_index, std::size_t epoch) const {
    double lr = task_index == 1 && first_task_learning_rate ? *first_task_learning_rate : learning_rate;
    for (std::size_t m : lr_milestones)
        if (epoch >= m) lr *= lr_decay;
    return lr;
}

RunState make_run_state(const TrainerConfig& config, std::size_t input_dim) {
    RunState state;
    state.rng.seed(config.seed);
    ModelConfig mc = config.model;
    mc.input_dim = input_dim;
    state.model = MlpModel(mc, state.rng);
    state.covariance = CovarianceStore(state.model.layer_input_dims());
    return state;
}

namespace {

void adam_moment(DenseMatrix& m, DenseMatrix& v, const DenseMatrix& g, double b1, double b2) {
    if (m.rows() != g.rows() || m.cols() != g.cols()) {
        m = DenseMatrix(g.rows(), g.cols());
        v = DenseMatrix(g.rows(), g.cols());
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double gi = g.data()[i];
        m.values()[i] = b1 * m.data()[i] + (1.0 - b1) * gi;
        v.values()[i] = b2 * v.data()[i] + (1.0 - b2) * gi * gi;
    }
}

DenseMatrix adam_direction(const DenseMatrix& m, const DenseMatrix& v, const StepSettings& s,
                           std::size_t step) {
    const double c1 = 1.0 - std::pow(s.adam_beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(s.adam_beta2, static_cast<double>(step));
    DenseMatrix d(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.size(); ++i) {
        d.values()[i] = (m.data()[i] / c1) / (std::sqrt(v.data()[i] / c2) + s.adam_epsilon);
    }
    return d;
}

// Vectors reuse the matrix path as 1 x n rows.
DenseMatrix as_row(const Vector& v) { return DenseMatrix(1, v.size(), v); }

void subtract_scaled(Vector& target, const DenseMatrix& step, double lr) {
    for (std::size_t i = 0; i < target.size(); ++i) target[i] -= lr * step.data()[i];
}

// Direction for one parameter tensor: the raw gradient (SGD) or the
// bias-corrected Adam direction computed from raw-gradient moments.
DenseMatrix direction(const DenseMatrix& g, DenseMatrix& m, DenseMatrix& v, const StepSettings& s,
                      std::size_t step) {
    if (s.optimizer == Optimizer::SGD) return g;
    adam_moment(m, v, g, s.adam_beta1, s.adam_beta2);
    return adam_direction(m, v, s, step);
}

}  // namespace

void apply_update(MlpModel& model, const GradientSet& grads, std::span<const LayerNullSpace> bases,
                  const StepSettings& settings, OptimizerState& state) {
    const std::size_t L = model.backbone_layers();
    if (grads.weight.size() != L || grads.bias.size() != L) {
        throw ValidationError("apply_update: gradient set does not match the model");
    }
    if (settings.project && bases.size() != L) {
        throw ValidationError("apply_update: projection requested but null-space bases are missing");
    }
    if (!(settings.learning_rate > 0.0)) throw ValidationError("apply_update: learning_rate must be > 0");
    const LinearLayer& head_ref = model.head(grads.task_id);
    if (grads.head_weight.rows() != head_ref.out() || grads.head_weight.cols() != head_ref.in()) {
        throw ValidationError("apply_update: head gradient shape mismatch");
    }

    ++state.step;
    state.m_weight.resize(L);
    state.v_weight.resize(L);
    state.m_bias.resize(L);
    state.v_bias.resize(L);
    const double lr = settings.learning_rate;

    for (std::size_t l = 0; l < L; ++l) {
        const DenseMatrix& g = grads.weight[l];
        const LinearLayer& cur = model.backbone(l);
        if (g.rows() != cur.out() || g.cols() != cur.in()) {
            throw ValidationError("apply_update: weight gradient shape mismatch at layer " + std::to_string(l));
        }
        DenseMatrix step = direction(g, state.m_weight[l], state.v_weight[l], settings, state.step);
        if (settings.project) step = project_gradient(step, bases[l]);

        DenseMatrix mb = as_row(state.m_bias[l]);
        DenseMatrix vb = as_row(state.v_bias[l]);
        const DenseMatrix bias_step = direction(as_row(grads.bias[l]), mb, vb, settings, state.step);
        state.m_bias[l] = mb.data();
        state.v_bias[l] = vb.data();

        LinearLayer& layer = model.mutable_backbone(l);
        step *= lr;
        layer.weight -= step;
        if (model.config().use_bias) subtract_scaled(layer.bias, bias_step, lr);
    }

    const DenseMatrix head_step =
        direction(grads.head_weight, state.m_head_weight, state.v_head_weight, settings, state.step);
    DenseMatrix mb = as_row(state.m_head_bias);
    DenseMatrix vb = as_row(state.v_head_bias);
    const DenseMatrix head_bias_step = direction(as_row(grads.head_bias), mb, vb, settings, state.step);
    state.m_head_bias = mb.data();
    state.v_head_bias = vb.data();

    LinearLayer& head = model.mutable_head(grads.task_id);
    head.weight -= head_step * lr;
    subtract_scaled(head.bias, head_bias_step, lr);
}

std::vector<DenseMatrix> capture_layer_features(const MlpModel& model, const TaskDataset& data) {
    std::vector<DenseMatrix> out;
    DenseMatrix h = data.features;
    for (std::size_t l = 0; l < model.backbone_layers(); ++l) {
        out.push_back(h);
        DenseMatrix z = apply_linear(model.backbone(l), h);
        if (model.config().activation == Activation::ReLU) {
            for (double& v : z.values()) v = v > 0.0 ? v : 0.0;
        }
        h = std::move(z);
    }
    return out;
}

double evaluate_task(const MlpModel& model, const TaskDataset& data) {
    return accuracy(forward(model, data.features, data.task_id).logits, data.labels);
}

void train_task(RunState& state, const TaskDataset& train, const TrainerConfig& config,
                const EpochSink& sink) {
    config.validate();
    train.validate();
    const std::size_t t = state.task_index + 1;
    if (train.task_id != t) {
        throw ValidationError("train_task: expected task " + std::to_string(t) + ", got task " +
                              std::to_string(train.task_id));
    }
    if (train.features.cols() != state.model.config().input_dim) {
        throw ValidationError("train_task: feature width does not match the model input");
    }
    if (state.model.head_count() != state.task_index) {
        throw ValidationError("train_task: run state has an inconsistent number of heads");
    }
    const bool project = config.uses_null_space() && t > 1;
    if (project && state.bases.size() != state.model.backbone_layers()) {
        throw ValidationError("train_task: null-space bases missing for a projected task");
    }
    MlpModel& model = state.model;
    model.add_head(train.class_count, state.rng);

    std::optional<DenseMatrix> targets;
    if (config.uses_null_space() && t > 1 && config.beta > 0.0) {
        const ClassifierTrainConfig warmup{
            config.distill_epochs, config.distill_learning_rate.value_or(config.learning_rate_for(t, 0)),
            config.batch_size};
        DistillTargets recorded = record_distill_targets(model, train.features, train.labels,
                                                         train.class_count, t, warmup, state.rng);
        targets = std::move(recorded.logits);
        if (config.warm_start_head) model.mutable_head(t) = std::move(recorded.head);
    }

    StepSettings settings{config.optimizer, 0.0, project, config.adam_beta1, config.adam_beta2,
                          config.adam_epsilon};
    OptimizerState opt;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::size_t> y;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        settings.learning_rate = config.learning_rate_for(t, epoch);
        std::shuffle(order.begin(), order.end(), state.rng);
        double ce_sum = 0.0;
        double distill_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, order.size() - start);
            std::span<const std::size_t> idx(order.data() + start, count);
            const DenseMatrix x = train.features.gather_rows(idx);
            y.resize(count);
            for (std::size_t i = 0; i < count; ++i) y[i] = train.labels[idx[i]];

            const ForwardTrace trace = forward(model, x, t);
            std::optional<DenseMatrix> batch_target;
            if (targets) batch_target = targets->gather_rows(idx);
            const GradientSet grads = backward(model, trace, y, batch_target ? &*batch_target : nullptr,
                                               config.beta, config.tau);
            apply_update(model, grads, state.bases, settings, opt);
            ce_sum += grads.ce_loss;
            distill_sum += grads.distill_loss;
            ++batches;
        }
        if (sink) {
            sink({t, epoch + 1, ce_sum / static_cast<double>(batches),
                  distill_sum / static_cast<double>(batches)});
        }
    }

    if (config.uses_null_space() && model.backbone_layers() > 0) {
        state.covariance.add_batch(capture_layer_features(model, train));
        state.covariance.commit_task();
        const double alpha = alpha_at(config.schedule, t);
        std::vector<LayerNullSpace> next;
        for (std::size_t l = 0; l < model.backbone_layers(); ++l) {
            LayerNullSpace cur = extract_null_space(state.covariance.covariance(l), alpha, t);
            if (t == 1 || config.method == Method::PureNullSpace) {
                next.push_back(std::move(cur));
                continue;
            }
            const LayerNullSpace& pre = state.bases[l];
            if (config.method == Method::AdNS) {
                next.push_back(merge_shared_low_rank(pre, cur, config.rank_policy));
            } else {
                const std::size_t k = std::min(target_rank(config.rank_policy, pre.k(), cur.k()),
                                               pre.k() + cur.k());
                next.push_back(merge_random(pre, cur, k, state.rng()));
            }
        }
        state.bases = std::move(next);
    }
    state.task_index = t;
}

void continue_sequence(RunState& state, AccuracyMatrix& accuracy, std::span<const TaskSplit> tasks,
                       const TrainerConfig& config, const EpochSink& sink,
                       const TaskEndHook& on_task_end, std::optional<std::size_t> stop_after) {
    if (tasks.empty()) throw ValidationError("run_sequence: no tasks");
    if (accuracy.tasks() != tasks.size()) throw ValidationError("run_sequence: accuracy matrix size mismatch");
    if (state.task_index > tasks.size()) throw ValidationError("run_sequence: state is past the last task");
    TrainerConfig cfg = config;
    cfg.schedule.total_tasks = tasks.size();
    const std::size_t last = std::min(tasks.size(), stop_after.value_or(tasks.size()));
    for (std::size_t j = state.task_index; j < last; ++j) {
        train_task(state, tasks[j].train, cfg, sink);
        for (std::size_t i = 0; i <= j; ++i) accuracy.set(j, i, evaluate_task(state.model, tasks[i].test));
        if (on_task_end) on_task_end(state, accuracy);
    }
}

RunResult run_sequence(std::span<const TaskSplit> tasks, const TrainerConfig& config,
                       const EpochSink& sink, const TaskEndHook& on_task_end) {
    if (tasks.empty()) throw ValidationError("run_sequence: no tasks");
    RunResult result{AccuracyMatrix(tasks.size()),
                     make_run_state(config, tasks.front().train.features.cols())};
    continue_sequence(result.state, result.accuracy, tasks, config, sink, on_task_end);
    return result;
}

}  // namespace adns
