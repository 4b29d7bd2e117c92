#include "adns/mlp.hpp"

#include "adns/error.hpp"
#include "binary_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

namespace adns {

namespace {

LinearLayer init_layer(std::size_t in, std::size_t out, double bound, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-bound, bound);
    LinearLayer layer{DenseMatrix(out, in), Vector(out, 0.0)};
    for (double& w : layer.weight.values()) w = u(rng);
    return layer;
}

void fnv_mix(std::uint64_t& h, double v) noexcept {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xFFu;
        h *= 0x100000001b3ULL;
    }
}

void require_labels(std::span<const std::size_t> labels, std::size_t rows, std::size_t classes,
                    const char* op) {
    if (labels.size() != rows) {
        throw ValidationError(std::string(op) + ": " + std::to_string(labels.size()) +
                              " labels for " + std::to_string(rows) + " rows");
    }
    for (std::size_t y : labels) {
        if (y >= classes) {
            throw ValidationError(std::string(op) + ": label " + std::to_string(y) +
                                  " out of range for " + std::to_string(classes) + " classes");
        }
    }
}

Vector column_sums(const DenseMatrix& m) {
    Vector s(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) s[c] += row[c];
    }
    return s;
}

DenseMatrix activate(const DenseMatrix& z, Activation act) {
    if (act == Activation::Identity) return z;
    DenseMatrix a = z;
    for (double& v : a.values()) v = v > 0.0 ? v : 0.0;
    return a;
}

// Gradient of the combined objective with respect to the logits.
DenseMatrix logit_gradient(const DenseMatrix& logits, std::span<const std::size_t> labels,
                           const DenseMatrix* target, double beta, double tau) {
    const double n = static_cast<double>(logits.rows());
    DenseMatrix dz = softmax_rows(logits);
    for (std::size_t i = 0; i < logits.rows(); ++i) dz(i, labels[i]) -= 1.0;
    dz *= 1.0 / n;
    if (target != nullptr && beta != 0.0) {
        DenseMatrix q = softmax_rows(logits, tau);
        q -= softmax_rows(*target, tau);
        q *= beta / (tau * n);
        dz += q;
    }
    return dz;
}

void write_layer(detail::BinaryWriter& w, const LinearLayer& layer) {
    w.u32(static_cast<std::uint32_t>(layer.out()));
    w.u32(static_cast<std::uint32_t>(layer.in()));
    w.values(layer.weight.data());
    w.values(layer.bias);
}

LinearLayer read_layer(detail::BinaryReader& r) {
    const std::size_t out = r.u32();
    const std::size_t in = r.u32();
    LinearLayer layer;
    layer.weight = r.matrix(out, in);
    layer.bias = r.vector(out);
    return layer;
}

}  // namespace

MlpModel::MlpModel(ModelConfig config, std::mt19937_64& rng) : config_(std::move(config)) {
    if (config_.input_dim == 0) throw ValidationError("MlpModel: input_dim must be positive");
    std::size_t in = config_.input_dim;
    for (std::size_t width : config_.hidden) {
        if (width == 0) throw ValidationError("MlpModel: hidden width must be positive");
        backbone_.push_back(init_layer(in, width, std::sqrt(6.0 / static_cast<double>(in)), rng));
        in = width;
    }
}

LinearLayer& MlpModel::mutable_backbone(std::size_t l) {
    ++version_;
    return backbone_.at(l);
}

std::size_t MlpModel::feature_dim() const noexcept {
    return backbone_.empty() ? config_.input_dim : backbone_.back().out();
}

std::vector<std::size_t> MlpModel::layer_input_dims() const {
    std::vector<std::size_t> dims;
    for (const auto& layer : backbone_) dims.push_back(layer.in());
    return dims;
}

const LinearLayer& MlpModel::head(std::size_t task_id) const {
    if (!has_head(task_id)) throw ValidationError("MlpModel: no head for task " + std::to_string(task_id));
    return heads_[task_id - 1];
}

LinearLayer& MlpModel::mutable_head(std::size_t task_id) {
    if (!has_head(task_id)) throw ValidationError("MlpModel: no head for task " + std::to_string(task_id));
    ++version_;
    return heads_[task_id - 1];
}

LinearLayer MlpModel::make_head(std::size_t classes, std::mt19937_64& rng) const {
    if (classes == 0) throw ValidationError("MlpModel: head needs at least one class");
    const double fan_in = static_cast<double>(feature_dim());
    return init_layer(feature_dim(), classes, 1.0 / std::sqrt(fan_in), rng);
}

std::size_t MlpModel::add_head(std::size_t classes, std::mt19937_64& rng) {
    heads_.push_back(make_head(classes, rng));
    ++version_;
    return heads_.size();
}

std::uint64_t MlpModel::backbone_checksum() const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& layer : backbone_) {
        for (double v : layer.weight.data()) fnv_mix(h, v);
        for (double v : layer.bias) fnv_mix(h, v);
    }
    return h;
}

MlpModel MlpModel::from_parts(ModelConfig config, std::vector<LinearLayer> backbone,
                              std::vector<LinearLayer> heads) {
    std::size_t in = config.input_dim;
    if (backbone.size() != config.hidden.size()) {
        throw ValidationError("MlpModel: backbone depth does not match config");
    }
    for (std::size_t l = 0; l < backbone.size(); ++l) {
        const auto& layer = backbone[l];
        if (layer.in() != in || layer.out() != config.hidden[l] || layer.bias.size() != layer.out()) {
            throw ValidationError("MlpModel: backbone layer " + std::to_string(l) + " does not chain");
        }
        in = layer.out();
    }
    for (const auto& head : heads) {
        if (head.in() != in || head.bias.size() != head.out()) {
            throw ValidationError("MlpModel: head does not match backbone output");
        }
    }
    MlpModel model;
    model.config_ = std::move(config);
    model.backbone_ = std::move(backbone);
    model.heads_ = std::move(heads);
    return model;
}

DenseMatrix apply_linear(const LinearLayer& layer, const DenseMatrix& inputs) {
    if (inputs.cols() != layer.in()) {
        throw ValidationError("linear layer expects " + std::to_string(layer.in()) +
                              " inputs, got " + std::to_string(inputs.cols()));
    }
    DenseMatrix z = matmul_nt(inputs, layer.weight);
    for (std::size_t r = 0; r < z.rows(); ++r) {
        auto row = z.row(r);
        for (std::size_t c = 0; c < z.cols(); ++c) row[c] += layer.bias[c];
    }
    return z;
}

DenseMatrix backbone_features(const MlpModel& model, const DenseMatrix& inputs) {
    DenseMatrix h = inputs;
    for (std::size_t l = 0; l < model.backbone_layers(); ++l) {
        h = activate(apply_linear(model.backbone(l), h), model.config().activation);
    }
    return h;
}

ForwardTrace forward(const MlpModel& model, const DenseMatrix& inputs, std::size_t task_id) {
    if (inputs.cols() != model.config().input_dim) {
        throw ValidationError("forward: input width " + std::to_string(inputs.cols()) +
                              " does not match model input " +
                              std::to_string(model.config().input_dim));
    }
    const LinearLayer& head = model.head(task_id);

    ForwardTrace trace;
    trace.task_id = task_id;
    trace.model_version = model.version();
    DenseMatrix h = inputs;
    for (std::size_t l = 0; l < model.backbone_layers(); ++l) {
        trace.layer_inputs.push_back(h);
        DenseMatrix z = apply_linear(model.backbone(l), h);
        h = activate(z, model.config().activation);
        trace.pre_activations.push_back(std::move(z));
    }
    trace.layer_inputs.push_back(h);
    trace.logits = apply_linear(head, h);
    if (model.feature_capture()) {
        trace.features.assign(trace.layer_inputs.begin(), trace.layer_inputs.end() - 1);
    }
    return trace;
}

DenseMatrix softmax_rows(const DenseMatrix& logits, double temperature) {
    DenseMatrix p(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto in = logits.row(r);
        auto out = p.row(r);
        const double m = *std::max_element(in.begin(), in.end());
        double z = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            out[c] = std::exp((in[c] - m) / temperature);
            z += out[c];
        }
        for (double& v : out) v /= z;
    }
    return p;
}

double cross_entropy(const DenseMatrix& logits, std::span<const std::size_t> labels) {
    require_labels(labels, logits.rows(), logits.cols(), "cross_entropy");
    if (logits.rows() == 0) throw ValidationError("cross_entropy: empty batch");
    double total = 0.0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto row = logits.row(r);
        const double m = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double v : row) z += std::exp(v - m);
        total += m + std::log(z) - row[labels[r]];
    }
    return std::max(0.0, total / static_cast<double>(logits.rows()));
}

double distillation_loss(const DenseMatrix& recorded, const DenseMatrix& current, double tau) {
    if (recorded.rows() != current.rows() || recorded.cols() != current.cols()) {
        throw ValidationError("distillation_loss: shape mismatch");
    }
    if (!(tau > 0.0)) throw ValidationError("distillation_loss: tau must be > 0");
    if (current.rows() == 0) throw ValidationError("distillation_loss: empty batch");
    const DenseMatrix target = softmax_rows(recorded, tau);
    double total = 0.0;
    for (std::size_t r = 0; r < current.rows(); ++r) {
        auto row = current.row(r);
        double m = -std::numeric_limits<double>::infinity();
        for (double v : row) m = std::max(m, v / tau);
        double z = 0.0;
        for (double v : row) z += std::exp(v / tau - m);
        const double log_z = m + std::log(z);
        for (std::size_t c = 0; c < row.size(); ++c) {
            total -= target(r, c) * (row[c] / tau - log_z);
        }
    }
    return total / static_cast<double>(current.rows());
}

GradientSet backward(const MlpModel& model, const ForwardTrace& trace,
                     std::span<const std::size_t> labels, const DenseMatrix* distill_target,
                     double beta, double tau) {
    if (trace.model_version != model.version()) {
        throw ValidationError("backward: trace is stale (model changed since forward)");
    }
    if (trace.layer_inputs.size() != model.backbone_layers() + 1) {
        throw ValidationError("backward: trace does not belong to this model");
    }
    if (beta < 0.0) throw ValidationError("backward: beta must be >= 0");
    const DenseMatrix& logits = trace.logits;
    require_labels(labels, logits.rows(), logits.cols(), "backward");
    if (distill_target != nullptr &&
        (distill_target->rows() != logits.rows() || distill_target->cols() != logits.cols())) {
        throw ValidationError("backward: distillation target shape does not match logits");
    }

    GradientSet grads;
    grads.task_id = trace.task_id;
    grads.ce_loss = cross_entropy(logits, labels);
    if (distill_target != nullptr) grads.distill_loss = distillation_loss(*distill_target, logits, tau);

    DenseMatrix dz = logit_gradient(logits, labels, distill_target, beta, tau);
    const LinearLayer& head = model.head(trace.task_id);
    grads.head_weight = matmul_tn(dz, trace.layer_inputs.back());
    grads.head_bias = column_sums(dz);
    DenseMatrix dh = matmul(dz, head.weight);

    const std::size_t L = model.backbone_layers();
    grads.weight.resize(L);
    grads.bias.resize(L);
    for (std::size_t l = L; l-- > 0;) {
        if (model.config().activation == Activation::ReLU) {
            const DenseMatrix& z = trace.pre_activations[l];
            for (std::size_t i = 0; i < dh.size(); ++i) {
                if (!(z.data()[i] > 0.0)) dh.values()[i] = 0.0;
            }
        }
        grads.weight[l] = matmul_tn(dh, trace.layer_inputs[l]);
        grads.bias[l] = model.config().use_bias ? column_sums(dh) : Vector(dh.cols(), 0.0);
        if (l > 0) dh = matmul(dh, model.backbone(l).weight);
    }
    return grads;
}

DistillTargets record_distill_targets(const MlpModel& model, const DenseMatrix& features,
                                      std::span<const std::size_t> labels, std::size_t classes,
                                      std::size_t task_id, const ClassifierTrainConfig& config,
                                      std::mt19937_64& rng) {
    if (task_id <= 1) throw ValidationError("record_distill_targets: only defined for task_id > 1");
    if (config.epochs == 0 || config.batch_size == 0 || !(config.learning_rate > 0.0)) {
        throw ValidationError("record_distill_targets: invalid classifier training config");
    }
    require_labels(labels, features.rows(), classes, "record_distill_targets");
    const std::uint64_t checksum = model.backbone_checksum();

    const DenseMatrix frozen = backbone_features(model, features);
    LinearLayer head = model.make_head(classes, rng);
    std::vector<std::size_t> order(frozen.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, order.size() - start);
            std::span<const std::size_t> idx(order.data() + start, count);
            const DenseMatrix x = frozen.gather_rows(idx);
            std::vector<std::size_t> y(count);
            for (std::size_t i = 0; i < count; ++i) y[i] = labels[idx[i]];
            const DenseMatrix dz = logit_gradient(apply_linear(head, x), y, nullptr, 0.0, 1.0);
            DenseMatrix gw = matmul_tn(dz, x);
            const Vector gb = column_sums(dz);
            gw *= config.learning_rate;
            head.weight -= gw;
            for (std::size_t c = 0; c < classes; ++c) head.bias[c] -= config.learning_rate * gb[c];
        }
    }

    if (model.backbone_checksum() != checksum) {
        throw InternalError("record_distill_targets: backbone changed while frozen");
    }
    DenseMatrix logits = apply_linear(head, frozen);
    return {std::move(logits), std::move(head)};
}

double accuracy(const DenseMatrix& logits, std::span<const std::size_t> labels) {
    require_labels(labels, logits.rows(), logits.cols(), "accuracy");
    if (logits.rows() == 0) throw ValidationError("accuracy: empty batch");
    std::size_t correct = 0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto row = logits.row(r);
        const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
        if (best == labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

void write_model_checkpoint(const std::string& path, const MlpModel& model) {
    detail::BinaryWriter w(path);
    w.magic("ADNM");
    w.u32(kModelCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(model.backbone_layers()));
    w.u32(model.config().activation == Activation::ReLU ? 0u : 1u);
    w.u32(model.config().use_bias ? 1u : 0u);
    w.u32(static_cast<std::uint32_t>(model.config().input_dim));
    for (std::size_t l = 0; l < model.backbone_layers(); ++l) write_layer(w, model.backbone(l));
    w.u32(static_cast<std::uint32_t>(model.head_count()));
    for (std::size_t t = 1; t <= model.head_count(); ++t) write_layer(w, model.head(t));
    w.finish();
}

MlpModel read_model_checkpoint(const std::string& path) {
    detail::BinaryReader r(path);
    r.expect_magic("ADNM");
    const auto version = r.u32();
    if (version != kModelCheckpointVersion) {
        throw IoError(path, "unsupported checkpoint version " + std::to_string(version));
    }
    const auto layers = r.u32();
    ModelConfig config;
    const auto act = r.u32();
    if (act > 1) throw IoError(path, "unknown activation code");
    config.activation = act == 0 ? Activation::ReLU : Activation::Identity;
    config.use_bias = r.u32() != 0;
    config.input_dim = r.u32();
    std::vector<LinearLayer> backbone;
    for (std::uint32_t l = 0; l < layers; ++l) {
        backbone.push_back(read_layer(r));
        config.hidden.push_back(backbone.back().out());
    }
    const auto heads_count = r.u32();
    std::vector<LinearLayer> heads;
    for (std::uint32_t t = 0; t < heads_count; ++t) heads.push_back(read_layer(r));
    try {
        return MlpModel::from_parts(std::move(config), std::move(backbone), std::move(heads));
    } catch (const ValidationError& e) {
        throw IoError(path, e.what());
    }
}

}  // namespace adns
