#pragma once

#include "adns/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace adns {

enum class Activation { ReLU, Identity };

struct ModelConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> hidden;  ///< backbone output widths; may be empty
    Activation activation = Activation::ReLU;
    bool use_bias = true;
};

/// y = x * W^T + b, with W stored out x in.
struct LinearLayer {
    DenseMatrix weight;
    Vector bias;

    std::size_t in() const noexcept { return weight.cols(); }
    std::size_t out() const noexcept { return weight.rows(); }
};

/// Shared backbone plus one classifier head per task (task ids are 1-based).
///
/// Every mutation goes through a `mutable_*` accessor, which bumps `version()`
/// so that stale forward traces can be detected.
class MlpModel {
  public:
    MlpModel() = default;
    MlpModel(ModelConfig config, std::mt19937_64& rng);

    const ModelConfig& config() const noexcept { return config_; }
    std::size_t backbone_layers() const noexcept { return backbone_.size(); }
    const LinearLayer& backbone(std::size_t l) const { return backbone_.at(l); }
    LinearLayer& mutable_backbone(std::size_t l);

    /// Width of the features fed to every head.
    std::size_t feature_dim() const noexcept;
    /// Input widths of the backbone layers (the dims of the per-layer covariances).
    std::vector<std::size_t> layer_input_dims() const;

    std::size_t head_count() const noexcept { return heads_.size(); }
    bool has_head(std::size_t task_id) const noexcept {
        return task_id >= 1 && task_id <= heads_.size();
    }
    const LinearLayer& head(std::size_t task_id) const;
    LinearLayer& mutable_head(std::size_t task_id);
    /// Adds the head for task `heads + 1`; returns its task id.
    std::size_t add_head(std::size_t classes, std::mt19937_64& rng);

    /// Fresh head with the same initialization scheme as add_head, not attached.
    LinearLayer make_head(std::size_t classes, std::mt19937_64& rng) const;

    bool feature_capture() const noexcept { return feature_capture_; }
    void set_feature_capture(bool enabled) noexcept { feature_capture_ = enabled; }

    std::uint64_t version() const noexcept { return version_; }
    /// FNV-1a over the backbone parameter bytes.
    std::uint64_t backbone_checksum() const noexcept;

    static MlpModel from_parts(ModelConfig config, std::vector<LinearLayer> backbone,
                               std::vector<LinearLayer> heads);

  private:
    ModelConfig config_;
    std::vector<LinearLayer> backbone_;
    std::vector<LinearLayer> heads_;
    bool feature_capture_ = true;
    std::uint64_t version_ = 0;
};

struct ForwardTrace {
    /// Inputs of each backbone layer; filled only when feature capture is enabled.
    std::vector<DenseMatrix> features;
    DenseMatrix logits;
    std::size_t task_id = 0;

    // Caches for backward, always present.
    std::vector<DenseMatrix> layer_inputs;  ///< backbone layer inputs, then the head input
    std::vector<DenseMatrix> pre_activations;
    std::uint64_t model_version = 0;
};

struct GradientSet {
    std::vector<DenseMatrix> weight;  ///< per backbone layer, out x in
    std::vector<Vector> bias;
    DenseMatrix head_weight;
    Vector head_bias;
    std::size_t task_id = 0;
    double ce_loss = 0.0;       ///< cross-entropy at the evaluated point
    double distill_loss = 0.0;  ///< distillation loss (0 without a target)
};

ForwardTrace forward(const MlpModel& model, const DenseMatrix& inputs, std::size_t task_id);
/// Backbone features only (input of every head).
DenseMatrix backbone_features(const MlpModel& model, const DenseMatrix& inputs);
DenseMatrix apply_linear(const LinearLayer& layer, const DenseMatrix& inputs);

DenseMatrix softmax_rows(const DenseMatrix& logits, double temperature = 1.0);

/// Mean negative log-softmax of the true class.
double cross_entropy(const DenseMatrix& logits, std::span<const std::size_t> labels);

/// Mean tempered cross-entropy between softmax(recorded / tau) and softmax(current / tau).
double distillation_loss(const DenseMatrix& recorded, const DenseMatrix& current, double tau);

/// Exact gradients of cross_entropy + beta * distillation_loss.
GradientSet backward(const MlpModel& model, const ForwardTrace& trace,
                     std::span<const std::size_t> labels,
                     const DenseMatrix* distill_target = nullptr, double beta = 0.0,
                     double tau = 2.0);

struct ClassifierTrainConfig {
    std::size_t epochs = 20;
    double learning_rate = 0.05;
    std::size_t batch_size = 32;
};

struct DistillTargets {
    DenseMatrix logits;  ///< row i for training sample i
    LinearLayer head;    ///< the classifier that produced them
};

/// Trains a fresh head on frozen backbone features and returns its logits.
/// The model is not modified.
DistillTargets record_distill_targets(const MlpModel& model, const DenseMatrix& features,
                                      std::span<const std::size_t> labels, std::size_t classes,
                                      std::size_t task_id, const ClassifierTrainConfig& config,
                                      std::mt19937_64& rng);

/// Fraction of rows whose argmax matches the label.
double accuracy(const DenseMatrix& logits, std::span<const std::size_t> labels);

// Model checkpoint, little-endian: "ADNM", version u32, backbone layer count u32,
// activation u32, use_bias u32, input_dim u32, then per backbone layer
// {out u32, in u32, weight out*in f64, bias out f64}, head count u32, and per head
// the same {out, in, weight, bias} record.
inline constexpr std::uint32_t kModelCheckpointVersion = 1;

void write_model_checkpoint(const std::string& path, const MlpModel& model);
MlpModel read_model_checkpoint(const std::string& path);

}  // namespace adns
