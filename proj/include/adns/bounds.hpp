#pragma once

#include "adns/matrix.hpp"
#include "adns/nullspace.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace adns {

// Traces cover every trained parameter block: each block has its own gradient
// and projector, and a block that is trained unprojected carries an identity basis.

struct PlasticityStep {
    double loss = 0.0;                   ///< current-task loss at w_s
    std::vector<DenseMatrix> gradients;  ///< per block, out x in, at w_s
};

struct PlasticityTrace {
    std::vector<PlasticityStep> steps;
    std::optional<double> final_loss;       ///< loss at w_S
    std::vector<LayerNullSpace> projectors;  ///< one per block
};

struct StabilityStep {
    double old_loss = 0.0;
    std::vector<DenseMatrix> gradients;      ///< current task, per block
    std::vector<DenseMatrix> old_gradients;  ///< previous tasks, per block
};

struct StabilityTrace {
    std::vector<StabilityStep> steps;
    std::optional<double> initial_old_loss;
    std::optional<double> final_old_loss;
    std::vector<LayerNullSpace> projectors;
};

enum class Bound { Plasticity, Stability };

std::string to_string(Bound b);

struct BoundReport {
    Bound theorem = Bound::Plasticity;
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;  ///< rhs - lhs; negative values are reported, not thrown
    double lipschitz = 0.0;
    double eta = 0.0;
    std::size_t steps = 0;
    double sigma = 0.0;
    /// Named right-hand-side terms, e.g. "complement_sum" or "cross_term".
    std::map<std::string, double> terms;
    /// eta <= 1 / L_f, the step-size condition both bounds rely on.
    bool precondition_met = false;
    /// Stability only: <delta_w_s, g_old_s> <= 0 held at every step.
    std::optional<bool> premise_held;
    std::optional<double> premise_rate;
};

/// Current-task loss bound for projected gradient steps w <- w - eta * g U U^T.
BoundReport verify_plasticity_bound(const PlasticityTrace& trace, double eta, double lipschitz,
                                    double sigma);

/// Old-task forgetting bound for the same steps; also measures the premise
/// <delta_w, g_old> <= 0 at every step.
BoundReport verify_stability_bound(const StabilityTrace& trace, double eta, double lipschitz);

/// Least-squares testbed with an additive two-block linear model
/// y = W1 x1 + W2 x2, so every task loss is exactly quadratic and its
/// smoothness constant is the top eigenvalue of Z^T Z / n with Z = [X1 X2].
struct QuadraticTestbedConfig {
    std::vector<std::size_t> block_dims{6, 4};
    std::size_t outputs = 3;
    std::size_t old_samples = 40;
    std::size_t current_samples = 40;
    /// Rank of the old-task features per block; 0 keeps them full rank.
    std::size_t old_rank = 0;
    std::size_t steps = 50;
    /// eta = eta_scale / L_f; values above 1 violate the step-size condition.
    double eta_scale = 1.0;
    /// Threshold multiplier used to extract the old-task null space.
    double alpha = 10.0;
    bool zero_rank_projector = false;
    bool full_rank_projector = false;
    /// Scales old-feature columns geometrically so the old covariance has a wide spectrum.
    double old_feature_decay = 0.5;

    void validate() const;
};

struct QuadraticTestbedResult {
    BoundReport plasticity;
    BoundReport stability;
    double lipschitz = 0.0;
    double eta = 0.0;
    std::vector<std::size_t> projector_ranks;
};

QuadraticTestbedResult run_quadratic_testbed(const QuadraticTestbedConfig& config,
                                             std::uint64_t seed);

}  // namespace adns
