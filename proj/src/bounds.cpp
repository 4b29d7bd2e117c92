#include "adns/bounds.hpp"

#include "adns/error.hpp"
#include "adns/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace adns {

std::string to_string(Bound b) { return b == Bound::Plasticity ? "plasticity" : "stability"; }

namespace {

void check_common(double eta, double lipschitz, const char* who) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError(std::string(who) + ": eta must be > 0");
    if (!(lipschitz > 0.0) || !std::isfinite(lipschitz)) {
        throw ValidationError(std::string(who) + ": L_f must be > 0");
    }
}

void check_blocks(const std::vector<DenseMatrix>& grads, const std::vector<LayerNullSpace>& projectors,
                  const char* who, const char* field) {
    if (grads.size() != projectors.size()) {
        throw ValidationError(std::string(who) + ": step has " + std::to_string(grads.size()) + " " + field +
                              " for " + std::to_string(projectors.size()) + " projectors");
    }
    for (std::size_t l = 0; l < grads.size(); ++l) {
        if (grads[l].cols() != projectors[l].dim()) {
            throw ValidationError(std::string(who) + ": " + field + " block " + std::to_string(l) +
                                  " does not match its projector");
        }
    }
}

double sq(double x) { return x * x; }

double sq_norm(const DenseMatrix& m) { return sq(frobenius_norm(m)); }

}  // namespace

BoundReport verify_plasticity_bound(const PlasticityTrace& trace, double eta, double lipschitz,
                                    double sigma) {
    constexpr const char* who = "verify_plasticity_bound";
    check_common(eta, lipschitz, who);
    if (!(sigma >= 0.0)) throw ValidationError(std::string(who) + ": sigma must be >= 0");
    if (trace.steps.empty()) throw ValidationError(std::string(who) + ": trace has no steps");
    if (!trace.final_loss) throw ValidationError(std::string(who) + ": trace is missing final_loss");
    if (trace.projectors.empty()) throw ValidationError(std::string(who) + ": trace is missing projectors");

    double complement = 0.0;
    double gradient = 0.0;
    for (const PlasticityStep& step : trace.steps) {
        check_blocks(step.gradients, trace.projectors, who, "gradients");
        for (std::size_t l = 0; l < step.gradients.size(); ++l) {
            const DenseMatrix& g = step.gradients[l];
            complement += sq_norm(g - project_gradient(g, trace.projectors[l]));
            gradient += sq_norm(g);
        }
    }

    BoundReport r;
    r.theorem = Bound::Plasticity;
    r.lipschitz = lipschitz;
    r.eta = eta;
    r.steps = trace.steps.size();
    r.sigma = sigma;
    const double variance = static_cast<double>(r.steps) * lipschitz * eta * eta * sigma * sigma / 2.0;
    r.terms = {{"initial_loss", trace.steps.front().loss},
               {"complement_sum", 0.5 * eta * complement},
               {"gradient_sum", 0.5 * eta * gradient},
               {"variance_term", variance}};
    r.lhs = *trace.final_loss;
    r.rhs = trace.steps.front().loss + 0.5 * eta * complement - 0.5 * eta * gradient + variance;
    r.slack = r.rhs - r.lhs;
    r.precondition_met = eta * lipschitz <= 1.0 + 1e-12;
    return r;
}

BoundReport verify_stability_bound(const StabilityTrace& trace, double eta, double lipschitz) {
    constexpr const char* who = "verify_stability_bound";
    check_common(eta, lipschitz, who);
    if (trace.steps.empty()) throw ValidationError(std::string(who) + ": trace has no steps");
    if (!trace.final_old_loss) throw ValidationError(std::string(who) + ": trace is missing final_old_loss");
    if (trace.projectors.empty()) throw ValidationError(std::string(who) + ": trace is missing projectors");

    std::vector<double> norms;
    for (const LayerNullSpace& p : trace.projectors) norms.push_back(projector_spectral_norm(p));

    double cross = 0.0;
    double quadratic = 0.0;
    std::size_t premise_steps = 0;
    for (const StabilityStep& step : trace.steps) {
        check_blocks(step.gradients, trace.projectors, who, "gradients");
        check_blocks(step.old_gradients, trace.projectors, who, "old_gradients");
        double inner_step = 0.0;
        double magnitude = 0.0;  // scale of the inner product, for a round-off floor
        for (std::size_t l = 0; l < step.gradients.size(); ++l) {
            const DenseMatrix& g = step.gradients[l];
            const DenseMatrix& g_old = step.old_gradients[l];
            if (g.rows() != g_old.rows()) {
                throw ValidationError(std::string(who) + ": gradient shapes differ at block " + std::to_string(l));
            }
            const double gn = frobenius_norm(g);
            cross += norms[l] * gn * frobenius_norm(g_old);
            quadratic += sq(norms[l]) * gn * gn;
            const DenseMatrix projected = project_gradient(g, trace.projectors[l]);
            inner_step -= eta * inner(projected, g_old);
            magnitude += eta * frobenius_norm(projected) * frobenius_norm(g_old);
        }
        if (inner_step <= 1e-12 * magnitude) ++premise_steps;
    }

    BoundReport r;
    r.theorem = Bound::Stability;
    r.lipschitz = lipschitz;
    r.eta = eta;
    r.steps = trace.steps.size();
    r.terms = {{"cross_term", eta * cross}, {"quadratic_term", 0.5 * lipschitz * eta * eta * quadratic}};
    const double start = trace.initial_old_loss.value_or(trace.steps.front().old_loss);
    r.lhs = *trace.final_old_loss - start;
    r.rhs = eta * cross + 0.5 * lipschitz * eta * eta * quadratic;
    r.slack = r.rhs - r.lhs;
    r.precondition_met = eta * lipschitz <= 1.0 + 1e-12;
    r.premise_held = premise_steps == r.steps;
    r.premise_rate = static_cast<double>(premise_steps) / static_cast<double>(r.steps);
    return r;
}

void QuadraticTestbedConfig::validate() const {
    if (block_dims.empty()) throw ValidationError("testbed: block_dims must not be empty");
    for (std::size_t d : block_dims)
        if (d == 0) throw ValidationError("testbed: block dims must be >= 1");
    if (outputs == 0) throw ValidationError("testbed: outputs must be >= 1");
    if (old_samples == 0 || current_samples == 0) throw ValidationError("testbed: sample counts must be >= 1");
    if (steps == 0) throw ValidationError("testbed: steps must be >= 1");
    if (!(eta_scale > 0.0)) throw ValidationError("testbed: eta_scale must be > 0");
    if (!(alpha >= 1.0)) throw ValidationError("testbed: alpha must be >= 1");
    if (zero_rank_projector && full_rank_projector) {
        throw ValidationError("testbed: zero_rank_projector and full_rank_projector are exclusive");
    }
    if (!(old_feature_decay > 0.0 && old_feature_decay <= 1.0)) {
        throw ValidationError("testbed: old_feature_decay must be in (0, 1]");
    }
}

namespace {

struct Task {
    std::vector<DenseMatrix> blocks;  ///< n x d_l
    DenseMatrix targets;              ///< n x outputs
};

DenseMatrix gaussian(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    DenseMatrix m(r, c);
    for (double& v : m.values()) v = n(rng);
    return m;
}

DenseMatrix predict(const Task& task, const std::vector<DenseMatrix>& weights) {
    DenseMatrix y(task.blocks.front().rows(), weights.front().rows());
    for (std::size_t l = 0; l < weights.size(); ++l) y += matmul_nt(task.blocks[l], weights[l]);
    return y;
}

DenseMatrix residual(const Task& task, const std::vector<DenseMatrix>& weights) {
    return predict(task, weights) - task.targets;
}

double loss(const Task& task, const std::vector<DenseMatrix>& weights) {
    const double f = frobenius_norm(residual(task, weights));
    return 0.5 * f * f / static_cast<double>(task.targets.rows());
}

std::vector<DenseMatrix> gradients(const Task& task, const std::vector<DenseMatrix>& weights) {
    const DenseMatrix r = residual(task, weights);
    const double inv_n = 1.0 / static_cast<double>(task.targets.rows());
    std::vector<DenseMatrix> g;
    for (const DenseMatrix& x : task.blocks) g.push_back(matmul_tn(r, x) * inv_n);
    return g;
}

// Top eigenvalue of Z^T Z / n for the stacked features; the loss Hessian is
// this matrix tensored with the identity over outputs.
double smoothness(const Task& task) {
    DenseMatrix z = task.blocks.front();
    for (std::size_t l = 1; l < task.blocks.size(); ++l) z = hconcat(z, task.blocks[l]);
    DenseMatrix h = gram(z);
    h *= 1.0 / static_cast<double>(z.rows());
    return sym_eig(h).eigenvalues.front();
}

}  // namespace

QuadraticTestbedResult run_quadratic_testbed(const QuadraticTestbedConfig& config, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    const std::size_t blocks = config.block_dims.size();

    std::vector<DenseMatrix> teacher;
    for (std::size_t d : config.block_dims) teacher.push_back(gaussian(config.outputs, d, rng));

    Task old_task;
    Task cur_task;
    for (std::size_t d : config.block_dims) {
        DenseMatrix x;
        if (config.old_rank > 0 && config.old_rank < d) {
            x = matmul(gaussian(config.old_samples, config.old_rank, rng), gaussian(config.old_rank, d, rng));
        } else {
            x = gaussian(config.old_samples, d, rng);
        }
        double scale = 1.0;
        for (std::size_t c = 0; c < d; ++c, scale *= config.old_feature_decay) {
            for (std::size_t r = 0; r < x.rows(); ++r) x(r, c) *= scale;
        }
        old_task.blocks.push_back(std::move(x));
        cur_task.blocks.push_back(gaussian(config.current_samples, d, rng));
    }
    old_task.targets = predict(old_task, teacher) + gaussian(config.old_samples, config.outputs, rng, 0.1);
    std::vector<DenseMatrix> shifted = teacher;
    for (DenseMatrix& w : shifted) w += gaussian(w.rows(), w.cols(), rng);
    cur_task.targets = predict(cur_task, shifted) + gaussian(config.current_samples, config.outputs, rng, 0.1);

    QuadraticTestbedResult result;
    result.lipschitz = std::max(smoothness(old_task), smoothness(cur_task));
    result.eta = config.eta_scale / result.lipschitz;
    const double eta = result.eta;

    std::vector<LayerNullSpace> projectors;
    for (std::size_t l = 0; l < blocks; ++l) {
        const std::size_t d = config.block_dims[l];
        if (config.zero_rank_projector) {
            projectors.push_back(LayerNullSpace::empty(d));
        } else if (config.full_rank_projector) {
            projectors.push_back({DenseMatrix::identity(d), 0});
        } else {
            projectors.push_back(extract_null_space(gram(old_task.blocks[l]), config.alpha, 1));
        }
        result.projector_ranks.push_back(projectors.back().k());
    }

    std::vector<DenseMatrix> weights;
    for (std::size_t d : config.block_dims) weights.push_back(gaussian(config.outputs, d, rng, 0.1));

    PlasticityTrace plastic;
    StabilityTrace stable;
    plastic.projectors = projectors;
    stable.projectors = projectors;
    stable.initial_old_loss = loss(old_task, weights);
    for (std::size_t s = 0; s < config.steps; ++s) {
        std::vector<DenseMatrix> g = gradients(cur_task, weights);
        plastic.steps.push_back({loss(cur_task, weights), g});
        stable.steps.push_back({loss(old_task, weights), g, gradients(old_task, weights)});
        for (std::size_t l = 0; l < blocks; ++l) weights[l] -= project_gradient(g[l], projectors[l]) * eta;
    }
    plastic.final_loss = loss(cur_task, weights);
    stable.final_old_loss = loss(old_task, weights);

    result.plasticity = verify_plasticity_bound(plastic, eta, result.lipschitz, 0.0);
    result.stability = verify_stability_bound(stable, eta, result.lipschitz);
    return result;
}

}  // namespace adns
