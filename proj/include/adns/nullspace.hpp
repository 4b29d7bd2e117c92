#pragma once

#include "adns/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace adns {

/// Orthonormal basis (d x k, k may be zero) of one layer's null space.
struct LayerNullSpace {
    DenseMatrix basis;
    std::size_t source_task = 0;

    std::size_t k() const noexcept { return basis.cols(); }
    std::size_t dim() const noexcept { return basis.rows(); }

    static LayerNullSpace empty(std::size_t dim, std::size_t source_task = 0) {
        return {DenseMatrix(dim, 0), source_task};
    }
};

/// Running uncentered feature covariance X^T X per layer.
class CovarianceStore {
  public:
    CovarianceStore() = default;
    explicit CovarianceStore(std::vector<std::size_t> layer_dims);

    /// Adds one batch per layer. Column counts must match the layer dims.
    void add_batch(std::span<const DenseMatrix> features);
    /// Marks the end of a task's accumulation.
    void commit_task() noexcept { ++tasks_accumulated_; }

    std::size_t layers() const noexcept { return covariances_.size(); }
    const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }
    const DenseMatrix& covariance(std::size_t layer) const { return covariances_.at(layer); }
    std::size_t tasks_accumulated() const noexcept { return tasks_accumulated_; }

    /// Restores a store from snapshot contents.
    static CovarianceStore from_parts(std::vector<DenseMatrix> covariances,
                                      std::size_t tasks_accumulated);

  private:
    std::vector<std::size_t> dims_;
    std::vector<DenseMatrix> covariances_;
    std::size_t tasks_accumulated_ = 0;
};

/// Accumulates all batches of one task and commits it.
void accumulate_features(CovarianceStore& store,
                         std::span<const std::vector<DenseMatrix>> batches);

/// Linearly decreasing eigenvalue-threshold multiplier alpha(t).
struct ThresholdSchedule {
    double alpha_max = 10.0;
    double alpha_min = 10.0;
    std::size_t total_tasks = 1;

    void validate() const;
};

/// alpha(t) for 1-based task index t.
double alpha_at(const ThresholdSchedule& schedule, std::size_t task_index);

enum class RankStrategy { Max, Avg, Min };

struct RankPolicy {
    RankStrategy strategy = RankStrategy::Avg;
    double k0 = 0.9;

    void validate() const;
};

/// max(1, round_half_up(strategy(p, q) * k0)); no cap applied.
std::size_t target_rank(const RankPolicy& policy, std::size_t p, std::size_t q);

/// Eigenvectors of `covariance` whose eigenvalues satisfy lambda <= alpha * lambda_min,
/// in ascending eigenvalue order. Eigenvalues below 1e-12 * lambda_max are treated as zero.
LayerNullSpace extract_null_space(const DenseMatrix& covariance, double alpha,
                                  std::size_t source_task = 0);

/// Shared low-rank null space: the leading left singular vectors of [u_pre, u_cur].
LayerNullSpace merge_shared_low_rank(const LayerNullSpace& u_pre, const LayerNullSpace& u_cur,
                                     const RankPolicy& policy);

/// Column counts a random merge draws from each side for a target rank k_l.
struct RandomMergeCounts {
    std::size_t from_pre = 0;
    std::size_t from_cur = 0;
};
RandomMergeCounts random_merge_counts(std::size_t p, std::size_t q, std::size_t k_l);

/// Ablation merge: columns drawn uniformly without replacement from each side
/// (k_l / 2 each, shortfall filled from the other side), then re-orthonormalized.
LayerNullSpace merge_random(const LayerNullSpace& u_pre, const LayerNullSpace& u_cur,
                            std::size_t k_l, std::uint64_t rng_seed);

/// G * U * U^T; rows of g are per-output-unit gradients over the layer input.
DenseMatrix project_gradient(const DenseMatrix& g, const LayerNullSpace& ns);

/// ||U U^T||_2, computed from the spectrum of U^T U (0 for an empty basis).
double projector_spectral_norm(const LayerNullSpace& ns);

// Binary snapshot of a covariance store plus per-layer bases.
//
// Little-endian layout: "ADNS", version u32, layer count u32, then per layer
// {d u32, k u32, covariance d*d f64 row-major, basis d*k f64 row-major}.
inline constexpr std::uint32_t kNullSpaceSnapshotVersion = 1;

struct NullSpaceSnapshot {
    std::vector<DenseMatrix> covariances;
    std::vector<DenseMatrix> bases;
};

void write_nullspace_snapshot(const std::string& path, const CovarianceStore& store,
                              std::span<const LayerNullSpace> bases);
NullSpaceSnapshot read_nullspace_snapshot(const std::string& path);

}  // namespace adns
