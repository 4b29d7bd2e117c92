#include "adns/nullspace.hpp"

#include "adns/error.hpp"
#include "adns/linalg.hpp"
#include "binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace adns {

CovarianceStore::CovarianceStore(std::vector<std::size_t> layer_dims) : dims_(std::move(layer_dims)) {
    covariances_.reserve(dims_.size());
    for (std::size_t d : dims_) covariances_.emplace_back(d, d);
}

void CovarianceStore::add_batch(std::span<const DenseMatrix> features) {
    if (features.size() != covariances_.size()) {
        throw ValidationError("CovarianceStore: got " + std::to_string(features.size()) +
                              " feature batches for " + std::to_string(covariances_.size()) +
                              " layers");
    }
    for (std::size_t l = 0; l < features.size(); ++l) {
        if (features[l].cols() != dims_[l]) {
            throw ValidationError("CovarianceStore: layer " + std::to_string(l) + " expects " +
                                  std::to_string(dims_[l]) + " columns, got " +
                                  std::to_string(features[l].cols()));
        }
    }
    for (std::size_t l = 0; l < features.size(); ++l) covariances_[l] += gram(features[l]);
}

CovarianceStore CovarianceStore::from_parts(std::vector<DenseMatrix> covariances,
                                            std::size_t tasks_accumulated) {
    CovarianceStore store;
    for (const auto& c : covariances) {
        if (c.rows() != c.cols()) throw ValidationError("CovarianceStore: non-square covariance");
        if (asymmetry(c) > 1e-8 * std::max(1.0, max_abs(c))) {
            throw ValidationError("CovarianceStore: asymmetric covariance");
        }
        store.dims_.push_back(c.rows());
    }
    store.covariances_ = std::move(covariances);
    store.tasks_accumulated_ = tasks_accumulated;
    return store;
}

void accumulate_features(CovarianceStore& store,
                         std::span<const std::vector<DenseMatrix>> batches) {
    for (const auto& batch : batches) store.add_batch(batch);
    store.commit_task();
}

void ThresholdSchedule::validate() const {
    if (!(alpha_min > 0.0)) throw ValidationError("ThresholdSchedule: alpha_min must be > 0");
    if (alpha_max < alpha_min) throw ValidationError("ThresholdSchedule: alpha_max < alpha_min");
    if (total_tasks < 1) throw ValidationError("ThresholdSchedule: total_tasks must be >= 1");
}

double alpha_at(const ThresholdSchedule& schedule, std::size_t task_index) {
    schedule.validate();
    if (task_index < 1 || task_index > schedule.total_tasks) {
        throw ValidationError("alpha_at: task index " + std::to_string(task_index) +
                              " outside [1, " + std::to_string(schedule.total_tasks) + "]");
    }
    if (schedule.total_tasks == 1 || task_index == 1) return schedule.alpha_max;
    if (task_index == schedule.total_tasks) return schedule.alpha_min;
    const double frac = static_cast<double>(task_index - 1) /
                        static_cast<double>(schedule.total_tasks - 1);
    return schedule.alpha_max - frac * (schedule.alpha_max - schedule.alpha_min);
}

void RankPolicy::validate() const {
    if (!(k0 > 0.0 && k0 <= 1.0)) throw ValidationError("RankPolicy: k0 must lie in (0, 1]");
}

std::size_t target_rank(const RankPolicy& policy, std::size_t p, std::size_t q) {
    policy.validate();
    const double dp = static_cast<double>(p);
    const double dq = static_cast<double>(q);
    double base = 0.0;
    switch (policy.strategy) {
        case RankStrategy::Max: base = std::max(dp, dq); break;
        case RankStrategy::Avg: base = 0.5 * (dp + dq); break;
        case RankStrategy::Min: base = std::min(dp, dq); break;
    }
    const double rounded = std::floor(base * policy.k0 + 0.5);
    return std::max<std::size_t>(1, static_cast<std::size_t>(rounded));
}

LayerNullSpace extract_null_space(const DenseMatrix& covariance, double alpha,
                                  std::size_t source_task) {
    if (!(alpha >= 1.0)) throw ValidationError("extract_null_space: alpha must be >= 1");
    const double scale = std::max(1.0, max_abs(covariance));
    if (covariance.rows() != covariance.cols() || asymmetry(covariance) > 1e-10 * scale) {
        throw ValidationError("extract_null_space: covariance must be square and symmetric");
    }
    const std::size_t d = covariance.rows();
    if (d == 0) return LayerNullSpace::empty(0, source_task);

    const SymEigResult eig = sym_eig(covariance, 1e-10 * scale);
    Vector lambda = eig.eigenvalues;
    const double lambda_max = std::max(0.0, lambda.front());
    for (double& l : lambda) {
        if (l < kSingularValueClamp * lambda_max) l = 0.0;
    }
    const double threshold = alpha * lambda.back();

    // Eigenvalues are non-increasing, so the selection is a suffix.
    std::size_t first = d;
    while (first > 0 && lambda[first - 1] <= threshold) --first;

    LayerNullSpace ns{DenseMatrix(d, d - first), source_task};
    for (std::size_t c = 0; c < d - first; ++c) {
        ns.basis.set_column(c, eig.eigenvectors.column(d - 1 - c));
    }
    return ns;
}

LayerNullSpace merge_shared_low_rank(const LayerNullSpace& u_pre, const LayerNullSpace& u_cur,
                                     const RankPolicy& policy) {
    if (u_pre.dim() != u_cur.dim()) {
        throw ValidationError("merge_shared_low_rank: layer dimensions differ (" +
                              std::to_string(u_pre.dim()) + " vs " + std::to_string(u_cur.dim()) +
                              ")");
    }
    if (u_pre.k() == 0 && u_cur.k() == 0) {
        throw ValidationError("merge_shared_low_rank: both null spaces are empty");
    }
    const SvdResult svd = thin_svd(hconcat(u_pre.basis, u_cur.basis));
    const std::size_t rank = numerical_rank(svd.sigma, 1e-10);
    const std::size_t k = std::min(target_rank(policy, u_pre.k(), u_cur.k()), rank);
    return {svd.u.column_block(0, k), std::max(u_pre.source_task, u_cur.source_task)};
}

RandomMergeCounts random_merge_counts(std::size_t p, std::size_t q, std::size_t k_l) {
    RandomMergeCounts counts;
    counts.from_pre = std::min(p, k_l / 2);
    counts.from_cur = std::min(q, k_l - counts.from_pre);
    if (counts.from_pre + counts.from_cur < k_l) counts.from_pre = std::min(p, k_l - counts.from_cur);
    return counts;
}

namespace {

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count,
                                                    std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

LayerNullSpace merge_random(const LayerNullSpace& u_pre, const LayerNullSpace& u_cur,
                            std::size_t k_l, std::uint64_t rng_seed) {
    if (u_pre.dim() != u_cur.dim()) throw ValidationError("merge_random: layer dimensions differ");
    if (u_pre.k() == 0 && u_cur.k() == 0) throw ValidationError("merge_random: both null spaces are empty");
    if (k_l < 1 || k_l > u_pre.k() + u_cur.k()) {
        throw ValidationError("merge_random: k_l=" + std::to_string(k_l) + " outside [1, p + q = " +
                              std::to_string(u_pre.k() + u_cur.k()) + "]");
    }
    const auto counts = random_merge_counts(u_pre.k(), u_cur.k(), k_l);
    std::mt19937_64 rng(rng_seed);
    const auto pre_idx = sample_without_replacement(u_pre.k(), counts.from_pre, rng);
    const auto cur_idx = sample_without_replacement(u_cur.k(), counts.from_cur, rng);

    std::vector<Vector> candidates;
    for (std::size_t j : pre_idx) candidates.push_back(u_pre.basis.column(j));
    for (std::size_t j : cur_idx) candidates.push_back(u_cur.basis.column(j));

    std::vector<Vector> kept;
    for (Vector& v : candidates) {
        for (int pass = 0; pass < 2; ++pass) {
            for (const Vector& q : kept) {
                const double proj = dot(q, v);
                for (std::size_t r = 0; r < v.size(); ++r) v[r] -= proj * q[r];
            }
        }
        const double n = norm2(v);
        if (n < 1e-10) continue;
        for (double& x : v) x /= n;
        kept.push_back(std::move(v));
    }

    LayerNullSpace out{DenseMatrix(u_pre.dim(), kept.size()),
                       std::max(u_pre.source_task, u_cur.source_task)};
    for (std::size_t c = 0; c < kept.size(); ++c) out.basis.set_column(c, kept[c]);
    return out;
}

DenseMatrix project_gradient(const DenseMatrix& g, const LayerNullSpace& ns) {
    if (g.cols() != ns.dim()) {
        throw ValidationError("project_gradient: gradient has " + std::to_string(g.cols()) +
                              " input columns, basis has " + std::to_string(ns.dim()) + " rows");
    }
    if (ns.k() == 0) return DenseMatrix(g.rows(), g.cols());
    return matmul_nt(matmul(g, ns.basis), ns.basis);
}

double projector_spectral_norm(const LayerNullSpace& ns) {
    if (ns.k() == 0) return 0.0;
    return sym_eig(gram(ns.basis)).eigenvalues.front();
}

void write_nullspace_snapshot(const std::string& path, const CovarianceStore& store,
                              std::span<const LayerNullSpace> bases) {
    if (!bases.empty() && bases.size() != store.layers()) {
        throw ValidationError("write_nullspace_snapshot: basis count does not match layer count");
    }
    detail::BinaryWriter w(path);
    w.magic("ADNS");
    w.u32(kNullSpaceSnapshotVersion);
    w.u32(static_cast<std::uint32_t>(store.layers()));
    for (std::size_t l = 0; l < store.layers(); ++l) {
        const std::size_t d = store.layer_dims()[l];
        const DenseMatrix empty(d, 0);
        const DenseMatrix& basis = bases.empty() ? empty : bases[l].basis;
        if (basis.rows() != d) throw ValidationError("write_nullspace_snapshot: basis dimension mismatch");
        w.u32(static_cast<std::uint32_t>(d));
        w.u32(static_cast<std::uint32_t>(basis.cols()));
        w.values(store.covariance(l).data());
        w.values(basis.data());
    }
    w.finish();
}

NullSpaceSnapshot read_nullspace_snapshot(const std::string& path) {
    detail::BinaryReader r(path);
    r.expect_magic("ADNS");
    const auto version = r.u32();
    if (version != kNullSpaceSnapshotVersion) {
        throw IoError(path, "unsupported snapshot version " + std::to_string(version));
    }
    const auto layers = r.u32();
    NullSpaceSnapshot snap;
    for (std::uint32_t l = 0; l < layers; ++l) {
        const std::size_t d = r.u32();
        const std::size_t k = r.u32();
        if (k > d) throw IoError(path, "basis rank exceeds layer dimension");
        snap.covariances.push_back(r.matrix(d, d));
        snap.bases.push_back(r.matrix(d, k));
    }
    return snap;
}

}  // namespace adns
