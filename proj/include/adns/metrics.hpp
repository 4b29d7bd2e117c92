#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adns {

/// A[j][i]: accuracy (fraction) on task i after training task j, for i <= j.
/// Indices are 0-based; the upper triangle is never populated.
class AccuracyMatrix {
  public:
    AccuracyMatrix() = default;
    explicit AccuracyMatrix(std::size_t tasks);

    std::size_t tasks() const noexcept { return tasks_; }
    void set(std::size_t after_task, std::size_t task, double value);
    std::optional<double> get(std::size_t after_task, std::size_t task) const;
    bool has(std::size_t after_task, std::size_t task) const { return get(after_task, task).has_value(); }
    /// Value or ValidationError when absent.
    double at(std::size_t after_task, std::size_t task) const;

    /// Row-major T x T view; absent entries are std::nullopt.
    const std::vector<std::optional<double>>& entries() const noexcept { return entries_; }

    friend bool operator==(const AccuracyMatrix&, const AccuracyMatrix&) = default;

  private:
    std::size_t tasks_ = 0;
    std::vector<std::optional<double>> entries_;
};

/// Mean of the final row.
double acc(const AccuracyMatrix& m);
/// Mean over i < T of A[T][i] - A[i][i]; UndefinedMetricError when T = 1.
double bwt(const AccuracyMatrix& m);
/// Mean of the diagonal.
double la(const AccuracyMatrix& m);

/// Monotonicity verdict over a sweep. Values are in the same units as the
/// tolerance (percentage points in the sweeps).
struct TrendVerdict {
    bool holds = false;
    std::size_t inversions = 0;
    double worst_inversion = 0.0;
};

enum class TrendDirection { NonDecreasing, NonIncreasing };

/// Holds when adjacent steps follow `direction`, allowing at most one adjacent
/// inversion of magnitude <= tolerance.
TrendVerdict check_trend(std::span<const double> values, TrendDirection direction,
                         double tolerance = 0.5);

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};
/// Sample standard deviation (n - 1); sd = 0 for a single value.
MeanSd mean_sd(std::span<const double> values);

}  // namespace adns
