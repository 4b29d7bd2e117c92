#include "adns/metrics.hpp"

#include "adns/error.hpp"

#include <algorithm>
#include <cmath>

namespace adns {

AccuracyMatrix::AccuracyMatrix(std::size_t tasks) : tasks_(tasks), entries_(tasks * tasks) {}

void AccuracyMatrix::set(std::size_t after_task, std::size_t task, double value) {
    if (after_task >= tasks_ || task > after_task) {
        throw ValidationError("AccuracyMatrix: entry (" + std::to_string(after_task) + ", " +
                              std::to_string(task) + ") outside the lower triangle");
    }
    if (!(value >= 0.0 && value <= 1.0)) throw ValidationError("AccuracyMatrix: accuracy outside [0, 1]");
    entries_[after_task * tasks_ + task] = value;
}

std::optional<double> AccuracyMatrix::get(std::size_t after_task, std::size_t task) const {
    if (after_task >= tasks_ || task >= tasks_) return std::nullopt;
    return entries_[after_task * tasks_ + task];
}

double AccuracyMatrix::at(std::size_t after_task, std::size_t task) const {
    const auto v = get(after_task, task);
    if (!v) {
        throw ValidationError("AccuracyMatrix: entry (" + std::to_string(after_task) + ", " +
                              std::to_string(task) + ") is absent");
    }
    return *v;
}

double acc(const AccuracyMatrix& m) {
    if (m.tasks() == 0) throw ValidationError("acc: empty accuracy matrix");
    const std::size_t last = m.tasks() - 1;
    double s = 0.0;
    for (std::size_t i = 0; i < m.tasks(); ++i) s += m.at(last, i);
    return s / static_cast<double>(m.tasks());
}

double bwt(const AccuracyMatrix& m) {
    if (m.tasks() < 2) throw UndefinedMetricError("bwt: requires at least two tasks");
    const std::size_t last = m.tasks() - 1;
    double s = 0.0;
    for (std::size_t i = 0; i < last; ++i) s += m.at(last, i) - m.at(i, i);
    return s / static_cast<double>(last);
}

double la(const AccuracyMatrix& m) {
    if (m.tasks() == 0) throw ValidationError("la: empty accuracy matrix");
    double s = 0.0;
    for (std::size_t i = 0; i < m.tasks(); ++i) s += m.at(i, i);
    return s / static_cast<double>(m.tasks());
}

TrendVerdict check_trend(std::span<const double> values, TrendDirection direction,
                         double tolerance) {
    TrendVerdict v;
    bool too_large = false;
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double step = values[i] - values[i - 1];
        const double against = direction == TrendDirection::NonDecreasing ? -step : step;
        if (against > 0.0) {
            ++v.inversions;
            v.worst_inversion = std::max(v.worst_inversion, against);
            if (against > tolerance) too_large = true;
        }
    }
    v.holds = v.inversions <= 1 && !too_large;
    return v;
}

MeanSd mean_sd(std::span<const double> values) {
    MeanSd out;
    if (values.empty()) return out;
    for (double x : values) out.mean += x;
    out.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double x : values) ss += (x - out.mean) * (x - out.mean);
        out.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

}  // namespace adns
