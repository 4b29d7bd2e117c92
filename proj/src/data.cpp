#include "adns/data.hpp"

#include "adns/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>

namespace adns {

void TaskDataset::validate() const {
    if (features.rows() != labels.size()) {
        throw ValidationError("TaskDataset: " + std::to_string(labels.size()) + " labels for " +
                              std::to_string(features.rows()) + " rows");
    }
    if (class_count == 0) throw ValidationError("TaskDataset: class_count must be positive");
    if (labels.size() < class_count) throw ValidationError("TaskDataset: fewer samples than classes");
    for (std::size_t y : labels) {
        if (y >= class_count) throw ValidationError("TaskDataset: label out of range");
    }
    if (!features.all_finite()) throw ValidationError("TaskDataset: non-finite feature");
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

double parse_real(std::string_view cell, std::size_t line_no) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        throw ParseError(line_no, "non-numeric cell '" + std::string(cell) + "'");
    }
    return value;
}

Vector gaussian_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(n);
    for (double& x : v) x = normal(rng);
    return v;
}

// Class mean: seeded Gaussian direction, unit norm, scaled.
Vector cluster_mean(std::size_t dim, double scale, std::mt19937_64& rng) {
    Vector m = gaussian_vector(dim, rng);
    const double n = norm2(m);
    for (double& x : m) x *= scale / n;
    return m;
}

double mean_scale(double noise_sigma) { return noise_sigma > 0.0 ? 3.0 * noise_sigma : 1.0; }

std::size_t train_count(std::size_t n, double fraction) {
    const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n - 1);
}

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Per-class stratified split of the rows of `labels`.
SplitIndices stratified_split(const std::vector<std::size_t>& labels, std::size_t classes,
                              double fraction, std::mt19937_64& rng) {
    SplitIndices out;
    for (std::size_t c = 0; c < classes; ++c) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) rows.push_back(i);
        if (rows.size() < 2) throw ValidationError("stream: every class needs at least 2 samples");
        std::shuffle(rows.begin(), rows.end(), rng);
        const std::size_t k = train_count(rows.size(), fraction);
        out.train.insert(out.train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k));
        out.test.insert(out.test.end(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

TaskDataset subset(const DenseMatrix& features, const std::vector<std::size_t>& labels,
                   const std::vector<std::size_t>& rows, std::size_t classes, std::size_t task_id) {
    TaskDataset d;
    d.features = features.gather_rows(rows);
    d.labels.reserve(rows.size());
    for (std::size_t r : rows) d.labels.push_back(labels[r]);
    d.class_count = classes;
    d.task_id = task_id;
    d.validate();
    return d;
}

struct GaussianTask {
    DenseMatrix features;
    std::vector<std::size_t> labels;
};

GaussianTask gaussian_clusters(const StreamSpec& spec, std::mt19937_64& rng) {
    const std::size_t n = spec.classes_per_task * spec.samples_per_class;
    GaussianTask task{DenseMatrix(n, spec.dim), std::vector<std::size_t>(n)};
    std::normal_distribution<double> normal(0.0, 1.0);
    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.classes_per_task; ++c) {
        const Vector mean = cluster_mean(spec.dim, mean_scale(spec.noise_sigma), rng);
        for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
            auto dst = task.features.row(row);
            for (std::size_t j = 0; j < spec.dim; ++j) dst[j] = mean[j] + spec.noise_sigma * normal(rng);
            task.labels[row] = c;
        }
    }
    return task;
}

// Seeded orthogonal matrix by Gram-Schmidt on a Gaussian matrix.
DenseMatrix random_orthogonal(std::size_t n, std::mt19937_64& rng) {
    DenseMatrix q(n, n);
    std::vector<Vector> cols;
    while (cols.size() < n) {
        Vector v = gaussian_vector(n, rng);
        for (int pass = 0; pass < 2; ++pass) {
            for (const Vector& c : cols) {
                const double p = dot(c, v);
                for (std::size_t i = 0; i < n; ++i) v[i] -= p * c[i];
            }
        }
        const double nrm = norm2(v);
        if (nrm < 1e-8) continue;
        for (double& x : v) x /= nrm;
        cols.push_back(std::move(v));
    }
    for (std::size_t j = 0; j < n; ++j) q.set_column(j, cols[j]);
    return q;
}

std::vector<TaskSplit> split_gaussians(const StreamSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    std::vector<TaskSplit> stream;
    for (std::size_t t = 1; t <= spec.tasks; ++t) {
        GaussianTask task = gaussian_clusters(spec, rng);
        const auto split = stratified_split(task.labels, spec.classes_per_task, spec.train_fraction, rng);
        stream.push_back({subset(task.features, task.labels, split.train, spec.classes_per_task, t),
                          subset(task.features, task.labels, split.test, spec.classes_per_task, t)});
    }
    return stream;
}

std::vector<TaskSplit> rotated_gaussians(const StreamSpec& spec) {
    std::mt19937_64 rng(spec.seed);
    const GaussianTask base = gaussian_clusters(spec, rng);
    const auto split = stratified_split(base.labels, spec.classes_per_task, spec.train_fraction, rng);
    std::vector<TaskSplit> stream;
    for (std::size_t t = 1; t <= spec.tasks; ++t) {
        // Rows x become (Q x)^T = x^T Q^T.
        const DenseMatrix rotated =
            t == 1 ? base.features : matmul_nt(base.features, random_orthogonal(spec.dim, rng));
        stream.push_back({subset(rotated, base.labels, split.train, spec.classes_per_task, t),
                          subset(rotated, base.labels, split.test, spec.classes_per_task, t)});
    }
    return stream;
}

}  // namespace

LabeledDataset parse_csv(const std::string& text, const CsvOptions& options) {
    std::vector<std::pair<std::size_t, std::string_view>> lines;
    std::string_view all(text);
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= all.size()) {
        const std::size_t nl = all.find('\n', start);
        const std::string_view line = all.substr(start, nl == all.npos ? all.npos : nl - start);
        ++line_no;
        if (!trim(line).empty()) lines.emplace_back(line_no, line);
        if (nl == all.npos) break;
        start = nl + 1;
    }

    LabeledDataset out;
    std::size_t first_data = 0;
    std::size_t arity = 0;
    std::vector<std::string> header;
    if (options.header) {
        if (lines.empty()) throw ParseError(1, "missing header row");
        for (auto cell : split_commas(lines[0].second)) header.emplace_back(cell);
        arity = header.size();
        first_data = 1;
    } else if (!lines.empty()) {
        arity = split_commas(lines[0].second).size();
    }

    std::size_t label_idx = 0;
    if (const auto* name = std::get_if<std::string>(&options.label_column)) {
        if (!options.header) throw ValidationError("ingest_csv: label column by name requires a header");
        const auto it = std::find(header.begin(), header.end(), *name);
        if (it == header.end()) throw ValidationError("ingest_csv: unknown label column '" + *name + "'");
        label_idx = static_cast<std::size_t>(it - header.begin());
    } else {
        label_idx = std::get<std::size_t>(options.label_column);
        if (arity > 0 && label_idx >= arity) {
            throw ValidationError("ingest_csv: label column index " + std::to_string(label_idx) +
                                  " out of range for " + std::to_string(arity) + " columns");
        }
    }
    if (arity < 2 && !lines.empty()) throw ParseError(lines[0].first, "need a label and at least one feature column");
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != label_idx) out.feature_names.push_back(header[c]);

    std::map<std::string, std::size_t, std::less<>> label_ids;
    std::vector<double> values;
    std::size_t rows = 0;
    for (std::size_t i = first_data; i < lines.size(); ++i) {
        const auto [no, line] = lines[i];
        const auto cells = split_commas(line);
        if (cells.size() != arity) {
            throw ParseError(no, "expected " + std::to_string(arity) + " cells, got " +
                                     std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c == label_idx) continue;
            values.push_back(parse_real(cells[c], no));
        }
        const std::string_view label = cells[label_idx];
        if (label.empty()) throw ParseError(no, "empty label cell");
        auto it = label_ids.find(label);
        if (it == label_ids.end()) {
            it = label_ids.emplace(std::string(label), out.label_names.size()).first;
            out.label_names.emplace_back(label);
        }
        out.labels.push_back(it->second);
        ++rows;
    }
    out.features = DenseMatrix(rows, rows == 0 ? 0 : arity - 1, std::move(values));
    if (options.normalize) standardize_columns(out.features);
    return out;
}

LabeledDataset ingest_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), options);
}

void standardize_columns(DenseMatrix& features) {
    const std::size_t n = features.rows();
    if (n == 0) return;
    for (std::size_t c = 0; c < features.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += features(r, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t r = 0; r < n; ++r) var += (features(r, c) - mean) * (features(r, c) - mean);
        const double sd = std::sqrt(var / static_cast<double>(n));
        for (std::size_t r = 0; r < n; ++r) {
            features(r, c) = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? (features(r, c) - mean) / sd : 0.0;
        }
    }
}

void write_csv(const std::string& path, const TaskDataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(path, "cannot open for writing");
    for (std::size_t c = 0; c < dataset.features.cols(); ++c) out << 'f' << c << ',';
    out << "label\n";
    char buf[32];
    for (std::size_t r = 0; r < dataset.features.rows(); ++r) {
        for (double v : dataset.features.row(r)) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf << ',';
        }
        out << dataset.labels[r] << '\n';
    }
    out.flush();
    if (!out) throw IoError(path, "write failed");
}

void StreamSpec::validate() const {
    if (tasks < 1) throw ValidationError("StreamSpec: tasks must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError("StreamSpec: train_fraction must lie in (0, 1)");
    }
    if (generator == StreamGenerator::CsvSplit) {
        if (csv_path.empty()) throw ValidationError("StreamSpec: CsvSplit needs csv_path");
        return;
    }
    if (classes_per_task < 1) throw ValidationError("StreamSpec: classes_per_task must be >= 1");
    if (dim < 1) throw ValidationError("StreamSpec: dim must be >= 1");
    if (samples_per_class < 2) throw ValidationError("StreamSpec: samples_per_class must be >= 2");
    if (noise_sigma < 0.0) throw ValidationError("StreamSpec: noise_sigma must be >= 0");
    if (dim < classes_per_task) throw ValidationError("StreamSpec: dim must be >= classes_per_task");
}

std::vector<TaskSplit> split_labeled(const LabeledDataset& data, const StreamSpec& spec) {
    if (spec.tasks < 1) throw ValidationError("StreamSpec: tasks must be >= 1");
    const std::size_t labels = data.label_names.size();
    if (labels == 0 || labels % spec.tasks != 0) {
        throw ValidationError("CsvSplit: " + std::to_string(labels) +
                              " labels cannot be split evenly into " + std::to_string(spec.tasks) +
                              " tasks");
    }
    const std::size_t per_task = labels / spec.tasks;
    std::mt19937_64 rng(spec.seed);
    std::vector<TaskSplit> stream;
    for (std::size_t t = 0; t < spec.tasks; ++t) {
        std::vector<std::size_t> rows;
        std::vector<std::size_t> local;
        for (std::size_t r = 0; r < data.labels.size(); ++r) {
            const std::size_t y = data.labels[r];
            if (y >= t * per_task && y < (t + 1) * per_task) {
                rows.push_back(r);
                local.push_back(y - t * per_task);
            }
        }
        const DenseMatrix features = data.features.gather_rows(rows);
        const auto split = stratified_split(local, per_task, spec.train_fraction, rng);
        stream.push_back({subset(features, local, split.train, per_task, t + 1),
                          subset(features, local, split.test, per_task, t + 1)});
    }
    return stream;
}

std::vector<TaskSplit> generate_stream(const StreamSpec& spec) {
    spec.validate();
    switch (spec.generator) {
        case StreamGenerator::SplitGaussians: return split_gaussians(spec);
        case StreamGenerator::RotatedGaussians: return rotated_gaussians(spec);
        case StreamGenerator::CsvSplit: return split_labeled(ingest_csv(spec.csv_path, spec.csv), spec);
    }
    throw InternalError("generate_stream: unknown generator");
}

}  // namespace adns
