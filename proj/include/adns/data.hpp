#pragma once

#include "adns/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace adns {

struct TaskDataset {
    DenseMatrix features;              ///< n x d
    std::vector<std::size_t> labels;   ///< local to the task, < class_count
    std::size_t class_count = 0;
    std::size_t task_id = 0;           ///< 1-based

    std::size_t size() const noexcept { return labels.size(); }
    void validate() const;
};

struct TaskSplit {
    TaskDataset train;
    TaskDataset test;
};

/// A labeled table as ingested from CSV; labels are dense, by first occurrence.
struct LabeledDataset {
    DenseMatrix features;
    std::vector<std::size_t> labels;
    std::vector<std::string> label_names;
    std::vector<std::string> feature_names;
};

using LabelColumn = std::variant<std::string, std::size_t>;

struct CsvOptions {
    LabelColumn label_column = std::size_t{0};
    bool header = true;
    bool normalize = false;
};

/// Parses a comma-separated file. Throws ParseError (with line number) on a
/// malformed row and ValidationError for an unknown label column.
LabeledDataset ingest_csv(const std::string& path, const CsvOptions& options);
LabeledDataset parse_csv(const std::string& text, const CsvOptions& options);

/// Per-column standardization; constant columns become all zeros.
void standardize_columns(DenseMatrix& features);

/// Writes features then a trailing "label" column, with a header, full precision.
void write_csv(const std::string& path, const TaskDataset& dataset);

enum class StreamGenerator { SplitGaussians, RotatedGaussians, CsvSplit };

struct StreamSpec {
    StreamGenerator generator = StreamGenerator::SplitGaussians;
    std::size_t tasks = 5;
    std::size_t classes_per_task = 2;
    std::size_t dim = 32;
    std::size_t samples_per_class = 200;
    double noise_sigma = 1.0;
    std::uint64_t seed = 0;
    double train_fraction = 0.8;

    // CsvSplit source.
    std::string csv_path;
    CsvOptions csv;

    void validate() const;
};

/// Deterministic in the spec (including its seed).
std::vector<TaskSplit> generate_stream(const StreamSpec& spec);

/// CsvSplit over an in-memory table: T label-disjoint tasks in label order.
std::vector<TaskSplit> split_labeled(const LabeledDataset& data, const StreamSpec& spec);

}  // namespace adns
