#pragma once

#include "adns/bounds.hpp"
#include "adns/data.hpp"
#include "adns/report.hpp"
#include "adns/trainer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace adns {

struct OutputSpec {
    std::string path = "results.csv";
    ResultFormat format = ResultFormat::Csv;
};

struct SweepSpec {
    std::string axis;  ///< k0, alpha, beta or method
    std::vector<std::string> values;
};

struct VerifySpec {
    QuadraticTestbedConfig testbed;
    std::vector<std::uint64_t> seeds;  ///< defaults to 0..19
};

struct ExperimentConfig {
    StreamSpec stream;
    TrainerConfig trainer;
    std::vector<std::uint64_t> seeds{0};
    OutputSpec output;
    /// Directory for per-seed checkpoints written after every task.
    std::optional<std::string> checkpoint;
    std::optional<std::string> epoch_log;  ///< JSON-lines per-epoch log
    std::optional<SweepSpec> sweep;
    VerifySpec verify;
    std::size_t parallel = 1;

    void validate() const;
};

/// Parses a JSON config document. Unknown keys, type mismatches and invariant
/// violations raise ConfigError naming the dotted key (e.g. "trainer.alpha_min").
ExperimentConfig parse_config_text(const std::string& text);
/// Reads and parses a config file; unreadable files raise IoError.
ExperimentConfig parse_config_file(const std::string& path);

/// Canonical JSON for a config; parse_config_text(config_to_json(c)) reproduces c.
std::string config_to_json(const ExperimentConfig& config);

Method parse_method(const std::string& name);
RankStrategy parse_rank_strategy(const std::string& name);
Optimizer parse_optimizer(const std::string& name);
StreamGenerator parse_generator(const std::string& name);
std::string to_string(StreamGenerator g);
Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

/// The five-task SplitGaussians benchmark used by the direction and trend
/// checks: seeds 0..2, AdNS with a constant threshold of 10.
ExperimentConfig standard_suite_config();
/// Constant threshold levels for the threshold trend on that benchmark.
std::vector<double> standard_suite_alpha_levels();

/// Comma-separated unsigned integers, e.g. "0,1,2".
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace adns
