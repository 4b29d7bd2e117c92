#pragma once

#include "adns/config.hpp"
#include "adns/report.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace adns {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2, kExitIo = 3 };

/// Maps a library exception to the process exit code.
int exit_code_for(const std::exception& e) noexcept;

enum class LogLevel { Error, Info, Debug };
/// Parses ADNS_LOG_LEVEL (error, info, debug); unset means info.
LogLevel log_level_from_env();
void configure_logging(LogLevel level);

struct RunOptions {
    bool dry_run = false;
    /// Stops every run after this many tasks (checkpoints are still written).
    std::optional<std::size_t> stop_after_task;
};

/// One unit of work: a trainer configuration and the seed for stream and trainer.
struct RunJob {
    TrainerConfig trainer;
    std::uint64_t seed = 0;
    std::string label;      ///< sweep point, used in logs
    std::size_t index = 0;  ///< position in the job list; names checkpoint files
};

/// Record of a finished run with metrics filled.
RunRecord make_record(const TrainerConfig& trainer, std::uint64_t seed, const AccuracyMatrix& accuracy);

/// Runs jobs on a bounded pool of `parallel` workers; results keep job order.
/// Runs halted by `stop_after_task` before the last task yield default records.
/// Epoch records go to the config's epoch log when set; checkpoints to its
/// checkpoint directory.
std::vector<RunRecord> execute_jobs(const ExperimentConfig& config, const std::vector<RunJob>& jobs,
                                    const RunOptions& options = {});

/// Applies one sweep value to a trainer config. Axis "alpha" sets a constant
/// schedule; axis "method" clears beta for Vanilla, which has no distillation.
TrainerConfig apply_sweep_value(const TrainerConfig& base, const std::string& axis, const std::string& value);

struct SweepPointSummary {
    std::string value;
    MeanSd acc, bwt, la;  ///< percentages
};

struct SweepSummary {
    std::string axis;
    std::vector<SweepPointSummary> points;
    /// Monotonicity verdicts; present for the k0 and alpha axes.
    std::optional<TrendVerdict> la_trend;
    std::optional<TrendVerdict> bwt_trend;
};

SweepSummary summarize_sweep(const std::string& axis, const std::vector<std::string>& values,
                             const std::vector<RunRecord>& records, std::size_t seeds_per_point);

// Subcommands. Each returns an exit code and reports errors on `err`.
int cmd_run(const ExperimentConfig& config, const RunOptions& options, std::ostream& out, std::ostream& err);
int cmd_sweep(const ExperimentConfig& config, const SweepSpec& sweep, const RunOptions& options,
              std::ostream& out, std::ostream& err);
/// Runs the quadratic testbed on every verify seed. Exit 0 iff every applicable
/// slack is >= -1e-8; writes the bound reports as JSON when `report_path` is set.
int cmd_verify(const ExperimentConfig& config, const std::optional<std::string>& report_path, std::ostream& out,
               std::ostream& err);
/// Finishes every checkpointed run found in `checkpoint_dir` and emits results.
int cmd_resume(const std::string& checkpoint_dir, const std::optional<std::string>& out_path,
               const std::optional<ResultFormat>& format, std::ostream& out, std::ostream& err);

/// Checkpoint files for one job inside a checkpoint directory.
struct CheckpointPaths {
    std::string model;      ///< "ADNM" envelope
    std::string nullspace;  ///< "ADNS" envelope
    std::string state;      ///< JSON sidecar: config, seed, progress, RNG state
};
CheckpointPaths checkpoint_paths(const std::string& dir, std::size_t job_index);

void write_checkpoint(const std::string& dir, const ExperimentConfig& config, const RunJob& job,
                      const RunState& state, const AccuracyMatrix& accuracy);

struct LoadedCheckpoint {
    ExperimentConfig config;
    RunJob job;
    RunState state;
    AccuracyMatrix accuracy;
};
LoadedCheckpoint read_checkpoint(const std::string& state_path);

}  // namespace adns
