#include "adns/commands.hpp"
#include "adns/config.hpp"
#include "adns/error.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::string> format;
    std::optional<std::string> seeds;
    std::optional<std::size_t> parallel;
    bool dry_run = false;
    std::optional<std::size_t> stop_after_task;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_config = true) {
    if (with_config) cmd->add_option("--config", f.config_path, "Experiment config (JSON)")->required();
    cmd->add_option("--out", f.out, "Results file path");
    cmd->add_option("--format", f.format, "Results format: csv or json");
    cmd->add_option("--seeds", f.seeds, "Comma-separated seed list, e.g. 0,1,2");
    cmd->add_option("--parallel", f.parallel, "Worker count");
    cmd->add_flag("--dry-run", f.dry_run, "Validate and print the plan without running");
    cmd->add_option("--stop-after-task", f.stop_after_task, "Stop each run after this many tasks");
}

adns::ExperimentConfig load(const CommonFlags& f) {
    adns::ExperimentConfig cfg = adns::parse_config_file(f.config_path);
    if (f.out) cfg.output.path = *f.out;
    if (f.format) {
        try {
            cfg.output.format = adns::parse_result_format(*f.format);
        } catch (const adns::ValidationError& e) {
            throw adns::ConfigError("--format", e.what());
        }
    }
    if (f.seeds) cfg.seeds = adns::parse_seed_list(*f.seeds);
    if (f.parallel) cfg.parallel = *f.parallel;
    cfg.validate();
    return cfg;
}

adns::RunOptions options(const CommonFlags& f) {
    adns::RunOptions o;
    o.dry_run = f.dry_run;
    o.stop_after_task = f.stop_after_task;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    adns::configure_logging(adns::log_level_from_env());

    CLI::App app{"Continual learning with low-rank null-space projection"};
    app.require_subcommand(1);

    CommonFlags run_flags, sweep_flags, verify_flags, resume_flags;
    std::optional<std::string> sweep_axis;
    std::vector<std::string> sweep_values;
    std::optional<std::string> verify_report;
    std::string checkpoint_dir;

    CLI::App* run = app.add_subcommand("run", "Train every seed on the configured stream");
    add_common(run, run_flags);

    CLI::App* sweep = app.add_subcommand("sweep", "Sweep one trainer setting across seeds");
    add_common(sweep, sweep_flags);
    sweep->add_option("--axis", sweep_axis, "k0, alpha, beta or method");
    sweep->add_option("--values", sweep_values, "Axis values (comma-separated)")->delimiter(',');

    CLI::App* verify = app.add_subcommand("verify", "Check the plasticity and stability bounds on the quadratic testbed");
    verify->add_option("--config", verify_flags.config_path, "Experiment config (JSON)")->required();
    verify->add_option("--seeds", verify_flags.seeds, "Testbed seeds, comma-separated");
    verify->add_option("--report", verify_report, "Write bound reports as JSON");

    CLI::App* resume = app.add_subcommand("resume", "Finish runs from a checkpoint directory");
    resume->add_option("--checkpoint", checkpoint_dir, "Checkpoint directory")->required();
    resume->add_option("--out", resume_flags.out, "Results file path (defaults to the checkpointed config)");
    resume->add_option("--format", resume_flags.format, "Results format: csv or json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? adns::kExitOk : adns::kExitConfig;
    }

    try {
        if (*run) return adns::cmd_run(load(run_flags), options(run_flags), std::cout, std::cerr);
        if (*sweep) {
            adns::ExperimentConfig cfg = load(sweep_flags);
            adns::SweepSpec spec = cfg.sweep.value_or(adns::SweepSpec{});
            if (sweep_axis) spec.axis = *sweep_axis;
            if (!sweep_values.empty()) spec.values = sweep_values;
            cfg.sweep = spec;
            cfg.validate();
            return adns::cmd_sweep(cfg, spec, options(sweep_flags), std::cout, std::cerr);
        }
        if (*verify) {
            adns::ExperimentConfig cfg = adns::parse_config_file(verify_flags.config_path);
            if (verify_flags.seeds) cfg.verify.seeds = adns::parse_seed_list(*verify_flags.seeds);
            return adns::cmd_verify(cfg, verify_report, std::cout, std::cerr);
        }
        if (*resume) {
            std::optional<adns::ResultFormat> fmt;
            if (resume_flags.format) {
                try {
                    fmt = adns::parse_result_format(*resume_flags.format);
                } catch (const adns::ValidationError& e) {
                    throw adns::ConfigError("--format", e.what());
                }
            }
            return adns::cmd_resume(checkpoint_dir, resume_flags.out, fmt, std::cout, std::cerr);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return adns::exit_code_for(e);
    }
    return adns::kExitOk;
}
