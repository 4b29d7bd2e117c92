#include "adns/commands.hpp"

#include "adns/error.hpp"

#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace adns {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
    if (dynamic_cast<const IoError*>(&e)) return kExitIo;
    if (dynamic_cast<const ParseError*>(&e)) return kExitIo;
    return kExitRuntime;
}

LogLevel log_level_from_env() {
    const char* raw = std::getenv("ADNS_LOG_LEVEL");
    if (!raw || !*raw) return LogLevel::Info;
    const std::string v(raw);
    if (v == "error") return LogLevel::Error;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    throw ConfigError("ADNS_LOG_LEVEL", "expected error, info or debug, got '" + v + "'");
}

namespace {

std::shared_ptr<spdlog::logger> logger() {
    static std::shared_ptr<spdlog::logger> instance = [] {
        auto l = spdlog::stderr_color_mt("adns");
        l->set_pattern("[%l] %v");
        l->set_level(spdlog::level::info);
        return l;
    }();
    return instance;
}

}  // namespace

void configure_logging(LogLevel level) {
    switch (level) {
        case LogLevel::Error: logger()->set_level(spdlog::level::err); break;
        case LogLevel::Info: logger()->set_level(spdlog::level::info); break;
        case LogLevel::Debug: logger()->set_level(spdlog::level::debug); break;
    }
}

RunRecord make_record(const TrainerConfig& trainer, std::uint64_t seed, const AccuracyMatrix& accuracy) {
    RunRecord r;
    r.method = to_string(trainer.method);
    r.seed = seed;
    r.k0 = trainer.rank_policy.k0;
    r.alpha_max = trainer.schedule.alpha_max;
    r.alpha_min = trainer.schedule.alpha_min;
    r.beta = trainer.beta;
    r.accuracy = accuracy;
    compute_metrics(r);
    return r;
}

// ---------------------------------------------------------------------------
// Checkpoints

CheckpointPaths checkpoint_paths(const std::string& dir, std::size_t job_index) {
    const std::string stem = (fs::path(dir) / ("run_" + std::to_string(job_index))).string();
    return {stem + ".adnm", stem + ".adns", stem + ".json"};
}

namespace {

ordered_json accuracy_to_json(const AccuracyMatrix& m) {
    ordered_json rows = ordered_json::array();
    for (std::size_t j = 0; j < m.tasks(); ++j) {
        ordered_json row = ordered_json::array();
        for (std::size_t i = 0; i <= j; ++i) {
            const auto v = m.get(j, i);
            row.push_back(v ? ordered_json(*v) : ordered_json(nullptr));
        }
        rows.push_back(row);
    }
    return rows;
}

AccuracyMatrix accuracy_from_json(const ordered_json& rows, std::size_t tasks) {
    AccuracyMatrix m(tasks);
    if (rows.size() != tasks) throw ValidationError("checkpoint: accuracy rows do not match the task count");
    for (std::size_t j = 0; j < tasks; ++j) {
        for (std::size_t i = 0; i < rows[j].size() && i <= j; ++i) {
            if (!rows[j][i].is_null()) m.set(j, i, rows[j][i].get<double>());
        }
    }
    return m;
}

}  // namespace

void write_checkpoint(const std::string& dir, const ExperimentConfig& config, const RunJob& job,
                      const RunState& state, const AccuracyMatrix& accuracy) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir, "cannot create checkpoint directory: " + ec.message());
    const CheckpointPaths paths = checkpoint_paths(dir, job.index);

    write_model_checkpoint(paths.model + ".tmp", state.model);
    write_nullspace_snapshot(paths.nullspace + ".tmp", state.covariance, state.bases);
    fs::rename(paths.model + ".tmp", paths.model, ec);
    if (!ec) fs::rename(paths.nullspace + ".tmp", paths.nullspace, ec);
    if (ec) throw IoError(paths.model, "cannot move checkpoint into place: " + ec.message());

    ExperimentConfig point = config;
    point.trainer = job.trainer;
    std::ostringstream rng;
    rng << state.rng;
    ordered_json side;
    side["config"] = ordered_json::parse(config_to_json(point));
    side["seed"] = job.seed;
    side["label"] = job.label;
    side["job_index"] = job.index;
    side["task_index"] = state.task_index;
    side["tasks_accumulated"] = state.covariance.tasks_accumulated();
    side["has_bases"] = !state.bases.empty();
    ordered_json sources = ordered_json::array();
    for (const LayerNullSpace& b : state.bases) sources.push_back(b.source_task);
    side["source_tasks"] = sources;
    side["rng"] = rng.str();
    side["tasks"] = accuracy.tasks();
    side["accuracy"] = accuracy_to_json(accuracy);
    side["model_file"] = fs::path(paths.model).filename().string();
    side["nullspace_file"] = fs::path(paths.nullspace).filename().string();
    write_file_atomic(paths.state, side.dump(2) + "\n");
}

LoadedCheckpoint read_checkpoint(const std::string& state_path) {
    ordered_json side;
    try {
        side = ordered_json::parse(read_text_file(state_path));
    } catch (const ordered_json::exception& e) {
        throw IoError(state_path, std::string("malformed checkpoint sidecar: ") + e.what());
    }
    LoadedCheckpoint out;
    try {
        out.config = parse_config_text(side.at("config").dump());
        out.job.trainer = out.config.trainer;
        out.job.seed = side.at("seed").get<std::uint64_t>();
        out.job.label = side.at("label").get<std::string>();
        out.job.index = side.at("job_index").get<std::size_t>();

        const fs::path dir = fs::path(state_path).parent_path();
        out.state.model = read_model_checkpoint((dir / side.at("model_file").get<std::string>()).string());
        const NullSpaceSnapshot snap =
            read_nullspace_snapshot((dir / side.at("nullspace_file").get<std::string>()).string());
        out.state.covariance =
            CovarianceStore::from_parts(snap.covariances, side.at("tasks_accumulated").get<std::size_t>());
        if (side.at("has_bases").get<bool>()) {
            const ordered_json& sources = side.at("source_tasks");
            if (sources.size() != snap.bases.size()) {
                throw IoError(state_path, "source task list does not match the snapshot");
            }
            for (std::size_t l = 0; l < snap.bases.size(); ++l) {
                out.state.bases.push_back({snap.bases[l], sources[l].get<std::size_t>()});
            }
        }
        out.state.task_index = side.at("task_index").get<std::size_t>();
        std::istringstream rng(side.at("rng").get<std::string>());
        rng >> out.state.rng;
        if (!rng) throw IoError(state_path, "cannot restore the random generator state");
        out.accuracy = accuracy_from_json(side.at("accuracy"), side.at("tasks").get<std::size_t>());
    } catch (const ordered_json::exception& e) {
        throw IoError(state_path, std::string("incomplete checkpoint sidecar: ") + e.what());
    }
    if (out.state.model.head_count() != out.state.task_index) {
        throw IoError(state_path, "model heads do not match the recorded progress");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Job execution

namespace {

class EpochLog {
  public:
    explicit EpochLog(const std::optional<std::string>& path) {
        if (!path) return;
        out_.open(*path, std::ios::trunc);
        if (!out_) throw IoError(*path, "cannot open epoch log");
        path_ = *path;
    }

    bool enabled() const { return out_.is_open(); }

    void write(const RunJob& job, const EpochRecord& r) {
        ordered_json j;
        j["run"] = job.index;
        j["label"] = job.label;
        j["seed"] = job.seed;
        j["task"] = r.task;
        j["epoch"] = r.epoch;
        j["train_loss"] = r.train_loss;
        j["distill_loss"] = r.distill_loss;
        std::lock_guard<std::mutex> lock(mutex_);
        out_ << j.dump() << '\n';
        if (!out_) throw IoError(path_, "write failed");
    }

  private:
    std::ofstream out_;
    std::string path_;
    std::mutex mutex_;
};

StreamSpec stream_for(const ExperimentConfig& config, std::uint64_t seed) {
    StreamSpec s = config.stream;
    s.seed = seed;
    return s;
}

TrainerConfig trainer_for(const TrainerConfig& t, std::uint64_t seed) {
    TrainerConfig out = t;
    out.seed = seed;
    return out;
}

// Runs or resumes one job through to `stop_after` tasks.
AccuracyMatrix drive(const ExperimentConfig& config, const RunJob& job, RunState& state, AccuracyMatrix accuracy,
                     const std::vector<TaskSplit>& tasks, const RunOptions& options, EpochLog& log) {
    const TrainerConfig trainer = trainer_for(job.trainer, job.seed);
    EpochSink sink;
    if (log.enabled() || logger()->should_log(spdlog::level::debug)) {
        sink = [&](const EpochRecord& r) {
            if (log.enabled()) log.write(job, r);
            logger()->debug("run {} task {} epoch {} loss {:.6f} distill {:.6f}", job.index, r.task, r.epoch,
                            r.train_loss, r.distill_loss);
        };
    }
    TaskEndHook hook = [&](const RunState& s, const AccuracyMatrix& a) {
        logger()->debug("run {} finished task {}", job.index, s.task_index);
        if (config.checkpoint) write_checkpoint(*config.checkpoint, config, job, s, a);
    };
    continue_sequence(state, accuracy, tasks, trainer, sink, hook, options.stop_after_task);
    return accuracy;
}

template <class Work>
void run_pool(std::size_t jobs, std::size_t parallel, Work work) {
    std::vector<std::exception_ptr> errors(jobs);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs; i = next++) {
            try {
                work(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n = std::max<std::size_t>(1, std::min(parallel, jobs));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace

std::vector<RunRecord> execute_jobs(const ExperimentConfig& config, const std::vector<RunJob>& jobs,
                                    const RunOptions& options) {
    EpochLog log(config.epoch_log);
    std::vector<RunRecord> records(jobs.size());
    run_pool(jobs.size(), config.parallel, [&](std::size_t i) {
        const RunJob& job = jobs[i];
        const std::vector<TaskSplit> tasks = generate_stream(stream_for(config, job.seed));
        if (tasks.empty()) throw ValidationError("stream produced no tasks");
        const TrainerConfig trainer = trainer_for(job.trainer, job.seed);
        RunState state = make_run_state(trainer, tasks.front().train.features.cols());
        const AccuracyMatrix accuracy =
            drive(config, job, state, AccuracyMatrix(tasks.size()), tasks, options, log);
        if (state.task_index < tasks.size()) {
            logger()->info("run {} seed {} stopped after task {}", job.index, job.seed, state.task_index);
            return;
        }
        records[i] = make_record(job.trainer, job.seed, accuracy);
        logger()->info("run {}{} seed {} done", job.index, job.label.empty() ? "" : " (" + job.label + ")", job.seed);
    });
    return records;
}

// ---------------------------------------------------------------------------
// Sweeps

namespace {

double parse_number(const std::string& key, const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigError(key, "'" + text + "' is not a number");
    }
    if (used != text.size()) throw ConfigError(key, "'" + text + "' is not a number");
    return v;
}

}  // namespace

TrainerConfig apply_sweep_value(const TrainerConfig& base, const std::string& axis, const std::string& value) {
    TrainerConfig t = base;
    if (axis == "k0") {
        t.rank_policy.k0 = parse_number("sweep.values", value);
    } else if (axis == "alpha") {
        t.schedule.alpha_max = t.schedule.alpha_min = parse_number("sweep.values", value);
    } else if (axis == "beta") {
        t.beta = parse_number("sweep.values", value);
    } else if (axis == "method") {
        try {
            t.method = parse_method(value);
        } catch (const ValidationError& e) {
            throw ConfigError("sweep.values", e.what());
        }
        if (t.method == Method::Vanilla) t.beta = 0.0;
    } else {
        throw ConfigError("sweep.axis", "unknown axis '" + axis + "' (expected k0, alpha, beta or method)");
    }
    try {
        t.validate();
    } catch (const ValidationError& e) {
        throw ConfigError("sweep.values", "value '" + value + "': " + e.what());
    }
    return t;
}

SweepSummary summarize_sweep(const std::string& axis, const std::vector<std::string>& values,
                             const std::vector<RunRecord>& records, std::size_t seeds_per_point) {
    if (records.size() != values.size() * seeds_per_point) {
        throw ValidationError("summarize_sweep: record count does not match the sweep grid");
    }
    SweepSummary s;
    s.axis = axis;
    std::vector<double> la_means, bwt_means;
    for (std::size_t p = 0; p < values.size(); ++p) {
        std::vector<double> a, b, l;
        for (std::size_t k = 0; k < seeds_per_point; ++k) {
            const RunRecord& r = records[p * seeds_per_point + k];
            a.push_back(r.acc * 100.0);
            if (r.bwt) b.push_back(*r.bwt * 100.0);
            l.push_back(r.la * 100.0);
        }
        s.points.push_back({values[p], mean_sd(a), mean_sd(b), mean_sd(l)});
        la_means.push_back(s.points.back().la.mean);
        bwt_means.push_back(s.points.back().bwt.mean);
    }
    if (axis == "k0" || axis == "alpha") {
        // Points are judged in increasing axis order.
        std::vector<std::size_t> order(values.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            return std::stod(values[x]) < std::stod(values[y]);
        });
        std::vector<double> la_sorted, bwt_sorted;
        for (std::size_t i : order) {
            la_sorted.push_back(la_means[i]);
            bwt_sorted.push_back(bwt_means[i]);
        }
        s.la_trend = check_trend(la_sorted, TrendDirection::NonDecreasing);
        s.bwt_trend = check_trend(bwt_sorted, TrendDirection::NonIncreasing);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

std::string pm(const MeanSd& m) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f +/- %.2f", m.mean, m.sd);
    return buf;
}

void print_summary(std::ostream& out, const std::vector<RunRecord>& runs) {
    std::vector<double> a, b, l;
    for (const RunRecord& r : runs) {
        a.push_back(r.acc * 100.0);
        if (r.bwt) b.push_back(*r.bwt * 100.0);
        l.push_back(r.la * 100.0);
    }
    out << "ACC " << pm(mean_sd(a)) << "  BWT " << (b.empty() ? std::string("n/a") : pm(mean_sd(b))) << "  LA "
        << pm(mean_sd(l)) << "  (" << runs.size() << " run" << (runs.size() == 1 ? "" : "s") << ")\n";
}

template <class Body>
int guarded(std::ostream& err, Body body) {
    try {
        return body();
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

std::string trend_text(const TrendVerdict& v) {
    std::ostringstream s;
    s << (v.holds ? "holds" : "violated") << " (" << v.inversions << " inversion" << (v.inversions == 1 ? "" : "s");
    if (v.inversions > 0) s << ", worst " << std::fixed << std::setprecision(2) << v.worst_inversion << " points";
    s << ")";
    return s.str();
}

void print_plan(std::ostream& out, const ExperimentConfig& c, const std::vector<RunJob>& jobs) {
    const TrainerConfig& t = c.trainer;
    out << "plan: " << jobs.size() << " run" << (jobs.size() == 1 ? "" : "s") << "\n"
        << "  stream: " << to_string(c.stream.generator) << ", " << c.stream.tasks << " tasks, "
        << c.stream.classes_per_task << " classes/task, dim " << c.stream.dim << ", " << c.stream.samples_per_class
        << " samples/class, noise " << c.stream.noise_sigma << "\n"
        << "  trainer: " << to_string(t.method) << ", " << to_string(t.optimizer) << " lr " << t.learning_rate
        << ", " << t.epochs << " epochs, batch " << t.batch_size << ", beta " << t.beta << ", tau " << t.tau
        << ", alpha " << t.schedule.alpha_max << "->" << t.schedule.alpha_min << ", "
        << to_string(t.rank_policy.strategy) << " k0 " << t.rank_policy.k0 << "\n"
        << "  output: " << c.output.path << " (" << to_string(c.output.format) << ")\n";
    for (const RunJob& j : jobs) {
        out << "  run " << j.index << ": seed " << j.seed << (j.label.empty() ? "" : ", " + j.label) << "\n";
    }
}

}  // namespace

int cmd_run(const ExperimentConfig& config, const RunOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        config.validate();
        std::vector<RunJob> jobs;
        for (std::uint64_t s : config.seeds) jobs.push_back({config.trainer, s, "", jobs.size()});
        if (options.dry_run) {
            print_plan(out, config, jobs);
            return int(kExitOk);
        }
        const std::vector<RunRecord> records = execute_jobs(config, jobs, options);
        if (options.stop_after_task && *options.stop_after_task < config.stream.tasks) {
            out << "stopped after task " << *options.stop_after_task << "; no results written\n";
            return int(kExitOk);
        }
        emit_results(records, config.output.format, config.output.path);
        print_summary(out, records);
        out << "results: " << config.output.path << "\n";
        return int(kExitOk);
    });
}

int cmd_sweep(const ExperimentConfig& config, const SweepSpec& sweep, const RunOptions& options, std::ostream& out,
              std::ostream& err) {
    return guarded(err, [&] {
        config.validate();
        if (sweep.values.empty()) throw ConfigError("sweep.values", "must list at least one value");
        std::vector<RunJob> jobs;
        for (const std::string& v : sweep.values) {
            const TrainerConfig t = apply_sweep_value(config.trainer, sweep.axis, v);
            for (std::uint64_t s : config.seeds) jobs.push_back({t, s, sweep.axis + "=" + v, jobs.size()});
        }
        if (options.dry_run) {
            print_plan(out, config, jobs);
            return int(kExitOk);
        }
        const std::vector<RunRecord> records = execute_jobs(config, jobs, options);
        if (options.stop_after_task && *options.stop_after_task < config.stream.tasks) {
            out << "stopped after task " << *options.stop_after_task << "; no results written\n";
            return int(kExitOk);
        }
        emit_results(records, config.output.format, config.output.path);
        const SweepSummary s = summarize_sweep(sweep.axis, sweep.values, records, config.seeds.size());
        out << "sweep over " << sweep.axis << " (" << config.seeds.size() << " seeds per point)\n";
        for (const SweepPointSummary& p : s.points) {
            out << "  " << sweep.axis << "=" << p.value << ": ACC " << pm(p.acc) << "  BWT " << pm(p.bwt) << "  LA "
                << pm(p.la) << "\n";
        }
        if (s.la_trend) out << "  LA non-decreasing in " << sweep.axis << ": " << trend_text(*s.la_trend) << "\n";
        if (s.bwt_trend) out << "  BWT non-increasing in " << sweep.axis << ": " << trend_text(*s.bwt_trend) << "\n";
        out << "results: " << config.output.path << "\n";
        return int(kExitOk);
    });
}

int cmd_verify(const ExperimentConfig& config, const std::optional<std::string>& report_path, std::ostream& out,
               std::ostream& err) {
    return guarded(err, [&] {
        config.validate();
        constexpr double kTolerance = -1e-8;
        std::vector<RunRecord> reports;
        std::size_t plastic_checked = 0, plastic_ok = 0, stable_checked = 0, stable_ok = 0, premise = 0;
        double plastic_min = 0.0, stable_min = 0.0;
        bool precondition = true;
        bool first_p = true, first_s = true;
        for (std::uint64_t seed : config.verify.seeds) {
            const QuadraticTestbedResult r = run_quadratic_testbed(config.verify.testbed, seed);
            RunRecord rec;
            rec.method = "quadratic-testbed";
            rec.seed = seed;
            rec.bounds = {r.plasticity, r.stability};
            reports.push_back(rec);
            precondition = precondition && r.plasticity.precondition_met;
            if (r.plasticity.precondition_met) {
                ++plastic_checked;
                if (r.plasticity.slack >= kTolerance) ++plastic_ok;
                plastic_min = first_p ? r.plasticity.slack : std::min(plastic_min, r.plasticity.slack);
                first_p = false;
            }
            const bool held = r.stability.premise_held.value_or(false);
            if (held) ++premise;
            if (r.stability.precondition_met && held) {
                ++stable_checked;
                if (r.stability.slack >= kTolerance) ++stable_ok;
                stable_min = first_s ? r.stability.slack : std::min(stable_min, r.stability.slack);
                first_s = false;
            }
            logger()->debug("seed {}: plasticity lhs {:.6g} rhs {:.6g}; stability lhs {:.6g} rhs {:.6g} premise {}",
                            seed, r.plasticity.lhs, r.plasticity.rhs, r.stability.lhs, r.stability.rhs,
                            held ? "held" : "violated");
        }
        const std::size_t n = config.verify.seeds.size();
        out << "quadratic testbed: " << n << " seeds, eta = " << config.verify.testbed.eta_scale << " / L_f\n";
        if (!precondition) {
            out << "  step-size precondition eta <= 1/L_f unmet; plasticity and stability guarantees skipped\n";
        }
        out << std::setprecision(6);
        if (plastic_checked > 0) {
            out << "  plasticity bound: " << plastic_ok << "/" << plastic_checked << " seeds with slack >= -1e-8, min slack "
                << plastic_min << "\n";
        }
        out << "  stability premise <delta_w, g_old> <= 0 held on " << premise << "/" << n << " seeds ("
            << std::fixed << std::setprecision(1) << 100.0 * double(premise) / double(n) << "%)\n"
            << std::defaultfloat << std::setprecision(6);
        if (stable_checked > 0) {
            out << "  stability bound: " << stable_ok << "/" << stable_checked
                << " premise-holding seeds with slack >= -1e-8, min slack " << stable_min << "\n";
        }
        if (report_path) {
            write_file_atomic(*report_path, format_results_json(reports));
            out << "reports: " << *report_path << "\n";
        }
        const bool ok = plastic_ok == plastic_checked && stable_ok == stable_checked;
        out << (ok ? "verify: PASS" : "verify: FAIL") << "\n";
        return ok ? int(kExitOk) : int(kExitRuntime);
    });
}

int cmd_resume(const std::string& checkpoint_dir, const std::optional<std::string>& out_path,
               const std::optional<ResultFormat>& format, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!fs::is_directory(checkpoint_dir)) throw IoError(checkpoint_dir, "checkpoint directory not found");
        std::vector<std::string> sidecars;
        for (const auto& entry : fs::directory_iterator(checkpoint_dir)) {
            const std::string name = entry.path().filename().string();
            if (name.rfind("run_", 0) == 0 && entry.path().extension() == ".json") sidecars.push_back(entry.path().string());
        }
        if (sidecars.empty()) throw IoError(checkpoint_dir, "no checkpoints found");

        std::vector<LoadedCheckpoint> loaded;
        for (const std::string& p : sidecars) loaded.push_back(read_checkpoint(p));
        std::sort(loaded.begin(), loaded.end(),
                  [](const LoadedCheckpoint& a, const LoadedCheckpoint& b) { return a.job.index < b.job.index; });

        ExperimentConfig config = loaded.front().config;
        if (out_path) config.output.path = *out_path;
        if (format) config.output.format = *format;
        config.checkpoint = checkpoint_dir;

        EpochLog log(std::nullopt);
        std::vector<RunRecord> records(loaded.size());
        run_pool(loaded.size(), config.parallel, [&](std::size_t i) {
            LoadedCheckpoint& c = loaded[i];
            const std::vector<TaskSplit> tasks = generate_stream(stream_for(c.config, c.job.seed));
            logger()->info("resuming run {} at task {} of {}", c.job.index, c.state.task_index + 1, tasks.size());
            ExperimentConfig run_config = c.config;
            run_config.checkpoint = checkpoint_dir;
            const AccuracyMatrix acc = drive(run_config, c.job, c.state, c.accuracy, tasks, {}, log);
            records[i] = make_record(c.job.trainer, c.job.seed, acc);
        });
        emit_results(records, config.output.format, config.output.path);
        print_summary(out, records);
        out << "results: " << config.output.path << "\n";
        return int(kExitOk);
    });
}

}  // namespace adns
