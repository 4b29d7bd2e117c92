#include "adns/commands.hpp"
#include "adns/config.hpp"
#include "adns/error.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

using namespace adns;
using adns::testing_util::TempDir;

#ifndef ADNS_SOURCE_DIR
#error "ADNS_SOURCE_DIR must point at the repository root"
#endif

namespace {

std::string config_key(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<accepted>";
}

std::string tiny_config(const std::string& dir, const std::string& extra = "") {
    return R"({"stream": {"tasks": 2, "dim": 6, "samples_per_class": 30},
               "trainer": {"epochs": 2, "model": {"hidden": [8]}},
               "seeds": [0, 1],
               "output": {"path": ")" +
           dir + R"(/results.csv"})" + extra + "}";
}

}  // namespace

TEST(ParseConfig, MinimalConfigFillsDefaults) {
    ExperimentConfig c = parse_config_text(R"({"stream": {}, "trainer": {"method": "AdNS"}})");
    EXPECT_EQ(c.trainer.method, Method::AdNS);
    EXPECT_DOUBLE_EQ(c.trainer.tau, 2.0);
    EXPECT_EQ(c.trainer.rank_policy.strategy, RankStrategy::Avg);
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{0}));
    EXPECT_EQ(c.output.format, ResultFormat::Csv);
    EXPECT_EQ(c.verify.seeds.size(), 20u);
    EXPECT_EQ(c.parallel, 1u);
}

TEST(ParseConfig, ErrorsNameTheOffendingKey) {
    EXPECT_EQ(config_key(R"({"stream": {}, "trainer": {"alpha_max": 5, "alpha_min": 8}})"), "trainer.alpha_min");
    EXPECT_EQ(config_key(R"({"stream": {}, "trainer": {"colour": 1}})"), "trainer.colour");
    EXPECT_EQ(config_key(R"({"stream": {"dim": "wide"}, "trainer": {}})"), "stream.dim");
    EXPECT_EQ(config_key(R"({"stream": {}, "trainer": {"model": {"hidden": [4, -1]}}})"), "trainer.model.hidden[1]");
    EXPECT_EQ(config_key(R"({"stream": {}, "trainer": {}, "seeds": []})"), "seeds");
    EXPECT_EQ(config_key(R"({"trainer": {}})"), "stream");
    EXPECT_EQ(config_key(R"({"stream": {}, "trainer": {}, "sweep": {"axis": "depth", "values": [1]}})"), "sweep.axis");
    EXPECT_EQ(config_key(R"({"stream": {}, "trainer": {}, "sweep": {"axis": "k0", "values": []}})"), "sweep.values");
    EXPECT_EQ(config_key(R"({"stream": {}, "trainer": {"method": "Vanilla", "beta": 1}})"), "trainer.beta");
    EXPECT_EQ(config_key(R"({"stream": {}, "trainer": {}, "verify": {"bogus": 1}})"), "verify.bogus");
    EXPECT_EQ(config_key("{not json"), "");
}

TEST(ParseConfig, ShippedExampleParsesToKnownStructure) {
    ExperimentConfig c = parse_config_file(std::string(ADNS_SOURCE_DIR) + "/configs/example.json");
    EXPECT_EQ(c.stream.generator, StreamGenerator::RotatedGaussians);
    EXPECT_EQ(c.stream.tasks, 4u);
    EXPECT_EQ(c.stream.classes_per_task, 3u);
    EXPECT_DOUBLE_EQ(c.stream.train_fraction, 0.75);
    EXPECT_EQ(c.trainer.method, Method::AdNS);
    EXPECT_EQ(c.trainer.optimizer, Optimizer::AdamProjected);
    EXPECT_DOUBLE_EQ(*c.trainer.first_task_learning_rate, 0.1);
    EXPECT_EQ(c.trainer.lr_milestones, (std::vector<std::size_t>{10, 15}));
    EXPECT_DOUBLE_EQ(c.trainer.schedule.alpha_max, 20.0);
    EXPECT_DOUBLE_EQ(c.trainer.schedule.alpha_min, 10.0);
    EXPECT_DOUBLE_EQ(*c.trainer.distill_learning_rate, 0.02);
    EXPECT_EQ(c.trainer.model.hidden, (std::vector<std::size_t>{32, 32}));
    EXPECT_FALSE(c.trainer.model.use_bias);
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
    EXPECT_EQ(c.output.format, ResultFormat::Json);
    EXPECT_EQ(*c.checkpoint, "example_checkpoints");
    EXPECT_EQ(c.sweep->axis, "k0");
    EXPECT_EQ(c.sweep->values, (std::vector<std::string>{"0.2", "0.5", "0.9"}));
    EXPECT_EQ(c.verify.seeds.size(), 5u);
    EXPECT_EQ(c.parallel, 2u);
}

TEST(ParseConfig, CanonicalJsonRoundTrips) {
    for (const char* name : {"/configs/example.json", "/configs/standard_suite.json"}) {
        ExperimentConfig c = parse_config_file(std::string(ADNS_SOURCE_DIR) + name);
        const std::string once = config_to_json(c);
        EXPECT_EQ(config_to_json(parse_config_text(once)), once) << name;
    }
}

TEST(ParseConfig, ShippedStandardSuiteMatchesLibrary) {
    ExperimentConfig shipped = parse_config_file(std::string(ADNS_SOURCE_DIR) + "/configs/standard_suite.json");
    ExperimentConfig lib = standard_suite_config();
    lib.output = shipped.output;
    EXPECT_EQ(config_to_json(shipped), config_to_json(lib));
}

TEST(ParseConfig, SeedListParsing) {
    EXPECT_EQ(parse_seed_list("0,1, 7"), (std::vector<std::uint64_t>{0, 1, 7}));
    EXPECT_THROW(parse_seed_list(""), ConfigError);
    EXPECT_THROW(parse_seed_list("1,x"), ConfigError);
    EXPECT_THROW(parse_seed_list("-1"), ConfigError);
}

TEST(ExitCodes, MapErrorKinds) {
    EXPECT_EQ(exit_code_for(ConfigError("k", "bad")), kExitConfig);
    EXPECT_EQ(exit_code_for(IoError("p", "bad")), kExitIo);
    EXPECT_EQ(exit_code_for(ParseError(3, "bad")), kExitIo);
    EXPECT_EQ(exit_code_for(NumericalError("bad")), kExitRuntime);
    EXPECT_EQ(exit_code_for(ValidationError("bad")), kExitRuntime);
}

TEST(SweepValues, AxesApplyAndValidate) {
    TrainerConfig base;
    EXPECT_DOUBLE_EQ(apply_sweep_value(base, "k0", "0.5").rank_policy.k0, 0.5);
    TrainerConfig a = apply_sweep_value(base, "alpha", "30");
    EXPECT_DOUBLE_EQ(a.schedule.alpha_max, 30.0);
    EXPECT_DOUBLE_EQ(a.schedule.alpha_min, 30.0);
    base.beta = 1.0;
    EXPECT_DOUBLE_EQ(apply_sweep_value(base, "method", "Vanilla").beta, 0.0);
    EXPECT_EQ(apply_sweep_value(base, "method", "PureNullSpace").method, Method::PureNullSpace);
    EXPECT_THROW(apply_sweep_value(base, "k0", "1.5"), ConfigError);
    EXPECT_THROW(apply_sweep_value(base, "beta", "abc"), ConfigError);
    EXPECT_THROW(apply_sweep_value(base, "depth", "3"), ConfigError);
}

TEST(Commands, RunWritesResultsAndDryRunWritesNothing) {
    TempDir dir("run");
    ExperimentConfig c = parse_config_text(tiny_config(dir.path().string()));
    std::ostringstream out, err;
    RunOptions dry;
    dry.dry_run = true;
    EXPECT_EQ(cmd_run(c, dry, out, err), kExitOk);
    EXPECT_NE(out.str().find("plan: 2 runs"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(c.output.path));
    out.str("");
    EXPECT_EQ(cmd_run(c, {}, out, err), kExitOk);
    EXPECT_NE(out.str().find("ACC "), std::string::npos);
    EXPECT_NE(out.str().find("+/-"), std::string::npos);
    const std::string first = read_text_file(c.output.path);
    EXPECT_EQ(std::count(first.begin(), first.end(), '\n'), 3);
    EXPECT_EQ(cmd_run(c, {}, out, err), kExitOk);
    EXPECT_EQ(read_text_file(c.output.path), first);
}

TEST(Commands, ParallelRunsMatchSerial) {
    TempDir dir("parallel");
    ExperimentConfig c = parse_config_text(tiny_config(dir.path().string()));
    c.seeds = {0, 1, 2, 3};
    const auto serial = execute_jobs(c, {{c.trainer, 0, "", 0}, {c.trainer, 1, "", 1}, {c.trainer, 2, "", 2}});
    c.parallel = 3;
    const auto parallel = execute_jobs(c, {{c.trainer, 0, "", 0}, {c.trainer, 1, "", 1}, {c.trainer, 2, "", 2}});
    EXPECT_EQ(serial, parallel);
}

TEST(Commands, FailingRunLeavesNoOutput) {
    TempDir dir("fail");
    ExperimentConfig c = parse_config_text(tiny_config(dir.path().string()));
    c.stream.generator = StreamGenerator::CsvSplit;
    c.stream.csv_path = dir.file("missing.csv");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_run(c, {}, out, err), kExitIo);
    EXPECT_FALSE(std::filesystem::exists(c.output.path));
    EXPECT_NE(err.str().find("missing.csv"), std::string::npos);
}

TEST(Commands, SweepReportsTrendsAndConsolidatesRuns) {
    TempDir dir("sweep");
    ExperimentConfig c = parse_config_text(tiny_config(dir.path().string()));
    std::ostringstream out, err;
    EXPECT_EQ(cmd_sweep(c, {"k0", {"0.2", "0.5", "0.9"}}, {}, out, err), kExitOk) << err.str();
    const std::string csv = read_text_file(c.output.path);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);  // header + 3 points x 2 seeds
    EXPECT_NE(out.str().find("LA non-decreasing in k0"), std::string::npos);
    EXPECT_NE(out.str().find("BWT non-increasing in k0"), std::string::npos);
    out.str("");
    EXPECT_EQ(cmd_sweep(c, {"method", {"Vanilla", "PureNullSpace", "AdNS"}}, {}, out, err), kExitOk);
    EXPECT_EQ(out.str().find("non-decreasing"), std::string::npos);
    EXPECT_EQ(cmd_sweep(c, {"k0", {}}, {}, out, err), kExitConfig);
}

TEST(Commands, VerifyGatesOnPrecondition) {
    ExperimentConfig c = parse_config_text(R"({"stream": {}, "trainer": {}})");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_verify(c, std::nullopt, out, err), kExitOk);
    EXPECT_NE(out.str().find("verify: PASS"), std::string::npos);
    out.str("");
    c.verify.testbed.eta_scale = 1.8;
    cmd_verify(c, std::nullopt, out, err);
    EXPECT_NE(out.str().find("precondition eta <= 1/L_f unmet"), std::string::npos);
    EXPECT_EQ(out.str().find("plasticity bound:"), std::string::npos);
}

TEST(Commands, ResumeReproducesUninterruptedResults) {
    TempDir dir("resume");
    const std::string base = dir.path().string();
    ExperimentConfig full = parse_config_text(tiny_config(base));
    full.stream.tasks = 3;
    full.trainer.method = Method::AdNSRandomMerge;
    full.output.path = dir.file("full.csv");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(full, {}, out, err), kExitOk) << err.str();

    ExperimentConfig partial = full;
    partial.output.path = dir.file("resumed.csv");
    partial.checkpoint = dir.file("ckpt");
    RunOptions stop;
    stop.stop_after_task = 1;
    ASSERT_EQ(cmd_run(partial, stop, out, err), kExitOk) << err.str();
    EXPECT_FALSE(std::filesystem::exists(partial.output.path));
    EXPECT_TRUE(std::filesystem::exists(checkpoint_paths(*partial.checkpoint, 1).state));

    ASSERT_EQ(cmd_resume(*partial.checkpoint, std::nullopt, std::nullopt, out, err), kExitOk) << err.str();
    EXPECT_EQ(read_text_file(partial.output.path), read_text_file(full.output.path));
    EXPECT_EQ(cmd_resume(dir.file("nowhere"), std::nullopt, std::nullopt, out, err), kExitIo);
}

TEST(Commands, EpochLogHasOneLinePerEpoch) {
    TempDir dir("epochs");
    ExperimentConfig c = parse_config_text(tiny_config(dir.path().string()));
    c.epoch_log = dir.file("epochs.jsonl");
    std::ostringstream out, err;
    ASSERT_EQ(cmd_run(c, {}, out, err), kExitOk);
    const std::string log = read_text_file(*c.epoch_log);
    EXPECT_EQ(std::count(log.begin(), log.end(), '\n'), 2 * 2 * 2);  // seeds x tasks x epochs
    EXPECT_NE(log.find("\"distill_loss\""), std::string::npos);
}
