// Acceptance suite: one PASS/FAIL line per criterion, exit 0 iff all pass.
//
//   adns_acceptance            run every criterion
//   adns_acceptance 1 4 10     run a subset

#include "adns/commands.hpp"
#include "adns/config.hpp"
#include "adns/linalg.hpp"
#include "adns/report.hpp"
#include "../gradcheck.hpp"
#include "../oracles.hpp"
#include "../scenarios.hpp"
#include "../test_util.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace adns;
using namespace adns::testing_util;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_seconds;
    std::function<Outcome()> check;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Mean ACC/BWT/LA in percentage points over seeds, via the same job path as the CLI.
struct SuiteMeans {
    double acc = 0.0, bwt = 0.0, la = 0.0;
};

SuiteMeans suite_means(const ExperimentConfig& suite, const TrainerConfig& trainer,
                       const std::vector<std::uint64_t>& seeds) {
    std::vector<RunJob> jobs;
    for (std::uint64_t s : seeds) jobs.push_back({trainer, s, "", jobs.size()});
    const std::vector<RunRecord> runs = execute_jobs(suite, jobs);
    SuiteMeans m;
    for (const RunRecord& r : runs) {
        m.acc += r.acc * 100.0;
        m.bwt += *r.bwt * 100.0;
        m.la += r.la * 100.0;
    }
    const double n = static_cast<double>(runs.size());
    return {m.acc / n, m.bwt / n, m.la / n};
}

SweepSummary suite_sweep(const ExperimentConfig& suite, const std::string& axis,
                         const std::vector<std::string>& values) {
    std::vector<RunJob> jobs;
    for (const std::string& v : values) {
        const TrainerConfig t = apply_sweep_value(suite.trainer, axis, v);
        for (std::uint64_t s : suite.seeds) jobs.push_back({t, s, axis + "=" + v, jobs.size()});
    }
    return summarize_sweep(axis, values, execute_jobs(suite, jobs), suite.seeds.size());
}

std::string sweep_detail(const SweepSummary& s) {
    std::string la = "LA", bwt = "BWT";
    for (const SweepPointSummary& p : s.points) {
        la += fmt(" %.2f", p.la.mean);
        bwt += fmt(" %.2f", p.bwt.mean);
    }
    return s.axis + " {" + [&] {
        std::string v;
        for (const SweepPointSummary& p : s.points) v += (v.empty() ? "" : ", ") + p.value;
        return v;
    }() + "}: " + la + "; " + bwt;
}

Outcome null_space_exactness() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) worst = std::max(worst, task_one_logit_drift(seed));
    return {worst <= 1e-6, fmt("max task-1 logit change %.3g over 5 seeds (limit 1e-6)", worst)};
}

Outcome eckart_young() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> dim(1, 20);
    double worst_formula = 0.0;
    std::size_t beaten = 0, comparisons = 0;
    for (int m = 0; m < 50; ++m) {
        const std::size_t rows = dim(rng), cols = dim(rng);
        const DenseMatrix a = random_matrix(rows, cols, rng);
        const SvdResult svd = thin_svd(a);
        std::vector<double> sigma = svd.sigma;
        for (std::size_t k = 1; k <= sigma.size(); ++k) {
            const DenseMatrix best = rank_k_truncate(svd, k);
            const double err = frobenius_norm(a - best);
            double discarded = 0.0;
            for (std::size_t i = k; i < sigma.size(); ++i) discarded += sigma[i] * sigma[i];
            worst_formula = std::max(worst_formula, std::abs(err - std::sqrt(discarded)));
            for (int c = 0; c < 100; ++c) {
                DenseMatrix competitor;
                if (c % 2 == 0) {
                    competitor = matmul(random_matrix(rows, k, rng), random_matrix(k, cols, rng));
                } else {
                    // Near-optimal competitor: perturbed optimal factors, still rank <= k.
                    DenseMatrix left = svd.u.column_block(0, k);
                    for (std::size_t j = 0; j < k; ++j)
                        for (std::size_t i = 0; i < rows; ++i) left(i, j) *= sigma[j];
                    const double eps = 1e-3 * (1 + c % 7);
                    competitor = matmul(left + random_matrix(rows, k, rng, eps),
                                        svd.vt.row_block(0, k) + random_matrix(k, cols, rng, eps));
                }
                ++comparisons;
                if (frobenius_norm(a - competitor) < err - 1e-12) ++beaten;
            }
        }
    }
    return {worst_formula <= 1e-8 && beaten == 0,
            fmt("max |error - sqrt(sum discarded sigma^2)| %.3g (limit 1e-8); %zu/%zu competitors beat the truncation",
                worst_formula, beaten, comparisons)};
}

Outcome gradient_check() {
    double worst = 0.0;
    std::size_t entries = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        GradCheckCase c = make_gradcheck_case(seed);
        for (double beta : {0.0, 1.0}) {
            GradCheckResult r = check_gradients(c.model, c.x, c.labels, 2, &c.target, beta, 2.0);
            worst = std::max(worst, r.worst_relative_error);
            entries += r.entries;
        }
    }
    return {worst <= 1e-4, fmt("worst relative error %.3g over %zu entries, 20 seeds, beta in {0, 1} (limit 1e-4)",
                               worst, entries)};
}

Outcome bound_verification() {
    const QuadraticTestbedConfig testbed;
    std::size_t plastic_ok = 0, premise = 0, stable_ok = 0, precondition = 0;
    double plastic_min = 1e300, stable_min = 1e300;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const QuadraticTestbedResult r = run_quadratic_testbed(testbed, seed);
        if (r.plasticity.precondition_met) ++precondition;
        if (r.plasticity.precondition_met && r.plasticity.slack >= -1e-8) ++plastic_ok;
        plastic_min = std::min(plastic_min, r.plasticity.slack);
        if (*r.stability.premise_held) {
            ++premise;
            if (r.stability.slack >= -1e-8) ++stable_ok;
            stable_min = std::min(stable_min, r.stability.slack);
        }
    }
    std::string detail = fmt("plasticity bound %zu/20 (min slack %.4g); premise held on %zu/20 seeds (%.0f%%); "
                             "stability bound %zu/%zu",
                             plastic_ok, plastic_min, premise, 5.0 * premise, stable_ok, premise);
    if (premise > 0) detail += fmt(" (min slack %.4g)", stable_min);
    return {precondition == 20 && plastic_ok == 20 && stable_ok == premise, detail};
}

Outcome forgetting_direction() {
    const ExperimentConfig suite = standard_suite_config();
    TrainerConfig vanilla = suite.trainer;
    vanilla.method = Method::Vanilla;
    const SuiteMeans v = suite_means(suite, vanilla, suite.seeds);
    const SuiteMeans a = suite_means(suite, suite.trainer, suite.seeds);
    const bool pass = v.bwt <= -10.0 && a.bwt >= v.bwt + 5.0 && a.acc >= v.acc + 5.0;
    return {pass, fmt("Vanilla ACC %.2f BWT %.2f; AdNS ACC %.2f BWT %.2f (need Vanilla BWT <= -10, gaps >= 5)",
                      v.acc, v.bwt, a.acc, a.bwt)};
}

Outcome low_rank_vs_random() {
    const ExperimentConfig suite = standard_suite_config();
    const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    TrainerConfig random = suite.trainer;
    random.method = Method::AdNSRandomMerge;
    const SuiteMeans a = suite_means(suite, suite.trainer, seeds);
    const SuiteMeans r = suite_means(suite, random, seeds);
    return {a.bwt >= r.bwt, fmt("mean BWT over 5 seeds: low-rank merge %.2f, random merge %.2f", a.bwt, r.bwt)};
}

Outcome k0_trend() {
    const SweepSummary s = suite_sweep(standard_suite_config(), "k0", {"0.2", "0.5", "0.9"});
    return {s.la_trend->holds && s.bwt_trend->holds, sweep_detail(s)};
}

Outcome alpha_trend() {
    std::vector<std::string> levels;
    for (double a : standard_suite_alpha_levels()) levels.push_back(fmt("%g", a));
    const SweepSummary s = suite_sweep(standard_suite_config(), "alpha", levels);
    return {s.la_trend->holds && s.bwt_trend->holds, sweep_detail(s)};
}

Outcome distillation_benefit() {
    const ExperimentConfig suite = standard_suite_config();
    const double base = suite_means(suite, suite.trainer, suite.seeds).la;
    double best = -1e300, best_beta = 0.0;
    std::string each;
    for (double beta : {0.5, 1.0, 2.0}) {
        TrainerConfig t = suite.trainer;
        t.beta = beta;
        const double la = suite_means(suite, t, suite.seeds).la;
        each += fmt(" %.2f", la);
        if (la > best) best = la, best_beta = beta;
    }
    return {best >= base - 0.3, fmt("LA beta=0 %.2f; beta {0.5, 1, 2}:%s; best %.2f at beta %g (need >= %.2f)", base,
                                    each.c_str(), best, best_beta, base - 0.3)};
}

Outcome metric_formulas() {
    std::mt19937_64 rng(99);
    double worst = 0.0;
    for (int m = 0; m < 100; ++m) {
        const auto rows = random_triangle(2 + m % 9, rng);
        const AccuracyMatrix a = to_matrix(rows);
        worst = std::max({worst, std::abs(acc(a) - oracle_acc(rows)), std::abs(bwt(a) - oracle_bwt(rows)),
                          std::abs(la(a) - oracle_la(rows))});
    }
    TempDir dir("acceptance");
    ExperimentConfig c = parse_config_text(R"({"stream": {"tasks": 3, "dim": 8, "samples_per_class": 40},
        "trainer": {"epochs": 2, "beta": 0.5, "model": {"hidden": [8]}}, "seeds": [3]})");
    bool identical = true;
    for (ResultFormat f : {ResultFormat::Csv, ResultFormat::Json}) {
        std::string first;
        for (int rep = 0; rep < 2; ++rep) {
            c.output = {dir.file("r" + std::to_string(rep)), f};
            std::ostringstream out, err;
            if (cmd_run(c, {}, out, err) != kExitOk) return {false, "run failed: " + err.str()};
            const std::string text = read_text_file(c.output.path);
            if (rep == 0) first = text;
            else identical = identical && text == first;
        }
    }
    return {worst <= 1e-12 && identical,
            fmt("max |metric - oracle| %.3g over 100 matrices (limit 1e-12); repeated runs %s", worst,
                identical ? "byte-identical (csv, json)" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
    configure_logging(LogLevel::Error);
    const std::vector<Criterion> criteria{
        {1, "null-space exactness", 5, null_space_exactness},
        {2, "Eckart-Young truncation", 10, eckart_young},
        {3, "gradient check", 30, gradient_check},
        {4, "plasticity and stability bounds", 60, bound_verification},
        {5, "forgetting direction", 300, forgetting_direction},
        {6, "low-rank vs random merge", 600, low_rank_vs_random},
        {7, "k0 trend", 900, k0_trend},
        {8, "alpha trend", 900, alpha_trend},
        {9, "distillation benefit", 900, distillation_benefit},
        {10, "metric formulas and determinism", 5, metric_formulas},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.check();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs < c.budget_seconds;
        const bool pass = o.pass && in_time;
        if (!pass) ++failures;
        std::printf("[%s] %2d %s: %s (%.2f s of %.0f s)\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    o.detail.c_str(), secs, c.budget_seconds);
        std::fflush(stdout);
    }
    std::printf("%s: %d failed\n", failures == 0 ? "acceptance PASS" : "acceptance FAIL", failures);
    return failures == 0 ? 0 : 1;
}
