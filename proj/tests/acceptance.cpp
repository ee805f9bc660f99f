// Acceptance suite: runs every release criterion end to end and prints one
// pass/fail line per criterion. Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <sys/wait.h>

#include "hetsim/catalog.hpp"
#include "hetsim/dataset.hpp"
#include "hetsim/estimation.hpp"
#include "hetsim/optimizer.hpp"
#include "hetsim/regressor.hpp"
#include "hetsim/rng.hpp"
#include "hetsim/simulator.hpp"
#include "hetsim/training.hpp"
#include "support.hpp"

using namespace hetsim;
using hetsim::testing::TempDir;

namespace {

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << name;
    if (!detail.empty()) std::cout << " -- " << detail;
    std::cout << std::endl;
    if (!pass) ++g_failures;
}

template <typename Fn>
void criterion(int id, const std::string& name, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        report(id, name, false, std::string("exception: ") + e.what());
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct CliResult {
    int exit_code;
    std::string output;
};

CliResult run_cli(const std::string& args, const TempDir& tmp, const std::string& tag) {
    const char* bin = std::getenv("HETSIM_CLI_BIN");
    if (!bin) throw std::runtime_error("HETSIM_CLI_BIN is not set; run through ctest");
    const std::string log = tmp.file("cli-" + tag + ".log");
    const std::string cmd = std::string(bin) + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code, slurp(log)};
}

// the quantitative synthetic scenario: three accelerator speed classes,
// four families with four batch sizes, moderate interference
GroundTruth quantitative_table() {
    SyntheticSpec spec;
    spec.accelerators = 3;
    spec.families = 4;
    spec.batches_per_family = 4;
    spec.interference = 0.3;
    spec.seed = 4242;
    return generate_synthetic(spec);
}

double estimate_only_mae(const Catalog& catalog, const GroundTruth& gt) {
    double ae = 0.0;
    int n = 0;
    for (const EstimateRecord* rec : catalog.records()) {
        if (rec->measurement) continue;
        const auto truth = gt.value_opt(rec->acc_id, rec->job_id, rec->combo);
        if (!truth) continue;
        ae += std::abs(catalog.lookup(rec->acc_id, rec->job_id, rec->combo) - *truth);
        ++n;
    }
    return n ? ae / n : 0.0;
}

void criterion_1_solver_oracle() {
    Rng rng(987654321);
    const auto t0 = std::chrono::steady_clock::now();
    int optimal = 0, infeasible = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const AllocationInstance inst = hetsim::testing::random_small_instance(rng);
        const Allocation got = solve(inst);
        const Allocation oracle = brute_force(inst);
        if (got.status != oracle.status)
            throw std::runtime_error("status mismatch on trial " + std::to_string(trial));
        if (got.status == SolveStatus::Optimal) {
            ++optimal;
            if (got.objective_watts != oracle.objective_watts)
                throw std::runtime_error("objective mismatch on trial " + std::to_string(trial));
            if (!validate(inst, got).empty())
                throw std::runtime_error("optimal result fails validation on trial " + std::to_string(trial));
        } else {
            ++infeasible;
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(1, "solver-oracle equivalence on 500 random instances", secs < 10.0,
           std::to_string(optimal) + " optimal / " + std::to_string(infeasible) + " infeasible in " +
               std::to_string(secs) + " s");
}

void criterion_2_worked_example() {
    const AllocationInstance inst = hetsim::testing::worked_example(0.3);
    const Allocation got = solve(inst);
    const bool exact = got.status == SolveStatus::Optimal && got.objective_watts == 100.0;
    const Allocation impossible = solve(hetsim::testing::worked_example(0.9));
    const bool infeasible = impossible.status == SolveStatus::Infeasible;
    report(2, "worked example yields 100 W exactly and the tight variant is infeasible", exact && infeasible,
           "objective " + std::to_string(got.objective_watts));
}

void criterion_3_gradients() {
    Rng rng(13579);
    double worst = 0.0;
    for (int draw = 0; draw < 50; ++draw) {
        std::vector<int> sizes = {rng.int_in(2, 8), rng.int_in(2, 16), rng.int_in(1, 4)};
        if (rng.next_double() < 0.5) sizes.insert(sizes.begin() + 1, rng.int_in(2, 12));
        const Regressor model(sizes, rng.next_u64());
        Sample s;
        for (int i = 0; i < sizes.front(); ++i) s.input.push_back(rng.uniform(-1.0, 1.0));
        for (int i = 0; i < sizes.back(); ++i) s.target.push_back(rng.uniform(0.0, 1.0));
        worst = std::max(worst, model.gradient_check(s, 1e-5));
    }
    report(3, "analytic gradients within 1e-4 of finite differences on 50 draws", worst < 1e-4,
           "worst relative deviation " + std::to_string(worst));
}

void criterion_4_p1_learnability(const GroundTruth& gt, TrainedModels& out_models, JobSplit& out_split) {
    const JobSplit split = split_jobs(gt, 0.70, 0.15, 4242);
    ModelConfig mc;  // defaults: 64x64, lr 0.05, 400 epochs, patience 40
    const auto t0 = std::chrono::steady_clock::now();
    TrainedModels models = train_models(gt, mc, split, 4242);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto holdout = p1_holdout_samples(gt, split.test, split.train, mc.p1_neighbors);
    const double mae = prediction_mae(models.p1, holdout);
    report(4, "P1 held-out MAE at most 0.10 within two minutes of training", mae <= 0.10 && secs < 120.0,
           "mae " + std::to_string(mae) + " over " + std::to_string(holdout.size()) + " samples, trained in " +
               std::to_string(secs) + " s");
    out_models = std::move(models);
    out_split = split;
}

void criterion_5_refinement_improves(const GroundTruth& gt) {
    int improved = 0;
    std::vector<std::string> acc_ids;
    for (const auto& a : gt.accelerators()) acc_ids.push_back(a.acc_id);

    for (uint64_t seed = 0; seed < 20; ++seed) {
        const JobSplit split = split_jobs(gt, 0.70, 0.15, 1000 + seed);
        ModelConfig mc;
        mc.hidden = {32, 32};
        mc.epochs = 150;
        mc.patience = 25;
        const TrainedModels models = train_models(gt, mc, split, 1000 + seed);

        Catalog catalog(gt.schema(), gt.accelerators());
        std::vector<std::string> history = split.train;
        history.insert(history.end(), split.val.begin(), split.val.end());
        for (const auto& id : history) catalog.register_job(gt.job(id));
        for (const auto& id : history) {
            for (const auto& a : acc_ids)
                catalog.record_measurement(a, id, Combination::solo(id), gt.value(a, id, Combination::solo(id)));
        }
        for (const auto& id : split.test) {
            catalog.register_job(gt.job(id));
            estimate_initial(models.p1, catalog, gt.job(id), {});
        }
        const double p1_only = estimate_only_mae(catalog, gt);

        // one refinement round: measure each new job's solo on the first
        // accelerator, propagate everywhere else
        for (const auto& id : split.test) {
            const Combination solo = Combination::solo(id);
            RefineInput in{acc_ids.front(), solo, {{id, gt.value(acc_ids.front(), id, solo)}}};
            refine(models.p2, catalog, in, acc_ids);
        }
        const double refined = estimate_only_mae(catalog, gt);
        if (refined < p1_only) ++improved;
    }
    report(5, "one refinement round lowers estimate MAE in at least 18 of 20 seeds", improved >= 18,
           std::to_string(improved) + "/20 seeds improved");
}

Scenario closed_loop_scenario(const GroundTruth& gt, EstimatorKind kind) {
    Scenario sc;
    sc.ground_truth = gt;
    sc.servers = {"server0", "server1"};        // 2 servers x 6 types = 12 accelerators
    sc.accelerators = gt.accelerators();
    sc.estimator = kind;
    sc.noise_sigma = 0.0;
    sc.sla.min_throughput_factor = 0.75;
    sc.sla.distributability = 1;
    std::vector<std::string> jobs;
    for (const auto& j : gt.jobs()) jobs.push_back(j.job_id);
    Rng rng(606, "scenario-order");
    rng.shuffle(jobs);
    sc.bootstrap_jobs.assign(jobs.begin(), jobs.begin() + 6);
    std::sort(sc.bootstrap_jobs.begin(), sc.bootstrap_jobs.end());
    sc.arrivals.assign(jobs.begin() + 6, jobs.begin() + 16);
    sc.rounds = 14;
    return sc;
}

void criterion_6_closed_loop_sla() {
    SyntheticSpec spec;
    spec.accelerators = 6;
    spec.families = 4;
    spec.batches_per_family = 4;
    spec.interference = 0.3;
    spec.seed = 606;
    const GroundTruth gt = generate_synthetic(spec);

    const Scenario oracle_sc = closed_loop_scenario(gt, EstimatorKind::Oracle);
    const RunResult oracle = run(oracle_sc, nullptr, nullptr, 606);
    const bool oracle_clean = oracle.summary.sla_violations == 0 && oracle.summary.infeasible_rounds == 0;

    const Scenario learned_sc = closed_loop_scenario(gt, EstimatorKind::Learned);
    JobSplit split;
    split.train.assign(learned_sc.bootstrap_jobs.begin(), learned_sc.bootstrap_jobs.end() - 1);
    split.val.assign(learned_sc.bootstrap_jobs.end() - 1, learned_sc.bootstrap_jobs.end());
    ModelConfig mc;
    mc.hidden = {64, 64};
    mc.epochs = 300;
    mc.patience = 40;
    const TrainedModels models = train_models(gt, mc, split, 606);
    const RunResult learned = run(learned_sc, &models.p1, &models.p2, 606);

    report(6, "closed loop: oracle has zero SLA violations, learned stays at or under 10%",
           oracle_clean && learned.summary.sla_violation_rate <= 0.10,
           "oracle " + std::to_string(oracle.summary.sla_violations) + " violations, learned rate " +
               std::to_string(learned.summary.sla_violation_rate) + " (" +
               std::to_string(learned.summary.sla_violations) + "/" + std::to_string(learned.summary.job_rounds) +
               ")");
}

void criterion_7_determinism() {
    TempDir tmp;
    const std::string config = R"({
  "seed": 17,
  "output_dir": "unused",
  "dataset": {"synthetic": {"accelerators": 3, "families": 4, "batches_per_family": 2,
                             "interference": 0.3, "seed": 9}},
  "cluster": {"servers": 2},
  "models": {"hidden": [16, 16], "epochs": 80, "patience": 20},
  "scenario": {"bootstrap_fraction": 0.5, "arrival_count": 3, "noise_sigma": 0.05,
                "rounds": 5, "sla_min_throughput_factor": 0.5, "estimator": "learned"}
})";
    const std::string cfg_path = tmp.write("config.json", config);
    const auto r1 = run_cli("simulate --config " + cfg_path + " --out " + tmp.file("run1"), tmp, "sim1");
    const auto r2 = run_cli("simulate --config " + cfg_path + " --out " + tmp.file("run2"), tmp, "sim2");
    if (r1.exit_code != 0 || r2.exit_code != 0)
        throw std::runtime_error("simulate exited nonzero:\n" + r1.output + r2.output);
    const std::string t1 = slurp(tmp.file("run1") + "/trace.jsonl");
    const std::string t2 = slurp(tmp.file("run2") + "/trace.jsonl");
    const std::string s1 = slurp(tmp.file("run1") + "/summary.json");
    const std::string s2 = slurp(tmp.file("run2") + "/summary.json");
    report(7, "repeated simulate runs produce byte-identical artifacts",
           !t1.empty() && t1 == t2 && !s1.empty() && s1 == s2,
           std::to_string(t1.size()) + " trace bytes compared");
}

void criterion_8_ingestion() {
    TempDir tmp;
    const std::string table = tmp.write("gavel.csv", hetsim::testing::gavel_style_csv());
    const GroundTruth gt = load_table(table);
    bool ok = gt.accelerators().size() == 6;
    const std::set<std::string> expected_names = {"k80",  "k80_unconsolidated",  "p100",
                                                  "p100_unconsolidated", "v100", "v100_unconsolidated"};
    std::set<std::string> got;
    for (const auto& a : gt.accelerators()) got.insert(a.acc_id);
    ok = ok && got == expected_names;

    std::map<std::string, std::set<int>> batches;
    for (const auto& j : gt.jobs()) batches[j.model_family].insert(j.batch_size);
    ok = ok && batches["resnet18"] == std::set<int>{16, 32, 64, 128, 256};
    ok = ok && batches["resnet50"] == std::set<int>{16, 32, 64, 128, 256};
    ok = ok && batches["transformer"] == std::set<int>{16, 32, 128, 256};
    ok = ok && batches["lm"] == std::set<int>{5, 10, 20, 80};
    ok = ok && batches["recommendation"] == std::set<int>{512, 1024, 2048, 8192};

    // malformed rows are rejected with their line number
    const std::string bad = tmp.write("bad.csv",
                                      "model,batch_size,accelerator,co_model,co_batch_size,throughput_self,"
                                      "throughput_other\nresnet18,16,k80,,,1.0,\nresnet18,-3,k80,,,1.0,\n");
    bool rejected = false;
    try {
        load_table(bad);
    } catch (const std::exception& e) {
        rejected = std::string(e.what()).find("line 3") != std::string::npos;
    }

    const auto cli_ok = run_cli("ingest " + table, tmp, "ingest-ok");
    const auto cli_bad = run_cli("ingest " + tmp.file("bad.csv"), tmp, "ingest-bad");
    const bool cli = cli_ok.exit_code == 0 && cli_ok.output.find("accelerator types: 6") != std::string::npos &&
                     cli_bad.exit_code != 0 && cli_bad.output.find("line 3") != std::string::npos;

    report(8, "Gavel-style ingestion: six accelerator types, production batch sets, line-numbered rejects",
           ok && rejected && cli, "");
}

void criterion_9_lookup_exactness() {
    TempDir tmp;
    const GroundTruth gt = load_table(tmp.write("gavel.csv", hetsim::testing::gavel_style_csv()));
    Catalog base(gt.schema(), gt.accelerators());
    for (const auto& j : gt.jobs()) base.register_job(j);

    Rng rng(24680);
    bool ok = true;
    for (int trial = 0; trial < 500 && ok; ++trial) {
        Catalog c = base;
        const auto& acc = gt.accelerators()[rng.below(gt.accelerators().size())].acc_id;
        const auto& job = gt.jobs()[rng.below(gt.jobs().size())].job_id;
        const Combination combo = Combination::solo(job);
        const int n = rng.int_in(1, 16);
        std::vector<double> values;
        for (int i = 0; i < n; ++i) {
            values.push_back(rng.uniform(0.0, 1.0));
            c.put_estimate(acc, job, combo, values.back());
        }
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
        const double got = c.lookup(acc, job, combo);
        const double ulp = std::abs(std::nextafter(mean, 2.0) - mean);
        ok = ok && std::abs(got - mean) <= ulp;

        // measurement precedence: once measured, later estimates are inert
        const double measured = rng.uniform(0.0, 1.0);
        c.record_measurement(acc, job, combo, measured);
        ok = ok && c.lookup(acc, job, combo) == measured;
        for (int i = 0; i < 5; ++i) {
            c.put_estimate(acc, job, combo, rng.uniform(0.0, 1.0));
            ok = ok && c.lookup(acc, job, combo) == measured;
        }
    }
    report(9, "refinement-set lookup equals the arithmetic mean; measurements take precedence", ok, "");
}

}  // namespace

int main() {
    criterion(1, "solver-oracle equivalence", [] { criterion_1_solver_oracle(); });
    criterion(2, "optimizer worked example", [] { criterion_2_worked_example(); });
    criterion(3, "gradient correctness", [] { criterion_3_gradients(); });

    const GroundTruth gt = quantitative_table();
    TrainedModels models{Regressor({1, 1}, 0), Regressor({1, 1}, 0), {}, {}};
    JobSplit split;
    criterion(4, "P1 learnability", [&] { criterion_4_p1_learnability(gt, models, split); });
    criterion(5, "refinement improves estimates", [&] { criterion_5_refinement_improves(gt); });
    criterion(6, "closed-loop SLA", [] { criterion_6_closed_loop_sla(); });
    criterion(7, "simulate determinism", [] { criterion_7_determinism(); });
    criterion(8, "table ingestion", [] { criterion_8_ingestion(); });
    criterion(9, "lookup exactness", [] { criterion_9_lookup_exactness(); });

    std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criteria failed")
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
