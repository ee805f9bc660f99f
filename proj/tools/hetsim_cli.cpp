#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hetsim/config.hpp"
#include "hetsim/dataset.hpp"
#include "hetsim/optimizer.hpp"
#include "hetsim/rng.hpp"
#include "hetsim/simulator.hpp"
#include "hetsim/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int cmd_ingest(const std::string& table_path, const std::string& out_path) {
    const hetsim::GroundTruth gt = hetsim::load_table(table_path);
    std::cout << "accelerator types: " << gt.accelerators().size() << "\n";
    for (const auto& a : gt.accelerators()) std::cout << "  " << a.acc_id << "\n";
    std::cout << "jobs: " << gt.jobs().size() << "\n";
    std::map<std::string, std::set<int>> batches;
    for (const auto& j : gt.jobs()) batches[j.model_family].insert(j.batch_size);
    for (const auto& [family, set] : batches) {
        std::cout << "  " << family << " batches:";
        for (int b : set) std::cout << ' ' << b;
        std::cout << "\n";
    }
    std::cout << "normalizer: " << gt.normalizer() << " iterations/s\n";
    size_t pairs = 0;
    for (const auto& c : gt.combinations())
        if (!c.is_solo()) ++pairs;
    std::cout << "solo entries: " << gt.accelerators().size() * gt.jobs().size() << ", paired combinations: " << pairs
              << "\n";
    if (!out_path.empty()) {
        hetsim::save_table(gt, out_path);
        std::cout << "wrote normalized table to " << out_path << "\n";
    }
    return 0;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
}

json report_json(const hetsim::TrainReport& r) {
    return {{"epochs_run", r.epochs_run},
            {"final_train_loss", r.final_train_loss},
            {"final_val_loss", r.final_val_loss},
            {"final_train_mae", r.final_train_mae},
            {"final_val_mae", r.final_val_mae}};
}

int cmd_train(const hetsim::Config& cfg) {
    const hetsim::GroundTruth gt = hetsim::config_ground_truth(cfg);
    const hetsim::JobSplit split =
        hetsim::split_jobs(gt, cfg.models.train_frac, cfg.models.val_frac, hetsim::derive_seed(cfg.seed, "split"));
    std::cout << "jobs: " << gt.jobs().size() << " (train " << split.train.size() << ", val " << split.val.size()
              << ", test " << split.test.size() << ")\n";

    hetsim::TrainedModels models = hetsim::train_models(gt, cfg.models, split, cfg.seed);
    std::cout << "p1: epochs " << models.p1_report.epochs_run << ", train mae " << models.p1_report.final_train_mae
              << ", val mae " << models.p1_report.final_val_mae << "\n";
    std::cout << "p2: epochs " << models.p2_report.epochs_run << ", train mae " << models.p2_report.final_train_mae
              << ", val mae " << models.p2_report.final_val_mae << "\n";

    const auto p1_test = hetsim::p1_holdout_samples(gt, split.test, split.train, cfg.models.p1_neighbors);
    const double p1_test_mae = hetsim::prediction_mae(models.p1, p1_test);
    hetsim::P2BuildOptions p2_test_opts;
    p2_test_opts.pool_jobs.insert(p2_test_opts.pool_jobs.end(), split.train.begin(), split.train.end());
    p2_test_opts.pool_jobs.insert(p2_test_opts.pool_jobs.end(), split.test.begin(), split.test.end());
    p2_test_opts.require_member = split.test;
    const auto p2_test = hetsim::build_p2_samples(gt, cfg.models.p2_noise_sigma,
                                                  hetsim::derive_seed(cfg.seed, "p2-test"), p2_test_opts);
    const double p2_test_mae = hetsim::prediction_mae(models.p2, p2_test);
    std::cout << "p1 held-out mae: " << p1_test_mae << " over " << p1_test.size() << " samples\n";
    std::cout << "p2 held-out mae: " << p2_test_mae << " over " << p2_test.size() << " samples\n";

    ensure_dir(cfg.output_dir);
    const std::string p1_path = cfg.output_dir + "/p1.model";
    const std::string p2_path = cfg.output_dir + "/p2.model";
    models.p1.save(p1_path);
    models.p2.save(p2_path);
    json rep;
    rep["p1"] = report_json(models.p1_report);
    rep["p2"] = report_json(models.p2_report);
    rep["p1_holdout_mae"] = p1_test_mae;
    rep["p2_holdout_mae"] = p2_test_mae;
    rep["split"] = {{"train", split.train}, {"val", split.val}, {"test", split.test}};
    std::ofstream out(cfg.output_dir + "/train_report.json", std::ios::binary);
    out << rep.dump(2) << "\n";
    std::cout << "wrote " << p1_path << ", " << p2_path << ", " << cfg.output_dir << "/train_report.json\n";
    return 0;
}

int cmd_solve(const std::string& instance_path, double time_limit) {
    const hetsim::AllocationInstance instance = hetsim::load_instance(instance_path);
    hetsim::SolveLimits limits;
    limits.time_limit_seconds = time_limit;
    const hetsim::Allocation alloc = hetsim::solve(instance, limits);
    switch (alloc.status) {
        case hetsim::SolveStatus::Optimal:
            std::cout << "status: optimal\n";
            break;
        case hetsim::SolveStatus::Infeasible:
            std::cout << "status: infeasible\n";
            return 0;
        case hetsim::SolveStatus::Gap:
            std::cout << "status: gap (lower bound " << alloc.lower_bound << ")\n";
            break;
    }
    std::cout << "objective: " << alloc.objective_watts << " W\n";
    for (const auto& p : alloc.assignments)
        std::cout << "  " << p.acc_id << " @ " << p.server << " <- " << p.combo.str() << "\n";
    for (const auto& [job, t] : alloc.per_job_throughput)
        std::cout << "  throughput " << job << ": " << t << "\n";
    const auto violations = hetsim::validate(instance, alloc);
    if (violations.empty()) {
        std::cout << "validation: ok\n";
    } else {
        for (const auto& v : violations) std::cout << "violation (" << v.constraint << "): " << v.detail << "\n";
        return 1;
    }
    return 0;
}

hetsim::TrainedModels simulate_models(const hetsim::Config& cfg, const hetsim::GroundTruth& gt,
                                      const hetsim::Scenario& scenario) {
    if (cfg.models.p1_path && cfg.models.p2_path) {
        hetsim::TrainedModels m{hetsim::Regressor::load(*cfg.models.p1_path),
                                hetsim::Regressor::load(*cfg.models.p2_path),
                                {},
                                {}};
        return m;
    }
    // train on the bootstrap history, holding a slice out for early stopping
    std::vector<std::string> boot = scenario.bootstrap_jobs;
    if (boot.size() < 3) throw std::runtime_error("learned estimator needs at least 3 bootstrap jobs to train on");
    hetsim::Rng rng(cfg.seed, "bootstrap-train-split");
    rng.shuffle(boot);
    const size_t n_val = std::max<size_t>(1, boot.size() / 5);
    hetsim::JobSplit split;
    split.val.assign(boot.begin(), boot.begin() + n_val);
    split.train.assign(boot.begin() + n_val, boot.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    return hetsim::train_models(gt, cfg.models, split, cfg.seed);
}

int cmd_simulate(const hetsim::Config& cfg) {
    const hetsim::GroundTruth gt = hetsim::config_ground_truth(cfg);
    const hetsim::Scenario scenario = hetsim::config_scenario(cfg, gt);
    std::cout << "scenario: " << scenario.arrivals.size() << " arrivals, " << scenario.bootstrap_jobs.size()
              << " bootstrap jobs, " << scenario.rounds << " rounds, "
              << (scenario.estimator == hetsim::EstimatorKind::Oracle ? "oracle" : "learned") << " estimator\n";

    hetsim::RunResult result;
    if (scenario.estimator == hetsim::EstimatorKind::Learned) {
        const hetsim::TrainedModels models = simulate_models(cfg, gt, scenario);
        result = hetsim::run(scenario, &models.p1, &models.p2, cfg.seed);
    } else {
        result = hetsim::run(scenario, nullptr, nullptr, cfg.seed);
    }

    ensure_dir(cfg.output_dir);
    hetsim::write_trace(result.traces, cfg.output_dir + "/trace.jsonl");
    hetsim::write_summary(result.summary, cfg.output_dir + "/summary.json");
    std::cout << "rounds: " << result.summary.rounds << "\n";
    std::cout << "energy: " << result.summary.energy_watt_rounds << " watt-rounds\n";
    std::cout << "sla violation rate: " << result.summary.sla_violation_rate << " (" << result.summary.sla_violations
              << "/" << result.summary.job_rounds << " job-rounds)\n";
    std::cout << "final estimate mae: " << result.summary.final_estimate_mae << "\n";
    std::cout << "solver: " << result.summary.solver_nodes_total << " nodes total, mean "
              << result.summary.solver_ms_mean << " ms, max " << result.summary.solver_ms_max << " ms\n";
    std::cout << "wrote " << cfg.output_dir << "/trace.jsonl and " << cfg.output_dir << "/summary.json\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& trace_paths, const std::string& out_path) {
    std::vector<std::pair<std::string, json>> rows;
    for (const auto& path : trace_paths) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open trace '" + path + "'");
        double energy = 0.0, final_mae = 0.0;
        int rounds = 0, violations = 0, job_rounds = 0, infeasible = 0;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json rec;
            try {
                rec = json::parse(line);
            } catch (const json::parse_error& e) {
                throw std::runtime_error(path + ": line " + std::to_string(rounds + 1) + ": " + e.what());
            }
            ++rounds;
            const auto& m = rec.at("metrics");
            energy += m.at("watts").get<double>();
            violations += m.at("sla_violations").get<int>();
            job_rounds += m.at("active_jobs").get<int>();
            final_mae = m.at("estimate_mae").get<double>();
            if (rec.value("infeasible", false)) ++infeasible;
        }
        if (rounds == 0) throw std::runtime_error(path + ": empty trace");
        json row;
        row["trace"] = path;
        row["rounds"] = rounds;
        row["energy_watt_rounds"] = energy;
        row["sla_violation_rate"] = job_rounds ? static_cast<double>(violations) / job_rounds : 0.0;
        row["final_estimate_mae"] = final_mae;
        row["infeasible_rounds"] = infeasible;
        rows.emplace_back(path, std::move(row));
    }

    std::cout << "trace\trounds\tenergy_watt_rounds\tsla_violation_rate\tfinal_estimate_mae\tinfeasible_rounds\n";
    for (const auto& [path, row] : rows)
        std::cout << path << '\t' << row.at("rounds").get<int>() << '\t' << row.at("energy_watt_rounds").get<double>()
                  << '\t' << row.at("sla_violation_rate").get<double>() << '\t'
                  << row.at("final_estimate_mae").get<double>() << '\t' << row.at("infeasible_rounds").get<int>()
                  << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open '" + out_path + "' for writing");
        for (const auto& [path, row] : rows) out << row.dump() << "\n";
        std::cout << "wrote " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heterogeneous GPU cluster orchestration simulator"};
    app.require_subcommand(1);

    std::string table_path, ingest_out;
    auto* ingest = app.add_subcommand("ingest", "parse, normalize and validate a throughput table");
    ingest->add_option("table", table_path, "CSV throughput table")->required();
    ingest->add_option("--out", ingest_out, "write the normalized table here");

    std::string config_path, out_dir;
    bool seed_set = false;
    uint64_t seed = 0;
    auto add_config_opts = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "experiment config file")->required();
        cmd->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--out", out_dir, "override the config output directory");
    };
    auto* train = app.add_subcommand("train", "build samples and train the P1/P2 estimators");
    add_config_opts(train);
    auto* simulate = app.add_subcommand("simulate", "run the closed orchestration loop");
    add_config_opts(simulate);

    std::string instance_path;
    double time_limit = 60.0;
    auto* solve_cmd = app.add_subcommand("solve", "solve a standalone allocation instance");
    solve_cmd->add_option("instance", instance_path, "instance JSON file")->required();
    solve_cmd->add_option("--time-limit", time_limit, "solver wall-clock limit in seconds");

    std::vector<std::string> trace_paths;
    std::string report_out;
    auto* report = app.add_subcommand("report", "aggregate simulation traces into a comparison table");
    report->add_option("traces", trace_paths, "trace.jsonl files")->required()->expected(-1);
    report->add_option("--out", report_out, "also write machine-readable records here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(ingest)) return cmd_ingest(table_path, ingest_out);
        if (app.got_subcommand(solve_cmd)) return cmd_solve(instance_path, time_limit);
        if (app.got_subcommand(report)) return cmd_report(trace_paths, report_out);

        hetsim::Config cfg = hetsim::load_config(config_path);
        if (seed_set) cfg.seed = seed;
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (app.got_subcommand(train)) return cmd_train(cfg);
        if (app.got_subcommand(simulate)) return cmd_simulate(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
