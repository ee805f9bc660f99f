#pragma once

// Shared fixtures for the test suites.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "hetsim/dataset.hpp"
#include "hetsim/optimizer.hpp"
#include "hetsim/rng.hpp"

namespace hetsim::testing {

/// A table shaped like the public heterogeneous-throughput dataset: the six
/// GPU type names and the production workload grid (ResNet-18/50, a
/// Transformer, a language model, a recommender), solo rows everywhere and
/// co-location rows among a handful of jobs. Values are synthetic but obey
/// paired <= solo.
inline std::string gavel_style_csv() {
    const std::vector<std::string> accs = {"k80",      "k80_unconsolidated", "p100",
                                           "p100_unconsolidated", "v100",   "v100_unconsolidated"};
    const std::vector<double> speed = {1.0, 0.8, 2.2, 1.9, 4.5, 4.0};
    struct Family {
        const char* name;
        std::vector<int> batches;
        double base;
    };
    const std::vector<Family> families = {{"resnet18", {16, 32, 64, 128, 256}, 40.0},
                                          {"resnet50", {16, 32, 64, 128, 256}, 18.0},
                                          {"transformer", {16, 32, 128, 256}, 11.0},
                                          {"lm", {5, 10, 20, 80}, 9.0},
                                          {"recommendation", {512, 1024, 2048, 8192}, 60.0}};
    std::ostringstream out;
    out << "model,batch_size,accelerator,co_model,co_batch_size,throughput_self,throughput_other\n";
    struct Job {
        std::string family;
        int batch;
        double solo_base;
    };
    std::vector<Job> jobs;
    for (const auto& f : families) {
        int k = 0;
        for (int b : f.batches) jobs.push_back({f.name, b, f.base / (1.0 + 0.5 * k++)});
    }
    for (size_t a = 0; a < accs.size(); ++a)
        for (const auto& j : jobs)
            out << j.family << ',' << j.batch << ',' << accs[a] << ",,," << j.solo_base * speed[a] << ",\n";
    // co-location rows for the first four jobs on every accelerator
    for (size_t a = 0; a < accs.size(); ++a) {
        for (size_t i = 0; i < 4; ++i) {
            for (size_t l = i + 1; l < 4; ++l) {
                const double keep = 0.75;
                out << jobs[i].family << ',' << jobs[i].batch << ',' << accs[a] << ',' << jobs[l].family << ','
                    << jobs[l].batch << ',' << jobs[i].solo_base * speed[a] * keep << ','
                    << jobs[l].solo_base * speed[a] * keep << "\n";
            }
        }
    }
    return out.str();
}

class TempDir {
  public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("hetsim-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    std::string write(const std::string& name, const std::string& content) const {
        const std::string p = file(name);
        std::ofstream out(p, std::ios::binary);
        out << content;
        return p;
    }

  private:
    std::filesystem::path path_;
};

/// The single-job worked example: one server, one accelerator type with
/// idle 50 W and 100 W per unit load, solo throughput 0.5.
inline AllocationInstance worked_example(double min_throughput = 0.3) {
    AllocationInstance inst;
    inst.servers = {"s0"};
    AcceleratorType acc;
    acc.acc_id = "gpu";
    acc.name = "gpu";
    acc.capacity = 2;
    acc.power_idle = 50.0;
    acc.power_per_unit_load = 100.0;
    inst.acc_types = {acc};
    JobSpec job;
    job.job_id = "job1";
    job.model_family = "fam";
    job.batch_size = 16;
    job.min_throughput = min_throughput;
    job.distributability = 1;
    inst.jobs = {job};
    inst.combos = all_combinations(inst.jobs);
    inst.throughput[{"gpu", "job1", Combination::solo("job1")}] = 0.5;
    return inst;
}

/// Random instance inside the brute-force bound: up to 4 accelerator slots
/// and up to 4 jobs, complete throughput map, occasional tight SLAs so both
/// feasible and infeasible instances occur.
inline AllocationInstance random_small_instance(Rng& rng) {
    AllocationInstance inst;
    const int n_servers = rng.int_in(1, 2);
    const int n_types = rng.int_in(1, 4 / n_servers);
    const int n_jobs = rng.int_in(1, 4);
    for (int s = 0; s < n_servers; ++s) inst.servers.push_back("s" + std::to_string(s));
    for (int a = 0; a < n_types; ++a) {
        AcceleratorType acc;
        acc.acc_id = "g" + std::to_string(a);
        acc.name = acc.acc_id;
        acc.capacity = rng.int_in(1, 2);
        acc.power_idle = rng.uniform(10.0, 80.0);
        acc.power_per_unit_load = rng.uniform(20.0, 200.0);
        inst.acc_types.push_back(acc);
    }
    for (int j = 0; j < n_jobs; ++j) {
        JobSpec job;
        job.job_id = "j" + std::to_string(j);
        job.model_family = "fam";
        job.batch_size = 16;
        job.min_throughput = rng.uniform(0.05, 0.9);
        job.distributability = rng.int_in(1, 2);
        inst.jobs.push_back(job);
    }
    inst.combos = all_combinations(inst.jobs);
    for (const auto& acc : inst.acc_types) {
        for (const auto& combo : inst.combos) {
            const double degrade = combo.is_solo() ? 1.0 : rng.uniform(0.5, 0.95);
            for (const auto& m : combo.members())
                inst.throughput[{acc.acc_id, m, combo}] = rng.uniform(0.05, 1.0) * degrade;
        }
    }
    return inst;
}

}  // namespace hetsim::testing
