#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetsim/catalog.hpp"
#include "hetsim/dataset.hpp"
#include "hetsim/estimation.hpp"
#include "hetsim/optimizer.hpp"
#include "hetsim/regressor.hpp"

namespace hetsim {

enum class EstimatorKind { Learned, Oracle };

struct SlaPolicy {
    /// T-bar as a fraction of the job's worst solo throughput across the
    /// cluster accelerators.
    double min_throughput_factor = 0.5;
    int distributability = 1;
    /// Per-job explicit overrides: job id -> (min_throughput, distributability).
    std::map<std::string, std::pair<double, int>> overrides;
};

struct Scenario {
    GroundTruth ground_truth;
    std::vector<std::string> servers;
    std::vector<AcceleratorType> accelerators;  // subset of the table's types, power-configurable
    std::vector<std::string> bootstrap_jobs;    // pre-measured history, not scheduled
    std::vector<std::string> arrivals;          // arrival order of scheduled jobs
    double noise_sigma = 0.0;                   // multiplicative measurement noise
    int rounds = 0;
    SlaPolicy sla;
    EstimatorKind estimator = EstimatorKind::Learned;
};

struct MeasurementEntry {
    std::string acc_id;
    std::string job_id;
    Combination combo;
    double value = 0.0;
};

struct RoundMetrics {
    double estimate_mae = 0.0;  // catalog lookup vs ground truth, all known triples
    double watts = 0.0;
    int sla_violations = 0;
    int active_jobs = 0;
};

struct RoundTrace {
    int round = 0;
    std::string arrival;          // empty if no job arrived this round
    bool deferred_retry = false;  // this arrival was deferred from an earlier round
    bool infeasible = false;
    std::vector<InitialEstimate> estimates;
    Allocation allocation;
    std::vector<MeasurementEntry> measurements;
    std::vector<AppendedEstimate> refinements;
    RoundMetrics metrics;
};

struct RunSummary {
    int rounds = 0;
    double energy_watt_rounds = 0.0;
    int sla_violations = 0;
    int job_rounds = 0;
    double sla_violation_rate = 0.0;
    double final_estimate_mae = 0.0;
    std::vector<double> mae_per_round;
    int infeasible_rounds = 0;
    long solver_nodes_total = 0;
    long solver_nodes_max = 0;
    // wall-clock timing; reported on stdout, kept out of artifact files
    double solver_ms_mean = 0.0;
    double solver_ms_max = 0.0;
};

struct RunResult {
    std::vector<RoundTrace> traces;
    RunSummary summary;
};

/// Runs the closed loop: per round one arrival (or a deferred retry) is
/// estimated into the catalog, the allocation ILP is re-solved over all
/// active jobs, assigned combinations are measured against ground truth
/// under multiplicative noise, and measurements are propagated to the
/// non-hosting accelerator types. Deterministic given the seed.
RunResult run(const Scenario& scenario, const Regressor* p1, const Regressor* p2, uint64_t seed);

/// Recomputes the summary from traces alone.
RunSummary metrics(const std::vector<RoundTrace>& traces);

/// Allocation instance over the active jobs with throughputs taken from
/// catalog lookups.
AllocationInstance make_instance(const Catalog& catalog, const std::vector<std::string>& active_jobs,
                                 const std::vector<std::string>& servers,
                                 const std::vector<AcceleratorType>& accelerators);

/// Line-delimited trace records; one JSON object per round.
std::string trace_to_jsonl(const std::vector<RoundTrace>& traces);
/// Summary as a single JSON object. Volatile wall-clock fields are excluded
/// unless requested, so artifact files are reproducible byte for byte.
std::string summary_to_json(const RunSummary& summary, bool include_volatile = false);

void write_trace(const std::vector<RoundTrace>& traces, const std::string& path);
void write_summary(const RunSummary& summary, const std::string& path);

/// Runs each named scenario and serializes one comparison record per line.
std::string compare(const std::vector<std::pair<std::string, Scenario>>& scenarios, const Regressor* p1,
                    const Regressor* p2, uint64_t seed);

}  // namespace hetsim
