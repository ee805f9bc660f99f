#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "hetsim/types.hpp"

namespace hetsim {

/// All size-1 and size-2 combinations of the given jobs, sorted.
std::vector<Combination> all_combinations(const std::vector<JobSpec>& jobs);

/// One allocation problem: a server grid (each server hosts one accelerator
/// of each listed type), the active jobs with their SLAs, the candidate
/// combinations, and the normalized throughput of every (type, job, combo).
struct AllocationInstance {
    std::vector<std::string> servers;
    std::vector<AcceleratorType> acc_types;
    std::vector<JobSpec> jobs;
    std::vector<Combination> combos;
    std::map<std::tuple<std::string, std::string, Combination>, double> throughput;

    double throughput_of(const std::string& acc_id, const std::string& job_id, const Combination& c) const;
};

struct Placement {
    std::string acc_id;
    std::string server;
    Combination combo;
    auto operator<=>(const Placement&) const = default;
};

enum class SolveStatus { Optimal, Infeasible, Gap };

struct Allocation {
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<Placement> assignments;  // sorted by (acc, server, combo)
    double objective_watts = 0.0;
    double lower_bound = 0.0;            // valid bound when status == Gap
    std::map<std::string, double> per_job_throughput;
    long nodes_explored = 0;
};

struct Violation {
    std::string constraint;  // "2b".."2g"
    std::string detail;
};

/// The instance lowered to binary placement variables in lexicographic
/// (accelerator, server, combination) order, each carrying its fixed power
/// weight idle + per_unit_load * combined load.
struct Ilp {
    AllocationInstance instance;

    struct Variable {
        int acc_index;
        int server_index;
        int combo_index;
        double weight;  // alpha_a + beta_a * sum of member throughputs
        double load;    // sum of member throughputs
    };
    std::vector<Variable> variables;
    // per (acc, combo): member throughputs aligned with combo members
    std::vector<std::vector<std::vector<double>>> member_throughput;  // [acc][combo][member]
};

/// Validates the instance and lowers it. Throws on missing throughput
/// entries, non-positive job throughput requirements, or bad capacities.
Ilp build(const AllocationInstance& instance);

struct SolveLimits {
    long max_nodes = 50'000'000;     // deterministic search budget
    double time_limit_seconds = 60;  // wall-clock guard
};

/// Exact depth-first branch and bound. Optimal within the node budget;
/// otherwise returns Gap carrying a valid lower bound and the incumbent.
/// Tie-break among equal-power optima: fewest placements, then the
/// lexicographically smallest assignment encoding.
Allocation solve(const Ilp& ilp, const SolveLimits& limits = {});
Allocation solve(const AllocationInstance& instance, const SolveLimits& limits = {});

/// Exhaustive oracle over all per-slot combo choices. Guarded to
/// |servers| x |acc types| <= 4 and |jobs| <= 4. Same tie-break as solve.
Allocation brute_force(const AllocationInstance& instance);

/// Empty iff the allocation satisfies constraints (2b)-(2g).
std::vector<Violation> validate(const AllocationInstance& instance, const Allocation& allocation);

/// Recomputes the affine power objective over the assignment, in canonical
/// placement order; equals Allocation::objective_watts exactly.
double power_of(const AllocationInstance& instance, const Allocation& allocation);

void save_instance(const AllocationInstance& instance, const std::string& path);
AllocationInstance load_instance(const std::string& path);

}  // namespace hetsim
