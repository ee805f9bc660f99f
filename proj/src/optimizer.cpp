#include "hetsim/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "json.hpp"

namespace hetsim {

namespace {

constexpr double kFeasEps = 1e-9;  // throughput satisfaction slack, shared with validate()
constexpr double kInf = std::numeric_limits<double>::infinity();

using Encoding = std::vector<std::tuple<int, int, int>>;  // (acc, server, combo) indices

// Canonical objective: weights summed in sorted (accelerator, combination)
// order. Server splits do not enter the key, so every materialization of the
// same placement multiset sums bit-identically.
double canonical_objective(const Encoding& encoding, const std::vector<std::vector<double>>& weight) {
    std::vector<std::pair<int, int>> keys;
    keys.reserve(encoding.size());
    for (const auto& [a, s, c] : encoding) keys.emplace_back(a, c);
    std::sort(keys.begin(), keys.end());
    double obj = 0.0;
    for (const auto& [a, c] : keys) obj += weight[static_cast<size_t>(a)][static_cast<size_t>(c)];
    return obj;
}

struct Candidate {
    double objective = kInf;
    Encoding encoding;
    bool valid = false;

    // (objective, placement count, lexicographic encoding)
    bool better_than(const Candidate& other) const {
        if (!other.valid) return valid;
        if (!valid) return false;
        if (objective != other.objective) return objective < other.objective;
        if (encoding.size() != other.encoding.size()) return encoding.size() < other.encoding.size();
        return encoding < other.encoding;
    }
};

Allocation finish_allocation(const Ilp& ilp, const Candidate& best, SolveStatus status, double lower_bound,
                             long nodes) {
    Allocation out;
    out.status = status;
    out.nodes_explored = nodes;
    out.lower_bound = lower_bound;
    if (!best.valid) return out;
    const auto& inst = ilp.instance;
    for (const auto& [a, s, c] : best.encoding)
        out.assignments.push_back({inst.acc_types[static_cast<size_t>(a)].acc_id,
                                   inst.servers[static_cast<size_t>(s)],
                                   inst.combos[static_cast<size_t>(c)]});
    out.objective_watts = best.objective;
    for (const auto& j : inst.jobs) out.per_job_throughput[j.job_id] = 0.0;
    for (const auto& [a, s, c] : best.encoding) {
        const auto& combo = inst.combos[static_cast<size_t>(c)];
        for (size_t m = 0; m < combo.members().size(); ++m)
            out.per_job_throughput[combo.members()[m]] +=
                ilp.member_throughput[static_cast<size_t>(a)][static_cast<size_t>(c)][m];
    }
    return out;
}

}  // namespace

std::vector<Combination> all_combinations(const std::vector<JobSpec>& jobs) {
    std::vector<Combination> out;
    for (const auto& j : jobs) out.push_back(Combination::solo(j.job_id));
    for (size_t i = 0; i < jobs.size(); ++i)
        for (size_t k = i + 1; k < jobs.size(); ++k) out.push_back(Combination::pair(jobs[i].job_id, jobs[k].job_id));
    std::sort(out.begin(), out.end());
    return out;
}

double AllocationInstance::throughput_of(const std::string& acc_id, const std::string& job_id,
                                         const Combination& c) const {
    auto it = throughput.find({acc_id, job_id, c});
    if (it == throughput.end())
        throw std::out_of_range("missing throughput entry for (" + acc_id + ", " + job_id + ", " + c.str() + ")");
    return it->second;
}

Ilp build(const AllocationInstance& instance) {
    if (instance.servers.empty()) throw std::invalid_argument("instance has no servers");
    if (instance.acc_types.empty()) throw std::invalid_argument("instance has no accelerator types");
    {
        std::set<std::string> seen;
        for (const auto& s : instance.servers)
            if (!seen.insert(s).second) throw std::invalid_argument("duplicate server id '" + s + "'");
    }
    for (const auto& a : instance.acc_types) {
        if (a.capacity < 1 || a.capacity > 2)
            throw std::invalid_argument("accelerator " + a.acc_id + " capacity must be 1 or 2");
        if (a.power_idle < 0.0 || a.power_per_unit_load < 0.0)
            throw std::invalid_argument("accelerator " + a.acc_id + " has negative power parameters");
    }
    for (const auto& j : instance.jobs) {
        if (j.min_throughput <= 0.0)
            throw std::invalid_argument("job " + j.job_id + " submitted to the optimizer needs min_throughput > 0");
        if (j.distributability < 1)
            throw std::invalid_argument("job " + j.job_id + " needs distributability >= 1");
    }

    Ilp ilp;
    ilp.instance = instance;
    const auto& inst = ilp.instance;
    const int A = static_cast<int>(inst.acc_types.size());
    const int S = static_cast<int>(inst.servers.size());
    const int C = static_cast<int>(inst.combos.size());

    ilp.member_throughput.assign(static_cast<size_t>(A), {});
    for (int a = 0; a < A; ++a) {
        ilp.member_throughput[static_cast<size_t>(a)].assign(static_cast<size_t>(C), {});
        for (int c = 0; c < C; ++c) {
            const auto& combo = inst.combos[static_cast<size_t>(c)];
            auto& ts = ilp.member_throughput[static_cast<size_t>(a)][static_cast<size_t>(c)];
            for (const auto& m : combo.members())
                ts.push_back(inst.throughput_of(inst.acc_types[static_cast<size_t>(a)].acc_id, m, combo));
        }
    }
    for (int a = 0; a < A; ++a) {
        for (int s = 0; s < S; ++s) {
            for (int c = 0; c < C; ++c) {
                const auto& acc = inst.acc_types[static_cast<size_t>(a)];
                double load = 0.0;
                for (double t : ilp.member_throughput[static_cast<size_t>(a)][static_cast<size_t>(c)]) load += t;
                ilp.variables.push_back({a, s, c, acc.power_idle + acc.power_per_unit_load * load, load});
            }
        }
    }
    return ilp;
}

namespace {

// Per-(acc, combo) placement option for the symmetric-server search.
struct Option {
    int acc;
    int combo;
    double weight;
    std::vector<int> member_jobs;      // indices into instance.jobs
    std::vector<double> member_t;      // throughput per member
};

struct SearchContext {
    const Ilp* ilp;
    std::vector<Option> options;                  // sorted by (acc, combo)
    std::vector<std::vector<int>> job_options;    // job -> option indices in branch order
    std::vector<double> required;                 // T-bar per job
    std::vector<int> max_places;                  // D_j per job
    int server_count = 0;

    // mutable search state
    std::vector<int> option_count;                // placements chosen per option
    std::vector<int> acc_used;                    // servers used per acc type
    std::vector<int> job_places;
    std::vector<double> job_achieved;
    double cost = 0.0;

    Candidate incumbent;
    long nodes = 0;
    long max_nodes = 0;
    std::chrono::steady_clock::time_point deadline;
    bool truncated = false;
    double truncated_bound = kInf;
    std::vector<std::vector<double>> weight_table;  // [acc][combo]
};

bool job_satisfied(const SearchContext& ctx, int j) {
    return ctx.job_places[static_cast<size_t>(j)] >= 1 &&
           ctx.job_achieved[static_cast<size_t>(j)] + kFeasEps >= ctx.required[static_cast<size_t>(j)];
}

// Lower bound on any feasible completion cost from this node, plus a cheap
// infeasibility test. Splitting each option's weight evenly across its
// members keeps the per-job sums a valid bound.
bool node_bound(const SearchContext& ctx, double* bound_out) {
    double bound = ctx.cost;
    const int J = static_cast<int>(ctx.required.size());
    for (int j = 0; j < J; ++j) {
        if (job_satisfied(ctx, j)) continue;
        const int places_left = ctx.max_places[static_cast<size_t>(j)] - ctx.job_places[static_cast<size_t>(j)];
        if (places_left <= 0) return false;
        double min_share = kInf;
        double max_t = 0.0;
        double reachable = 0.0;
        for (int oi : ctx.job_options[static_cast<size_t>(j)]) {
            const Option& o = ctx.options[static_cast<size_t>(oi)];
            const int servers_left = ctx.server_count - ctx.acc_used[static_cast<size_t>(o.acc)];
            if (servers_left <= 0) continue;
            double t = 0.0;
            for (size_t m = 0; m < o.member_jobs.size(); ++m)
                if (o.member_jobs[m] == j) t = o.member_t[m];
            min_share = std::min(min_share, o.weight / static_cast<double>(o.member_jobs.size()));
            max_t = std::max(max_t, t);
            reachable += t * servers_left;
        }
        if (min_share == kInf) return false;  // no way to place this job at all
        const double deficit = ctx.required[static_cast<size_t>(j)] - ctx.job_achieved[static_cast<size_t>(j)];
        if (reachable + kFeasEps < deficit) return false;
        int needed = ctx.job_places[static_cast<size_t>(j)] == 0 ? 1 : 0;
        if (max_t > 0.0 && deficit > kFeasEps)
            needed = std::max(needed, static_cast<int>(std::ceil((deficit - kFeasEps) / max_t)));
        else if (deficit > kFeasEps && max_t <= 0.0)
            return false;
        if (needed > places_left) return false;
        bound += static_cast<double>(needed) * min_share;
    }
    *bound_out = bound;
    return true;
}

void materialize(const SearchContext& ctx, Candidate& cand) {
    cand.encoding.clear();
    int prev_acc = -1, next_server = 0;
    for (size_t oi = 0; oi < ctx.options.size(); ++oi) {  // options sorted by (acc, combo)
        const Option& o = ctx.options[oi];
        if (o.acc != prev_acc) {
            prev_acc = o.acc;
            next_server = 0;
        }
        for (int k = 0; k < ctx.option_count[oi]; ++k) cand.encoding.emplace_back(o.acc, next_server++, o.combo);
    }
    std::sort(cand.encoding.begin(), cand.encoding.end());
    cand.objective = canonical_objective(cand.encoding, ctx.weight_table);
    cand.valid = true;
}

void search(SearchContext& ctx, int run_job, size_t run_pos) {
    if (++ctx.nodes > ctx.max_nodes || std::chrono::steady_clock::now() > ctx.deadline) {
        double bound = 0.0;
        if (node_bound(ctx, &bound)) {
            ctx.truncated = true;
            ctx.truncated_bound = std::min(ctx.truncated_bound, bound);
        }
        return;
    }
    double bound = 0.0;
    if (!node_bound(ctx, &bound)) return;
    if (ctx.incumbent.valid) {
        const double slack = 1e-9 * (1.0 + std::abs(ctx.incumbent.objective));
        if (bound > ctx.incumbent.objective + slack) return;
    }

    // branch on the first unsatisfied job
    const int J = static_cast<int>(ctx.required.size());
    int branch_job = -1;
    for (int j = 0; j < J; ++j) {
        if (!job_satisfied(ctx, j)) {
            branch_job = j;
            break;
        }
    }
    if (branch_job < 0) {  // feasible leaf
        Candidate cand;
        materialize(ctx, cand);
        if (cand.better_than(ctx.incumbent)) ctx.incumbent = cand;
        return;
    }

    // Placements for one job are chosen as a run in non-decreasing option
    // order, which prunes permuted duplicates of the same multiset.
    const size_t start = branch_job == run_job ? run_pos : 0;
    const auto& opts = ctx.job_options[static_cast<size_t>(branch_job)];
    for (size_t pos = start; pos < opts.size(); ++pos) {
        const int oi = opts[pos];
        const Option& o = ctx.options[static_cast<size_t>(oi)];
        if (ctx.acc_used[static_cast<size_t>(o.acc)] >= ctx.server_count) continue;
        bool blocked = false;
        for (int mj : o.member_jobs)
            if (ctx.job_places[static_cast<size_t>(mj)] >= ctx.max_places[static_cast<size_t>(mj)]) blocked = true;
        if (blocked) continue;

        ctx.option_count[static_cast<size_t>(oi)]++;
        ctx.acc_used[static_cast<size_t>(o.acc)]++;
        for (size_t m = 0; m < o.member_jobs.size(); ++m) {
            ctx.job_places[static_cast<size_t>(o.member_jobs[m])]++;
            ctx.job_achieved[static_cast<size_t>(o.member_jobs[m])] += o.member_t[m];
        }
        ctx.cost += o.weight;

        search(ctx, branch_job, pos);

        ctx.cost -= o.weight;
        for (size_t m = 0; m < o.member_jobs.size(); ++m) {
            ctx.job_places[static_cast<size_t>(o.member_jobs[m])]--;
            ctx.job_achieved[static_cast<size_t>(o.member_jobs[m])] -= o.member_t[m];
        }
        ctx.acc_used[static_cast<size_t>(o.acc)]--;
        ctx.option_count[static_cast<size_t>(oi)]--;
    }
}

}  // namespace

Allocation solve(const Ilp& ilp, const SolveLimits& limits) {
    const auto& inst = ilp.instance;
    const int A = static_cast<int>(inst.acc_types.size());
    const int C = static_cast<int>(inst.combos.size());
    const int J = static_cast<int>(inst.jobs.size());

    SearchContext ctx;
    ctx.ilp = &ilp;
    ctx.server_count = static_cast<int>(inst.servers.size());
    ctx.max_nodes = limits.max_nodes;
    ctx.deadline = std::chrono::steady_clock::now() +
                   std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                       std::chrono::duration<double>(limits.time_limit_seconds));

    ctx.weight_table.assign(static_cast<size_t>(A), std::vector<double>(static_cast<size_t>(C), 0.0));
    std::map<std::string, int> job_index;
    for (int j = 0; j < J; ++j) job_index[inst.jobs[static_cast<size_t>(j)].job_id] = j;

    for (int a = 0; a < A; ++a) {
        const auto& acc = inst.acc_types[static_cast<size_t>(a)];
        for (int c = 0; c < C; ++c) {
            const auto& combo = inst.combos[static_cast<size_t>(c)];
            const auto& ts = ilp.member_throughput[static_cast<size_t>(a)][static_cast<size_t>(c)];
            double load = 0.0;
            for (double t : ts) load += t;
            const double w = acc.power_idle + acc.power_per_unit_load * load;
            ctx.weight_table[static_cast<size_t>(a)][static_cast<size_t>(c)] = w;
            if (combo.size() > acc.capacity) continue;  // (2d) per slot
            Option o;
            o.acc = a;
            o.combo = c;
            o.weight = w;
            for (size_t m = 0; m < combo.members().size(); ++m) {
                o.member_jobs.push_back(job_index.at(combo.members()[m]));
                o.member_t.push_back(ts[m]);
            }
            ctx.options.push_back(std::move(o));
        }
    }

    ctx.job_options.assign(static_cast<size_t>(J), {});
    for (size_t oi = 0; oi < ctx.options.size(); ++oi)
        for (int j : ctx.options[oi].member_jobs) ctx.job_options[static_cast<size_t>(j)].push_back(static_cast<int>(oi));
    // branch order: power per unit of this job's throughput, cheapest first
    for (int j = 0; j < J; ++j) {
        auto& ids = ctx.job_options[static_cast<size_t>(j)];
        std::sort(ids.begin(), ids.end(), [&](int x, int y) {
            const Option& ox = ctx.options[static_cast<size_t>(x)];
            const Option& oy = ctx.options[static_cast<size_t>(y)];
            auto t_of = [&](const Option& o) {
                for (size_t m = 0; m < o.member_jobs.size(); ++m)
                    if (o.member_jobs[m] == j) return std::max(o.member_t[m], 1e-12);
                return 1e-12;
            };
            const double ex = ox.weight / t_of(ox);
            const double ey = oy.weight / t_of(oy);
            if (ex != ey) return ex < ey;
            return std::tie(ox.acc, ox.combo) < std::tie(oy.acc, oy.combo);
        });
    }

    ctx.required.resize(static_cast<size_t>(J));
    ctx.max_places.resize(static_cast<size_t>(J));
    for (int j = 0; j < J; ++j) {
        ctx.required[static_cast<size_t>(j)] = inst.jobs[static_cast<size_t>(j)].min_throughput;
        ctx.max_places[static_cast<size_t>(j)] = inst.jobs[static_cast<size_t>(j)].distributability;
    }
    ctx.option_count.assign(ctx.options.size(), 0);
    ctx.acc_used.assign(static_cast<size_t>(A), 0);
    ctx.job_places.assign(static_cast<size_t>(J), 0);
    ctx.job_achieved.assign(static_cast<size_t>(J), 0.0);

    search(ctx, -1, 0);

    if (ctx.truncated) {
        const double lb = std::min(ctx.truncated_bound,
                                   ctx.incumbent.valid ? ctx.incumbent.objective : kInf);
        return finish_allocation(ilp, ctx.incumbent, SolveStatus::Gap, lb, ctx.nodes);
    }
    if (!ctx.incumbent.valid) return finish_allocation(ilp, ctx.incumbent, SolveStatus::Infeasible, 0.0, ctx.nodes);
    return finish_allocation(ilp, ctx.incumbent, SolveStatus::Optimal, ctx.incumbent.objective, ctx.nodes);
}

Allocation solve(const AllocationInstance& instance, const SolveLimits& limits) {
    return solve(build(instance), limits);
}

Allocation brute_force(const AllocationInstance& instance) {
    if (instance.servers.size() * instance.acc_types.size() > 4 || instance.jobs.size() > 4)
        throw std::invalid_argument("instance exceeds the brute-force enumeration bound");
    const Ilp ilp = build(instance);
    const auto& inst = ilp.instance;
    const int A = static_cast<int>(inst.acc_types.size());
    const int S = static_cast<int>(inst.servers.size());
    const int C = static_cast<int>(inst.combos.size());
    const int J = static_cast<int>(inst.jobs.size());

    std::vector<std::vector<double>> weight(static_cast<size_t>(A), std::vector<double>(static_cast<size_t>(C)));
    for (int a = 0; a < A; ++a)
        for (int c = 0; c < C; ++c) {
            double load = 0.0;
            for (double t : ilp.member_throughput[static_cast<size_t>(a)][static_cast<size_t>(c)]) load += t;
            weight[static_cast<size_t>(a)][static_cast<size_t>(c)] =
                inst.acc_types[static_cast<size_t>(a)].power_idle +
                inst.acc_types[static_cast<size_t>(a)].power_per_unit_load * load;
        }
    std::map<std::string, int> job_index;
    for (int j = 0; j < J; ++j) job_index[inst.jobs[static_cast<size_t>(j)].job_id] = j;

    struct Slot {
        int acc;
        int server;
    };
    std::vector<Slot> slots;
    for (int a = 0; a < A; ++a)
        for (int s = 0; s < S; ++s) slots.push_back({a, s});

    Candidate best;
    std::vector<int> choice(slots.size(), -1);  // -1 = empty slot

    auto evaluate = [&]() {
        std::vector<int> places(static_cast<size_t>(J), 0);
        std::vector<double> achieved(static_cast<size_t>(J), 0.0);
        for (size_t i = 0; i < slots.size(); ++i) {
            if (choice[i] < 0) continue;
            const auto& combo = inst.combos[static_cast<size_t>(choice[i])];
            const auto& ts = ilp.member_throughput[static_cast<size_t>(slots[i].acc)][static_cast<size_t>(choice[i])];
            for (size_t m = 0; m < combo.members().size(); ++m) {
                const int j = job_index.at(combo.members()[m]);
                places[static_cast<size_t>(j)]++;
                achieved[static_cast<size_t>(j)] += ts[m];
            }
        }
        for (int j = 0; j < J; ++j) {
            if (places[static_cast<size_t>(j)] < 1) return;                                        // (2b)
            if (places[static_cast<size_t>(j)] > inst.jobs[static_cast<size_t>(j)].distributability) return;  // (2c)
            if (achieved[static_cast<size_t>(j)] + kFeasEps < inst.jobs[static_cast<size_t>(j)].min_throughput)
                return;  // (2e)
        }
        Candidate cand;
        for (size_t i = 0; i < slots.size(); ++i)
            if (choice[i] >= 0) cand.encoding.emplace_back(slots[i].acc, slots[i].server, choice[i]);
        std::sort(cand.encoding.begin(), cand.encoding.end());
        cand.objective = canonical_objective(cand.encoding, weight);
        cand.valid = true;
        if (cand.better_than(best)) best = cand;
    };

    auto rec = [&](auto&& self, size_t slot) -> void {
        if (slot == slots.size()) {
            evaluate();
            return;
        }
        choice[slot] = -1;
        self(self, slot + 1);
        for (int c = 0; c < C; ++c) {
            if (inst.combos[static_cast<size_t>(c)].size() >
                inst.acc_types[static_cast<size_t>(slots[slot].acc)].capacity)
                continue;  // (2d)
            choice[slot] = c;
            self(self, slot + 1);
        }
        choice[slot] = -1;
    };
    rec(rec, 0);

    if (!best.valid) return finish_allocation(ilp, best, SolveStatus::Infeasible, 0.0, 0);
    return finish_allocation(ilp, best, SolveStatus::Optimal, best.objective, 0);
}

std::vector<Violation> validate(const AllocationInstance& instance, const Allocation& allocation) {
    std::vector<Violation> out;
    std::map<std::string, int> places;
    std::map<std::string, double> achieved;
    for (const auto& j : instance.jobs) {
        places[j.job_id] = 0;
        achieved[j.job_id] = 0.0;
    }
    std::map<std::pair<std::string, std::string>, int> slot_combos;  // (acc, server) -> combos
    std::map<std::pair<std::string, std::string>, int> slot_jobs;    // (acc, server) -> total |c|

    for (const auto& p : allocation.assignments) {
        slot_combos[{p.acc_id, p.server}]++;
        slot_jobs[{p.acc_id, p.server}] += p.combo.size();
        for (const auto& m : p.combo.members()) {
            auto it = places.find(m);
            if (it == places.end()) {
                out.push_back({"2b", "placement references unknown job " + m});
                continue;
            }
            it->second++;
            auto t = instance.throughput.find({p.acc_id, m, p.combo});
            if (t == instance.throughput.end())
                out.push_back({"2e", "no throughput entry for (" + p.acc_id + ", " + m + ", " + p.combo.str() + ")"});
            else
                achieved[m] += t->second;
        }
    }
    for (const auto& j : instance.jobs) {
        if (places[j.job_id] < 1) out.push_back({"2b", "job " + j.job_id + " has no placement"});
        if (places[j.job_id] > j.distributability)
            out.push_back({"2c", "job " + j.job_id + " uses " + std::to_string(places[j.job_id]) +
                                     " placements, distributability " + std::to_string(j.distributability)});
        if (achieved[j.job_id] + kFeasEps < j.min_throughput)
            out.push_back({"2e", "job " + j.job_id + " achieves " + std::to_string(achieved[j.job_id]) +
                                     " of required " + std::to_string(j.min_throughput)});
    }
    for (const auto& [slot, n] : slot_jobs) {
        int cap = 0;
        for (const auto& a : instance.acc_types)
            if (a.acc_id == slot.first) cap = a.capacity;
        if (n > cap)
            out.push_back({"2d", "slot (" + slot.first + ", " + slot.second + ") hosts " + std::to_string(n) +
                                     " jobs, capacity " + std::to_string(cap)});
    }
    for (const auto& [slot, n] : slot_combos)
        if (n > 1)
            out.push_back({"2g", "slot (" + slot.first + ", " + slot.second + ") hosts " + std::to_string(n) +
                                     " combinations"});
    return out;
}

double power_of(const AllocationInstance& instance, const Allocation& allocation) {
    // same contribution order as the solvers: sorted by (type, combination)
    std::vector<std::tuple<int, int, const Placement*>> keys;
    for (const auto& p : allocation.assignments) {
        int a = -1;
        for (size_t i = 0; i < instance.acc_types.size(); ++i)
            if (instance.acc_types[i].acc_id == p.acc_id) a = static_cast<int>(i);
        if (a < 0) throw std::out_of_range("unknown accelerator '" + p.acc_id + "' in allocation");
        int c = -1;
        for (size_t i = 0; i < instance.combos.size(); ++i)
            if (instance.combos[i] == p.combo) c = static_cast<int>(i);
        if (c < 0) throw std::out_of_range("unknown combination " + p.combo.str() + " in allocation");
        keys.emplace_back(a, c, &p);
    }
    std::sort(keys.begin(), keys.end());
    double obj = 0.0;
    for (const auto& [a, c, p] : keys) {
        const auto& acc = instance.acc_types[static_cast<size_t>(a)];
        double load = 0.0;
        for (const auto& m : p->combo.members()) load += instance.throughput_of(p->acc_id, m, p->combo);
        obj += acc.power_idle + acc.power_per_unit_load * load;
    }
    return obj;
}

void save_instance(const AllocationInstance& instance, const std::string& path) {
    nlohmann::json j;
    j["servers"] = instance.servers;
    j["accelerators"] = nlohmann::json::array();
    for (const auto& a : instance.acc_types)
        j["accelerators"].push_back({{"id", a.acc_id},
                                     {"name", a.name},
                                     {"capacity", a.capacity},
                                     {"power_idle", a.power_idle},
                                     {"power_per_unit_load", a.power_per_unit_load}});
    j["jobs"] = nlohmann::json::array();
    for (const auto& job : instance.jobs)
        j["jobs"].push_back({{"id", job.job_id},
                             {"family", job.model_family},
                             {"batch_size", job.batch_size},
                             {"replication", job.replication},
                             {"min_throughput", job.min_throughput},
                             {"distributability", job.distributability}});
    j["throughput"] = nlohmann::json::array();
    for (const auto& [key, value] : instance.throughput) {
        const auto& [acc, job, combo] = key;
        j["throughput"].push_back({{"acc", acc}, {"job", job}, {"combo", combo.members()}, {"value", value}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

AllocationInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open instance file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("instance file '" + path + "': " + e.what());
    }
    AllocationInstance inst;
    inst.servers = j.at("servers").get<std::vector<std::string>>();
    for (const auto& a : j.at("accelerators")) {
        AcceleratorType acc;
        acc.acc_id = a.at("id").get<std::string>();
        acc.name = a.value("name", acc.acc_id);
        acc.capacity = a.at("capacity").get<int>();
        acc.power_idle = a.at("power_idle").get<double>();
        acc.power_per_unit_load = a.at("power_per_unit_load").get<double>();
        inst.acc_types.push_back(acc);
    }
    for (const auto& job : j.at("jobs")) {
        JobSpec spec;
        spec.job_id = job.at("id").get<std::string>();
        spec.model_family = job.value("family", "");
        spec.batch_size = job.value("batch_size", 1);
        spec.replication = job.value("replication", 1);
        spec.min_throughput = job.at("min_throughput").get<double>();
        spec.distributability = job.value("distributability", 1);
        inst.jobs.push_back(spec);
    }
    inst.combos = all_combinations(inst.jobs);
    for (const auto& t : j.at("throughput")) {
        const Combination combo = Combination::of(t.at("combo").get<std::vector<std::string>>());
        inst.throughput[{t.at("acc").get<std::string>(), t.at("job").get<std::string>(), combo}] =
            t.at("value").get<double>();
    }
    return inst;
}

}  // namespace hetsim
