#include "hetsim/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <set>

#include "hetsim/rng.hpp"
#include "json.hpp"

namespace hetsim {

namespace {

using nlohmann::json;

constexpr double kSlaEps = 1e-9;

double catalog_mae_vs_truth(const Catalog& catalog, const GroundTruth& gt) {
    double ae = 0.0;
    size_t n = 0;
    for (const EstimateRecord* rec : catalog.records()) {
        const auto truth = gt.value_opt(rec->acc_id, rec->job_id, rec->combo);
        if (!truth) continue;
        const auto have = catalog.lookup_opt(rec->acc_id, rec->job_id, rec->combo);
        if (!have) continue;
        ae += std::abs(*have - *truth);
        ++n;
    }
    return n ? ae / static_cast<double>(n) : 0.0;
}

json combo_json(const Combination& c) { return json(c.members()); }

json trace_record(const RoundTrace& t) {
    json rec;
    rec["round"] = t.round;
    rec["arrival"] = t.arrival;
    rec["deferred_retry"] = t.deferred_retry;
    rec["infeasible"] = t.infeasible;
    json ests = json::array();
    for (const auto& e : t.estimates)
        ests.push_back({{"acc", e.acc_id},
                        {"combo", combo_json(e.combo)},
                        {"job", e.job_id},
                        {"value", e.value},
                        {"fallback", e.fallback}});
    rec["estimates"] = ests;
    json alloc;
    alloc["status"] = t.allocation.status == SolveStatus::Optimal
                          ? "optimal"
                          : (t.allocation.status == SolveStatus::Infeasible ? "infeasible" : "gap");
    alloc["watts"] = t.allocation.objective_watts;
    json asg = json::array();
    for (const auto& p : t.allocation.assignments)
        asg.push_back({{"acc", p.acc_id}, {"server", p.server}, {"combo", combo_json(p.combo)}});
    alloc["assignments"] = asg;
    rec["allocation"] = alloc;
    json ms = json::array();
    for (const auto& m : t.measurements)
        ms.push_back({{"acc", m.acc_id}, {"job", m.job_id}, {"combo", combo_json(m.combo)}, {"value", m.value}});
    rec["measurements"] = ms;
    json refs = json::array();
    for (const auto& r : t.refinements)
        refs.push_back({{"acc", r.acc_id},
                        {"job", r.job_id},
                        {"combo", combo_json(r.combo)},
                        {"value", r.value},
                        {"round_index", r.round_index}});
    rec["refinements"] = refs;
    rec["metrics"] = {{"estimate_mae", t.metrics.estimate_mae},
                      {"watts", t.metrics.watts},
                      {"sla_violations", t.metrics.sla_violations},
                      {"active_jobs", t.metrics.active_jobs}};
    return rec;
}

}  // namespace

AllocationInstance make_instance(const Catalog& catalog, const std::vector<std::string>& active_jobs,
                                 const std::vector<std::string>& servers,
                                 const std::vector<AcceleratorType>& accelerators) {
    AllocationInstance inst;
    inst.servers = servers;
    inst.acc_types = accelerators;
    for (const auto& id : active_jobs) inst.jobs.push_back(catalog.job(id));
    std::sort(inst.jobs.begin(), inst.jobs.end(), [](const auto& a, const auto& b) { return a.job_id < b.job_id; });
    inst.combos = all_combinations(inst.jobs);
    for (const auto& acc : inst.acc_types) {
        for (const auto& combo : inst.combos) {
            for (const auto& m : combo.members()) {
                const auto v = catalog.lookup_opt(acc.acc_id, m, combo);
                if (!v)
                    throw std::runtime_error("catalog has no value for (" + acc.acc_id + ", " + m + ", " +
                                             combo.str() + ")");
                inst.throughput[{acc.acc_id, m, combo}] = *v;
            }
        }
    }
    return inst;
}

RunResult run(const Scenario& scenario, const Regressor* p1, const Regressor* p2, uint64_t seed) {
    const GroundTruth& gt = scenario.ground_truth;
    if (scenario.estimator == EstimatorKind::Learned && (!p1 || !p2))
        throw std::invalid_argument("learned estimator mode needs trained P1 and P2 models");
    for (const auto& id : scenario.arrivals)
        for (const auto& b : scenario.bootstrap_jobs)
            if (id == b) throw std::invalid_argument("job " + id + " is both an arrival and a bootstrap job");

    // the catalog schema keeps the full table's accelerator one-hot layout
    Catalog catalog(gt.schema(), scenario.accelerators);
    std::vector<std::string> acc_ids;
    for (const auto& a : scenario.accelerators) acc_ids.push_back(a.acc_id);
    std::sort(acc_ids.begin(), acc_ids.end());

    auto sla_of = [&](const std::string& job_id) {
        auto it = scenario.sla.overrides.find(job_id);
        if (it != scenario.sla.overrides.end()) return it->second;
        double min_solo = std::numeric_limits<double>::infinity();
        for (const auto& a : acc_ids) min_solo = std::min(min_solo, gt.value(a, job_id, Combination::solo(job_id)));
        return std::make_pair(scenario.sla.min_throughput_factor * min_solo, scenario.sla.distributability);
    };

    // bootstrap history: exact measurements for solos and intra-bootstrap pairs
    for (const auto& b : scenario.bootstrap_jobs) catalog.register_job(gt.job(b));
    for (const auto& b : scenario.bootstrap_jobs) {
        const Combination solo = Combination::solo(b);
        for (const auto& a : acc_ids) catalog.record_measurement(a, b, solo, gt.value(a, b, solo));
        for (const auto& other : scenario.bootstrap_jobs) {
            if (other <= b) continue;
            const Combination pair = Combination::pair(b, other);
            if (!gt.has(acc_ids.front(), b, pair)) continue;
            for (const auto& a : acc_ids) {
                catalog.record_measurement(a, b, pair, gt.value(a, b, pair));
                catalog.record_measurement(a, other, pair, gt.value(a, other, pair));
            }
        }
    }

    Rng measure_rng(seed, "measurement-noise");
    std::deque<std::string> pending(scenario.arrivals.begin(), scenario.arrivals.end());
    std::optional<std::string> deferred;
    std::vector<std::string> active;

    RunResult result;
    for (int round = 0; round < scenario.rounds; ++round) {
        RoundTrace trace;
        trace.round = round;

        // 1. arrival (a deferred job retries before the queue advances)
        std::string arrival;
        if (deferred) {
            arrival = *deferred;
            trace.deferred_retry = true;
            deferred.reset();
        } else if (!pending.empty()) {
            arrival = pending.front();
            pending.pop_front();
        }
        trace.arrival = arrival;

        // 2. initial estimation for a first-time arrival
        if (!arrival.empty() && !catalog.has_job(arrival)) {
            JobSpec spec = gt.job(arrival);
            const auto [tbar, dj] = sla_of(arrival);
            spec.min_throughput = tbar;
            spec.distributability = dj;
            catalog.register_job(spec);
            if (scenario.estimator == EstimatorKind::Learned) {
                trace.estimates = estimate_initial(*p1, catalog, spec, active);
            } else {
                for (const auto& a : acc_ids) {
                    const Combination solo = Combination::solo(arrival);
                    catalog.put_estimate(a, arrival, solo, gt.value(a, arrival, solo));
                    trace.estimates.push_back({a, solo, arrival, gt.value(a, arrival, solo), false});
                    for (const auto& other : active) {
                        const Combination pair = Combination::pair(arrival, other);
                        if (!gt.has(a, arrival, pair)) continue;
                        catalog.put_estimate(a, arrival, pair, gt.value(a, arrival, pair));
                        trace.estimates.push_back({a, pair, arrival, gt.value(a, arrival, pair), false});
                        catalog.put_estimate(a, other, pair, gt.value(a, other, pair));
                        trace.estimates.push_back({a, pair, other, gt.value(a, other, pair), false});
                    }
                }
            }
        }
        if (!arrival.empty()) active.push_back(arrival);

        // 3. allocate over all active jobs
        Allocation allocation;
        AllocationInstance instance;
        bool have_instance = false;
        if (!active.empty()) {
            const auto t0 = std::chrono::steady_clock::now();
            instance = make_instance(catalog, active, scenario.servers, scenario.accelerators);
            have_instance = true;
            allocation = solve(instance);
            if (allocation.status == SolveStatus::Infeasible && !arrival.empty()) {
                // defer the newcomer, keep serving the previously feasible set
                trace.infeasible = true;
                deferred = arrival;
                active.pop_back();
                if (!active.empty()) {
                    instance = make_instance(catalog, active, scenario.servers, scenario.accelerators);
                    allocation = solve(instance);
                } else {
                    allocation = Allocation{};
                    have_instance = false;
                }
            }
            const auto t1 = std::chrono::steady_clock::now();
            trace.allocation = allocation;
            trace.metrics.watts = have_instance && allocation.status != SolveStatus::Infeasible
                                      ? power_of(instance, allocation)
                                      : 0.0;
            result.summary.solver_ms_max =
                std::max(result.summary.solver_ms_max,
                         std::chrono::duration<double, std::milli>(t1 - t0).count());
            result.summary.solver_ms_mean += std::chrono::duration<double, std::milli>(t1 - t0).count();
            result.summary.solver_nodes_total += allocation.nodes_explored;
            result.summary.solver_nodes_max = std::max(result.summary.solver_nodes_max, allocation.nodes_explored);
            if (allocation.status == SolveStatus::Infeasible) trace.infeasible = true;
        }

        // 4. measure every hosted combination once per accelerator type
        std::map<std::string, std::set<std::string>> hosted;  // combo key -> acc types hosting it
        std::map<std::pair<std::string, Combination>, std::map<std::string, double>> measured;
        if (allocation.status != SolveStatus::Infeasible) {
            std::set<std::pair<std::string, Combination>> seen;
            for (const auto& p : allocation.assignments) {
                hosted[p.combo.str()].insert(p.acc_id);
                if (!seen.insert({p.acc_id, p.combo}).second) continue;
                for (const auto& m : p.combo.members()) {
                    const auto truth = gt.value_opt(p.acc_id, m, p.combo);
                    if (!truth) continue;  // the table does not cover this co-location
                    double value = *truth;
                    if (scenario.noise_sigma > 0.0)
                        value = std::max(0.0, *truth * (1.0 + scenario.noise_sigma * measure_rng.gaussian()));
                    measured[{p.acc_id, p.combo}][m] = value;
                    trace.measurements.push_back({p.acc_id, m, p.combo, value});
                }
            }
        }

        // 5. propagate measurements to the accelerator types not hosting the combo
        for (const auto& [key, values] : measured) {
            const auto& [acc_id, combo] = key;
            if (static_cast<int>(values.size()) != combo.size()) continue;  // partially covered pair
            std::vector<std::string> targets;
            const auto& hosting = hosted[combo.str()];
            for (const auto& a : acc_ids)
                if (!hosting.count(a)) targets.push_back(a);
            if (scenario.estimator == EstimatorKind::Learned) {
                RefineInput in{acc_id, combo, values};
                auto res = refine(*p2, catalog, in, targets);
                for (auto& app : res.appended) trace.refinements.push_back(std::move(app));
            } else {
                for (const auto& [job, v] : values) catalog.record_measurement(acc_id, job, combo, v);
                for (const auto& a : targets) {
                    for (const auto& [job, v] : values) {
                        const auto truth = gt.value_opt(a, job, combo);
                        if (!truth) continue;
                        const int idx = catalog.put_estimate(a, job, combo, *truth);
                        trace.refinements.push_back({a, job, combo, *truth, idx});
                    }
                }
            }
        }

        // 6. per-round metrics
        trace.metrics.active_jobs = static_cast<int>(active.size());
        trace.metrics.estimate_mae = catalog_mae_vs_truth(catalog, gt);
        if (allocation.status != SolveStatus::Infeasible) {
            for (const auto& id : active) {
                double achieved = 0.0;
                for (const auto& p : allocation.assignments)
                    if (p.combo.contains(id)) achieved += gt.value_opt(p.acc_id, id, p.combo).value_or(0.0);
                if (achieved + kSlaEps < catalog.job(id).min_throughput) trace.metrics.sla_violations++;
            }
        } else {
            trace.metrics.sla_violations = static_cast<int>(active.size());
        }

        result.traces.push_back(std::move(trace));
    }

    const int solved_rounds = static_cast<int>(result.traces.size());
    if (solved_rounds > 0) result.summary.solver_ms_mean /= solved_rounds;
    const RunSummary timing = result.summary;  // keep the wall-clock fields
    result.summary = metrics(result.traces);
    result.summary.solver_ms_mean = timing.solver_ms_mean;
    result.summary.solver_ms_max = timing.solver_ms_max;
    return result;
}

RunSummary metrics(const std::vector<RoundTrace>& traces) {
    RunSummary s;
    s.rounds = static_cast<int>(traces.size());
    for (const auto& t : traces) {
        s.energy_watt_rounds += t.metrics.watts;
        s.sla_violations += t.metrics.sla_violations;
        s.job_rounds += t.metrics.active_jobs;
        s.mae_per_round.push_back(t.metrics.estimate_mae);
        if (t.infeasible) s.infeasible_rounds++;
        s.solver_nodes_total += t.allocation.nodes_explored;
        s.solver_nodes_max = std::max(s.solver_nodes_max, t.allocation.nodes_explored);
    }
    s.sla_violation_rate = s.job_rounds ? static_cast<double>(s.sla_violations) / s.job_rounds : 0.0;
    s.final_estimate_mae = s.mae_per_round.empty() ? 0.0 : s.mae_per_round.back();
    return s;
}

std::string trace_to_jsonl(const std::vector<RoundTrace>& traces) {
    std::string out;
    for (const auto& t : traces) {
        out += trace_record(t).dump();
        out += '\n';
    }
    return out;
}

std::string summary_to_json(const RunSummary& s, bool include_volatile) {
    json j;
    j["rounds"] = s.rounds;
    j["energy_watt_rounds"] = s.energy_watt_rounds;
    j["sla_violations"] = s.sla_violations;
    j["job_rounds"] = s.job_rounds;
    j["sla_violation_rate"] = s.sla_violation_rate;
    j["final_estimate_mae"] = s.final_estimate_mae;
    j["mae_per_round"] = s.mae_per_round;
    j["infeasible_rounds"] = s.infeasible_rounds;
    j["solver_nodes_total"] = s.solver_nodes_total;
    j["solver_nodes_max"] = s.solver_nodes_max;
    if (include_volatile) {
        j["solver_ms_mean"] = s.solver_ms_mean;
        j["solver_ms_max"] = s.solver_ms_max;
    }
    return j.dump(2) + "\n";
}

void write_trace(const std::vector<RoundTrace>& traces, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << trace_to_jsonl(traces);
}

void write_summary(const RunSummary& summary, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << summary_to_json(summary);
}

std::string compare(const std::vector<std::pair<std::string, Scenario>>& scenarios, const Regressor* p1,
                    const Regressor* p2, uint64_t seed) {
    std::string out;
    for (const auto& [name, scenario] : scenarios) {
        const RunResult r = run(scenario, p1, p2, seed);
        json line;
        line["scenario"] = name;
        line["rounds"] = r.summary.rounds;
        line["energy_watt_rounds"] = r.summary.energy_watt_rounds;
        line["sla_violation_rate"] = r.summary.sla_violation_rate;
        line["final_estimate_mae"] = r.summary.final_estimate_mae;
        line["infeasible_rounds"] = r.summary.infeasible_rounds;
        out += line.dump();
        out += '\n';
    }
    return out;
}

}  // namespace hetsim
