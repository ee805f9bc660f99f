#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "hetsim/catalog.hpp"
#include "hetsim/config.hpp"
#include "hetsim/dataset.hpp"
#include "hetsim/estimation.hpp"
#include "hetsim/optimizer.hpp"
#include "hetsim/regressor.hpp"
#include "hetsim/simulator.hpp"
#include "hetsim/training.hpp"

namespace py = pybind11;
using namespace hetsim;

PYBIND11_MODULE(_core, m) {
    m.doc() = "heterogeneous GPU cluster orchestration simulator core";

    py::class_<JobSpec>(m, "JobSpec")
        .def(py::init<>())
        .def_readwrite("job_id", &JobSpec::job_id)
        .def_readwrite("model_family", &JobSpec::model_family)
        .def_readwrite("batch_size", &JobSpec::batch_size)
        .def_readwrite("replication", &JobSpec::replication)
        .def_readwrite("min_throughput", &JobSpec::min_throughput)
        .def_readwrite("distributability", &JobSpec::distributability)
        .def_readwrite("is_sentinel", &JobSpec::is_sentinel);
    m.def("sentinel_job", &sentinel_job);
    m.attr("SENTINEL_JOB_ID") = kSentinelJobId;

    py::class_<AcceleratorType>(m, "AcceleratorType")
        .def(py::init<>())
        .def_readwrite("acc_id", &AcceleratorType::acc_id)
        .def_readwrite("name", &AcceleratorType::name)
        .def_readwrite("capacity", &AcceleratorType::capacity)
        .def_readwrite("power_idle", &AcceleratorType::power_idle)
        .def_readwrite("power_per_unit_load", &AcceleratorType::power_per_unit_load);

    py::class_<Combination>(m, "Combination")
        .def_static("solo", &Combination::solo)
        .def_static("pair", &Combination::pair)
        .def_property_readonly("members", &Combination::members)
        .def("contains", &Combination::contains)
        .def("partner_of", &Combination::partner_of)
        .def("is_solo", &Combination::is_solo)
        .def("__len__", &Combination::size)
        .def("__repr__", &Combination::str)
        .def("__eq__", [](const Combination& a, const Combination& b) { return a == b; })
        .def("__lt__", [](const Combination& a, const Combination& b) { return a < b; });

    py::class_<FeatureSchema>(m, "FeatureSchema")
        .def_readonly("families", &FeatureSchema::families)
        .def_readonly("accelerator_ids", &FeatureSchema::accelerator_ids)
        .def_property_readonly("feature_length", &FeatureSchema::feature_length)
        .def("accelerator_index", &FeatureSchema::accelerator_index);
    m.def("encode", &encode);
    m.def("encoding_distance", &encoding_distance);

    py::class_<GroundTruth>(m, "GroundTruth")
        .def_property_readonly("accelerators", &GroundTruth::accelerators)
        .def_property_readonly("jobs", &GroundTruth::jobs)
        .def_property_readonly("normalizer", &GroundTruth::normalizer)
        .def_property_readonly("schema", &GroundTruth::schema)
        .def("job", &GroundTruth::job, py::return_value_policy::copy)
        .def("solo_raw", &GroundTruth::solo_raw)
        .def("paired_raw", &GroundTruth::paired_raw)
        .def("value", &GroundTruth::value)
        .def("has", &GroundTruth::has)
        .def("combinations", &GroundTruth::combinations);

    py::class_<SyntheticSpec>(m, "SyntheticSpec")
        .def(py::init<>())
        .def_readwrite("accelerators", &SyntheticSpec::accelerators)
        .def_readwrite("families", &SyntheticSpec::families)
        .def_readwrite("batches_per_family", &SyntheticSpec::batches_per_family)
        .def_readwrite("interference", &SyntheticSpec::interference)
        .def_readwrite("seed", &SyntheticSpec::seed)
        .def_readwrite("speed_base", &SyntheticSpec::speed_base);
    m.def("generate_synthetic", &generate_synthetic);
    m.def("load_table", py::overload_cast<const std::string&>(&load_table));
    m.def("save_table", py::overload_cast<const GroundTruth&, const std::string&>(&save_table));

    py::class_<JobSplit>(m, "JobSplit")
        .def_readonly("train", &JobSplit::train)
        .def_readonly("val", &JobSplit::val)
        .def_readonly("test", &JobSplit::test);
    m.def("split_jobs", &split_jobs);

    py::class_<EstimateRecord>(m, "EstimateRecord")
        .def_readonly("acc_id", &EstimateRecord::acc_id)
        .def_readonly("job_id", &EstimateRecord::job_id)
        .def_readonly("combo", &EstimateRecord::combo)
        .def_readonly("refinement_set", &EstimateRecord::refinement_set)
        .def_readonly("measurement", &EstimateRecord::measurement);

    py::class_<Catalog>(m, "Catalog")
        .def(py::init<FeatureSchema, std::vector<AcceleratorType>>())
        .def_property_readonly("schema", &Catalog::schema)
        .def_property_readonly("accelerators", &Catalog::accelerators)
        .def("register_job", &Catalog::register_job)
        .def("has_job", &Catalog::has_job)
        .def("job", &Catalog::job, py::return_value_policy::copy)
        .def("job_ids", &Catalog::job_ids)
        .def("job_count", &Catalog::job_count)
        .def("nearest_job", &Catalog::nearest_job, py::arg("query"), py::arg("exclude") = std::set<std::string>{})
        .def("put_estimate", &Catalog::put_estimate)
        .def("record_measurement", &Catalog::record_measurement)
        .def("lookup", &Catalog::lookup)
        .def("estimate_mean", &Catalog::estimate_mean)
        .def("has_record", &Catalog::has_record)
        .def("has_measurement", &Catalog::has_measurement)
        .def("export_snapshot", py::overload_cast<const std::string&>(&Catalog::export_snapshot, py::const_))
        .def("import_snapshot", py::overload_cast<const std::string&>(&Catalog::import_snapshot))
        .def("export_snapshot_text",
             [](const Catalog& c) {
                 std::ostringstream ss;
                 c.export_snapshot(ss);
                 return ss.str();
             })
        .def("records", [](const Catalog& c) {
            std::vector<EstimateRecord> out;
            for (const EstimateRecord* r : c.records()) out.push_back(*r);
            return out;
        });

    py::class_<Sample>(m, "Sample")
        .def(py::init<>())
        .def_readwrite("input", &Sample::input)
        .def_readwrite("target", &Sample::target);

    py::class_<Hyperparams>(m, "Hyperparams")
        .def(py::init<>())
        .def_readwrite("learning_rate", &Hyperparams::learning_rate)
        .def_readwrite("epochs", &Hyperparams::epochs)
        .def_readwrite("batch_size", &Hyperparams::batch_size)
        .def_readwrite("patience", &Hyperparams::patience)
        .def_readwrite("shuffle_seed", &Hyperparams::shuffle_seed);

    py::class_<TrainReport>(m, "TrainReport")
        .def_readonly("epochs_run", &TrainReport::epochs_run)
        .def_readonly("final_train_loss", &TrainReport::final_train_loss)
        .def_readonly("final_val_loss", &TrainReport::final_val_loss)
        .def_readonly("final_train_mae", &TrainReport::final_train_mae)
        .def_readonly("final_val_mae", &TrainReport::final_val_mae);

    py::class_<Regressor>(m, "Regressor")
        .def(py::init<std::vector<int>, uint64_t>())
        .def_property_readonly("layer_sizes", &Regressor::layer_sizes)
        .def_property_readonly("input_size", &Regressor::input_size)
        .def_property_readonly("output_size", &Regressor::output_size)
        .def("predict",
             [](const Regressor& r, const std::vector<double>& x) { return r.predict(x); })
        .def("train", &Regressor::train)
        .def("gradient_check", &Regressor::gradient_check)
        .def("evaluate", &Regressor::evaluate)
        .def("save", py::overload_cast<const std::string&>(&Regressor::save, py::const_))
        .def_static("load", py::overload_cast<const std::string&>(&Regressor::load));

    m.def("p1_input_width", &p1_input_width);
    m.def("p2_input_width", &p2_input_width);

    py::class_<P1BuildOptions>(m, "P1BuildOptions")
        .def(py::init<>())
        .def_readwrite("neighbors", &P1BuildOptions::neighbors)
        .def_readwrite("target_jobs", &P1BuildOptions::target_jobs)
        .def_readwrite("pool_jobs", &P1BuildOptions::pool_jobs);
    py::class_<P2BuildOptions>(m, "P2BuildOptions")
        .def(py::init<>())
        .def_readwrite("pool_jobs", &P2BuildOptions::pool_jobs)
        .def_readwrite("require_member", &P2BuildOptions::require_member);
    m.def("build_p1_samples", &build_p1_samples, py::arg("gt"), py::arg("opts") = P1BuildOptions{});
    m.def("build_p2_samples", &build_p2_samples, py::arg("gt"), py::arg("estimate_noise_sigma"), py::arg("seed"),
          py::arg("opts") = P2BuildOptions{});

    py::class_<InitialEstimate>(m, "InitialEstimate")
        .def_readonly("acc_id", &InitialEstimate::acc_id)
        .def_readonly("combo", &InitialEstimate::combo)
        .def_readonly("job_id", &InitialEstimate::job_id)
        .def_readonly("value", &InitialEstimate::value)
        .def_readonly("fallback", &InitialEstimate::fallback);
    m.def("estimate_initial", &estimate_initial);

    py::class_<RefineInput>(m, "RefineInput")
        .def(py::init<>())
        .def_readwrite("source_acc", &RefineInput::source_acc)
        .def_readwrite("combo", &RefineInput::combo)
        .def_readwrite("measured", &RefineInput::measured);
    py::class_<AppendedEstimate>(m, "AppendedEstimate")
        .def_readonly("acc_id", &AppendedEstimate::acc_id)
        .def_readonly("job_id", &AppendedEstimate::job_id)
        .def_readonly("combo", &AppendedEstimate::combo)
        .def_readonly("value", &AppendedEstimate::value)
        .def_readonly("round_index", &AppendedEstimate::round_index);
    py::class_<SkippedTarget>(m, "SkippedTarget")
        .def_readonly("acc_id", &SkippedTarget::acc_id)
        .def_readonly("reason", &SkippedTarget::reason);
    py::class_<RefineResult>(m, "RefineResult")
        .def_readonly("appended", &RefineResult::appended)
        .def_readonly("skipped", &RefineResult::skipped);
    m.def("refine", &refine);
    m.def("prediction_mae", &prediction_mae, py::arg("model"), py::arg("samples"), py::arg("clamp01") = true);

    py::class_<AllocationInstance>(m, "AllocationInstance")
        .def(py::init<>())
        .def_readwrite("servers", &AllocationInstance::servers)
        .def_readwrite("acc_types", &AllocationInstance::acc_types)
        .def_readwrite("jobs", &AllocationInstance::jobs)
        .def_readwrite("combos", &AllocationInstance::combos)
        .def("set_throughput",
             [](AllocationInstance& inst, const std::string& acc, const std::string& job, const Combination& c,
                double v) { inst.throughput[{acc, job, c}] = v; })
        .def("throughput_of", &AllocationInstance::throughput_of);
    m.def("all_combinations", &all_combinations);

    py::enum_<SolveStatus>(m, "SolveStatus")
        .value("OPTIMAL", SolveStatus::Optimal)
        .value("INFEASIBLE", SolveStatus::Infeasible)
        .value("GAP", SolveStatus::Gap);

    py::class_<Placement>(m, "Placement")
        .def_readonly("acc_id", &Placement::acc_id)
        .def_readonly("server", &Placement::server)
        .def_readonly("combo", &Placement::combo);

    py::class_<Allocation>(m, "Allocation")
        .def_readonly("status", &Allocation::status)
        .def_readonly("assignments", &Allocation::assignments)
        .def_readonly("objective_watts", &Allocation::objective_watts)
        .def_readonly("lower_bound", &Allocation::lower_bound)
        .def_readonly("per_job_throughput", &Allocation::per_job_throughput)
        .def_readonly("nodes_explored", &Allocation::nodes_explored);

    py::class_<Violation>(m, "Violation")
        .def_readonly("constraint", &Violation::constraint)
        .def_readonly("detail", &Violation::detail);

    py::class_<SolveLimits>(m, "SolveLimits")
        .def(py::init<>())
        .def_readwrite("max_nodes", &SolveLimits::max_nodes)
        .def_readwrite("time_limit_seconds", &SolveLimits::time_limit_seconds);

    m.def("solve",
          py::overload_cast<const AllocationInstance&, const SolveLimits&>(&solve),
          py::arg("instance"), py::arg("limits") = SolveLimits{});
    m.def("brute_force", &brute_force);
    m.def("validate", &validate);
    m.def("power_of", &power_of);
    m.def("save_instance", &save_instance);
    m.def("load_instance", &load_instance);

    py::enum_<EstimatorKind>(m, "EstimatorKind")
        .value("LEARNED", EstimatorKind::Learned)
        .value("ORACLE", EstimatorKind::Oracle);

    py::class_<SlaPolicy>(m, "SlaPolicy")
        .def(py::init<>())
        .def_readwrite("min_throughput_factor", &SlaPolicy::min_throughput_factor)
        .def_readwrite("distributability", &SlaPolicy::distributability)
        .def_readwrite("overrides", &SlaPolicy::overrides);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_readwrite("ground_truth", &Scenario::ground_truth)
        .def_readwrite("servers", &Scenario::servers)
        .def_readwrite("accelerators", &Scenario::accelerators)
        .def_readwrite("bootstrap_jobs", &Scenario::bootstrap_jobs)
        .def_readwrite("arrivals", &Scenario::arrivals)
        .def_readwrite("noise_sigma", &Scenario::noise_sigma)
        .def_readwrite("rounds", &Scenario::rounds)
        .def_readwrite("sla", &Scenario::sla)
        .def_readwrite("estimator", &Scenario::estimator);

    py::class_<RoundMetrics>(m, "RoundMetrics")
        .def_readonly("estimate_mae", &RoundMetrics::estimate_mae)
        .def_readonly("watts", &RoundMetrics::watts)
        .def_readonly("sla_violations", &RoundMetrics::sla_violations)
        .def_readonly("active_jobs", &RoundMetrics::active_jobs);

    py::class_<MeasurementEntry>(m, "MeasurementEntry")
        .def_readonly("acc_id", &MeasurementEntry::acc_id)
        .def_readonly("job_id", &MeasurementEntry::job_id)
        .def_readonly("combo", &MeasurementEntry::combo)
        .def_readonly("value", &MeasurementEntry::value);

    py::class_<RoundTrace>(m, "RoundTrace")
        .def_readonly("round", &RoundTrace::round)
        .def_readonly("arrival", &RoundTrace::arrival)
        .def_readonly("deferred_retry", &RoundTrace::deferred_retry)
        .def_readonly("infeasible", &RoundTrace::infeasible)
        .def_readonly("estimates", &RoundTrace::estimates)
        .def_readonly("allocation", &RoundTrace::allocation)
        .def_readonly("measurements", &RoundTrace::measurements)
        .def_readonly("refinements", &RoundTrace::refinements)
        .def_readonly("metrics", &RoundTrace::metrics);

    py::class_<RunSummary>(m, "RunSummary")
        .def_readonly("rounds", &RunSummary::rounds)
        .def_readonly("energy_watt_rounds", &RunSummary::energy_watt_rounds)
        .def_readonly("sla_violations", &RunSummary::sla_violations)
        .def_readonly("job_rounds", &RunSummary::job_rounds)
        .def_readonly("sla_violation_rate", &RunSummary::sla_violation_rate)
        .def_readonly("final_estimate_mae", &RunSummary::final_estimate_mae)
        .def_readonly("mae_per_round", &RunSummary::mae_per_round)
        .def_readonly("infeasible_rounds", &RunSummary::infeasible_rounds)
        .def_readonly("solver_nodes_total", &RunSummary::solver_nodes_total)
        .def_readonly("solver_nodes_max", &RunSummary::solver_nodes_max);

    py::class_<RunResult>(m, "RunResult")
        .def_readonly("traces", &RunResult::traces)
        .def_readonly("summary", &RunResult::summary);

    m.def("run",
          [](const Scenario& sc, const Regressor* p1, const Regressor* p2, uint64_t seed) {
              return run(sc, p1, p2, seed);
          },
          py::arg("scenario"), py::arg("p1") = nullptr, py::arg("p2") = nullptr, py::arg("seed") = 1);
    m.def("metrics", &metrics);
    m.def("make_instance", &make_instance);
    m.def("trace_to_jsonl", &trace_to_jsonl);
    m.def("summary_to_json", &summary_to_json, py::arg("summary"), py::arg("include_volatile") = false);
    m.def("write_trace", &write_trace);
    m.def("write_summary", &write_summary);

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_readwrite("hidden", &ModelConfig::hidden)
        .def_readwrite("learning_rate", &ModelConfig::learning_rate)
        .def_readwrite("epochs", &ModelConfig::epochs)
        .def_readwrite("batch_size", &ModelConfig::batch_size)
        .def_readwrite("patience", &ModelConfig::patience)
        .def_readwrite("p1_neighbors", &ModelConfig::p1_neighbors)
        .def_readwrite("p2_noise_sigma", &ModelConfig::p2_noise_sigma)
        .def_readwrite("train_frac", &ModelConfig::train_frac)
        .def_readwrite("val_frac", &ModelConfig::val_frac);

    py::class_<TrainedModels>(m, "TrainedModels")
        .def_readonly("p1", &TrainedModels::p1)
        .def_readonly("p2", &TrainedModels::p2)
        .def_readonly("p1_report", &TrainedModels::p1_report)
        .def_readonly("p2_report", &TrainedModels::p2_report);
    m.def("train_models", &train_models);
    m.def("p1_holdout_samples", &p1_holdout_samples);
}
