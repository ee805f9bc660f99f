#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hetsim/dataset.hpp"
#include "hetsim/types.hpp"

namespace hetsim {

/// One throughput record: the accumulating refinement set (entry 0 is the
/// initial estimate when the record was estimated first) and, once the
/// monitor has observed the combination, the measurement.
struct EstimateRecord {
    std::string acc_id;
    std::string job_id;
    Combination combo;
    std::vector<double> refinement_set;
    std::optional<double> measurement;
};

/// Registry of jobs and the evolving per-(accelerator, job, combination)
/// throughput knowledge. Measurements take precedence over estimates; the
/// usable estimate is the arithmetic mean of the refinement set.
///
/// Single-writer: transferable between threads, not concurrently mutable.
class Catalog {
  public:
    Catalog(FeatureSchema schema, std::vector<AcceleratorType> accelerators);

    const FeatureSchema& schema() const { return schema_; }
    const std::vector<AcceleratorType>& accelerators() const { return accelerators_; }
    bool has_accelerator(const std::string& acc_id) const;

    /// Registers a job; an empty job_id gets the family-batch default.
    /// The sentinel is pre-registered at construction.
    std::string register_job(JobSpec spec);
    bool has_job(const std::string& job_id) const;
    const JobSpec& job(const std::string& job_id) const;
    std::vector<std::string> job_ids() const;  // sorted, includes the sentinel
    size_t job_count() const { return jobs_.size(); }

    /// Most similar registered non-sentinel job by encoding distance,
    /// ties broken toward the smaller job id.
    std::string nearest_job(const JobSpec& query, const std::set<std::string>& exclude = {}) const;

    /// Appends an estimate; returns its index within the refinement set.
    int put_estimate(const std::string& acc_id, const std::string& job_id, const Combination& combo, double value);
    void record_measurement(const std::string& acc_id, const std::string& job_id, const Combination& combo,
                            double value);

    /// Measurement if present, else the mean of the refinement set.
    /// The sentinel job reads as 0 on every accelerator.
    double lookup(const std::string& acc_id, const std::string& job_id, const Combination& combo) const;
    std::optional<double> lookup_opt(const std::string& acc_id, const std::string& job_id,
                                     const Combination& combo) const;
    /// Mean of the refinement set alone, ignoring any measurement.
    std::optional<double> estimate_mean(const std::string& acc_id, const std::string& job_id,
                                        const Combination& combo) const;
    bool has_record(const std::string& acc_id, const std::string& job_id, const Combination& combo) const;
    bool has_measurement(const std::string& acc_id, const std::string& job_id, const Combination& combo) const;
    const EstimateRecord* find(const std::string& acc_id, const std::string& job_id, const Combination& combo) const;

    /// Records in deterministic key order.
    std::vector<const EstimateRecord*> records() const;

    /// Snapshot: one record per line, tab-separated fields
    ///   acc <TAB> job <TAB> members(comma) <TAB> refinement_set(comma) <TAB> measurement-or-empty
    /// Value-exact round trip. Import requires jobs to be registered already.
    void export_snapshot(std::ostream& out) const;
    void export_snapshot(const std::string& path) const;
    void import_snapshot(std::istream& in);
    void import_snapshot(const std::string& path);

  private:
    using Key = std::tuple<std::string, std::string, Combination>;

    const JobSpec& require_job(const std::string& job_id) const;
    void validate_entry(const std::string& acc_id, const std::string& job_id, const Combination& combo,
                        double value) const;

    FeatureSchema schema_;
    std::vector<AcceleratorType> accelerators_;
    std::map<std::string, JobSpec> jobs_;
    std::map<Key, EstimateRecord> records_;
};

}  // namespace hetsim
