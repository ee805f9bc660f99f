#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetsim/types.hpp"

namespace hetsim {

using FeatureVector = std::vector<double>;

/// Fixed encoding layout for one throughput table: a one-hot family block
/// followed by a scaled log2(batch) component and a scaled replication
/// component. The sentinel job encodes to all zeros.
struct FeatureSchema {
    std::vector<std::string> families;         // sorted; one-hot order
    double log2_batch_min = 0.0;
    double log2_batch_max = 0.0;
    double replication_min = 1.0;
    double replication_max = 1.0;
    std::vector<std::string> accelerator_ids;  // sorted; one-hot order

    int feature_length() const { return static_cast<int>(families.size()) + 2; }
    int accelerator_count() const { return static_cast<int>(accelerator_ids.size()); }
    int accelerator_index(const std::string& acc_id) const;  // -1 if unknown
};

FeatureVector encode(const JobSpec& spec, const FeatureSchema& schema);
double encoding_distance(const FeatureVector& a, const FeatureVector& b);

/// Candidate ids sorted by (encoding distance to query, id), nearest first,
/// truncated to k. The sentinel and the query's own id are the caller's
/// problem to exclude.
std::vector<std::string> nearest_neighbors(const JobSpec& query, const std::vector<JobSpec>& candidates,
                                           const FeatureSchema& schema, int k);

/// The complete measured throughput table, solo and pairwise, for a set of
/// jobs on a set of accelerator types. Raw values are iterations/second;
/// normalized values are raw / normalizer and live in [0, 1].
class GroundTruth {
  public:
    const std::vector<AcceleratorType>& accelerators() const { return accelerators_; }
    const std::vector<JobSpec>& jobs() const { return jobs_; }
    const JobSpec& job(const std::string& job_id) const;
    bool has_job(const std::string& job_id) const;
    double normalizer() const { return normalizer_; }
    const FeatureSchema& schema() const { return schema_; }

    double solo_raw(const std::string& acc_id, const std::string& job_id) const;
    /// Raw throughput of `job_id` when co-located with `other_id` on `acc_id`.
    double paired_raw(const std::string& acc_id, const std::string& job_id, const std::string& other_id) const;

    /// Normalized throughput of `job_id` under combination `c` (solo or pair).
    double value(const std::string& acc_id, const std::string& job_id, const Combination& c) const;
    std::optional<double> value_opt(const std::string& acc_id, const std::string& job_id, const Combination& c) const;
    bool has(const std::string& acc_id, const std::string& job_id, const Combination& c) const;

    /// All combinations with entries for every member on every accelerator.
    std::vector<Combination> combinations() const;

    // Construction is by the loader / generator only.
    struct Builder;

  private:
    std::vector<AcceleratorType> accelerators_;  // sorted by acc_id
    std::vector<JobSpec> jobs_;                  // sorted by job_id
    std::map<std::pair<std::string, std::string>, double> solo_;  // (acc, job) -> raw
    // (acc, lexicographically sorted pair) -> raw throughputs in member order
    std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, double>> paired_;
    double normalizer_ = 1.0;
    FeatureSchema schema_;

    friend struct Builder;
};

struct GroundTruth::Builder {
    std::vector<AcceleratorType> accelerators;
    std::vector<JobSpec> jobs;
    std::map<std::pair<std::string, std::string>, double> solo;
    std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, double>> paired;

    void add_pair(const std::string& acc, const std::string& j1, double t1, const std::string& j2, double t2);
    /// Validates completeness and symmetry, derives schema and normalizer.
    GroundTruth finish() &&;
};

/// Parameters of the correlated synthetic table. Solo throughput follows the
/// product form family_base * accelerator_speed * batch_curve; a pair loses
/// interference * contention of its solo value, with contention in [0, 1]
/// derived from the two job encodings.
struct SyntheticSpec {
    int accelerators = 3;
    int families = 4;
    int batches_per_family = 4;
    double interference = 0.3;
    uint64_t seed = 0;
    double speed_base = 1.6;  // accelerator i is speed_base^i times acc 0
};

GroundTruth generate_synthetic(const SyntheticSpec& spec);

/// CSV with header
///   model,batch_size,accelerator,co_model,co_batch_size,throughput_self,throughput_other
/// where an empty co_model marks a solo row. Parse errors carry line numbers.
GroundTruth load_table(const std::string& path);
GroundTruth load_table(std::istream& in, const std::string& origin);
void save_table(const GroundTruth& gt, const std::string& path);
void save_table(const GroundTruth& gt, std::ostream& out);

struct JobSplit {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
};

/// Partition by job so test jobs are never seen in training.
JobSplit split_jobs(const GroundTruth& gt, double train_frac, double val_frac, uint64_t seed);

}  // namespace hetsim
