#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hetsim/catalog.hpp"
#include "hetsim/dataset.hpp"
#include "hetsim/regressor.hpp"

namespace hetsim {

/// Input layout of the initial estimator: for a new job j1 with catalog
/// neighbor j2, accelerator a and co-location candidate j3,
///   [psi(j2) | psi(j3) | onehot(a) | T(a,j2,{j2,j3}) | T(a,j3,{j2,j3}) | psi(j1)]
/// and the two outputs are the throughputs of j1 and j3 under {j1,j3}.
int p1_input_width(const FeatureSchema& schema);

/// Input layout of the refinement estimator: for combination c = {j1,j2}
/// measured on a1 and refined toward a2,
///   [psi(j1) | psi(j2) | onehot(a1) | onehot(a2) |
///    est(a1,j1) est(a1,j2) | meas(a1,j1) meas(a1,j2) | est(a2,j1) est(a2,j2)]
/// outputting the refined throughputs of j1 and j2 on a2.
int p2_input_width(const FeatureSchema& schema);

struct P1BuildOptions {
    int neighbors = 3;  // top-k neighbor pairs per target job during training
    /// Jobs whose throughputs form the targets; empty means all table jobs.
    std::vector<std::string> target_jobs;
    /// Jobs usable as neighbors / co-location partners; empty means all.
    std::vector<std::string> pool_jobs;
};

std::vector<Sample> build_p1_samples(const GroundTruth& gt, const P1BuildOptions& opts = {});

struct P2BuildOptions {
    /// Combinations are drawn from members of this pool; empty means all.
    std::vector<std::string> pool_jobs;
    /// If nonempty, keep only combinations with at least one member here.
    std::vector<std::string> require_member;
};

/// Prior estimates are the true values under multiplicative Gaussian noise
/// (1 + N(0, sigma)), clamped to [0, 1]; the a1 observation is exact.
std::vector<Sample> build_p2_samples(const GroundTruth& gt, double estimate_noise_sigma, uint64_t seed,
                                     const P2BuildOptions& opts = {});

struct InitialEstimate {
    std::string acc_id;
    Combination combo;
    std::string job_id;
    double value = 0.0;
    bool fallback = false;  // neighbor-copy instead of a model prediction
};

/// Runs the initial estimator for a newly registered job against every
/// accelerator and every active co-location candidate (plus the solo case),
/// writing the resulting first estimates into the catalog. When the inputs
/// cannot be assembled from the neighbor's records, falls back to copying
/// the neighbor's values directly.
std::vector<InitialEstimate> estimate_initial(const Regressor& p1, Catalog& catalog, const JobSpec& new_job,
                                              const std::vector<std::string>& active_jobs);

struct RefineInput {
    std::string source_acc;                  // a1, where the measurement happened
    Combination combo;                       // the measured combination
    std::map<std::string, double> measured;  // job id -> measured throughput
};

struct AppendedEstimate {
    std::string acc_id;
    std::string job_id;
    Combination combo;
    double value = 0.0;
    int round_index = 0;  // index within the record's refinement set
};

struct SkippedTarget {
    std::string acc_id;
    std::string reason;
};

struct RefineResult {
    std::vector<AppendedEstimate> appended;
    std::vector<SkippedTarget> skipped;
};

/// Records the measurement, then propagates it to every other accelerator
/// type in target_accs via the refinement estimator, appending to the
/// affected refinement sets. Targets lacking prior estimates are skipped.
RefineResult refine(const Regressor& p2, Catalog& catalog, const RefineInput& input,
                    const std::vector<std::string>& target_accs);

/// Mean absolute error of (clamped) predictions over the samples.
double prediction_mae(const Regressor& model, const std::vector<Sample>& samples, bool clamp01 = true);

double clamp01(double v);

}  // namespace hetsim
