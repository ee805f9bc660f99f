#pragma once

#include <cstdint>

#include "hetsim/config.hpp"
#include "hetsim/dataset.hpp"
#include "hetsim/estimation.hpp"
#include "hetsim/regressor.hpp"

namespace hetsim {

struct TrainedModels {
    Regressor p1;
    Regressor p2;
    TrainReport p1_report;
    TrainReport p2_report;
};

/// Builds P1/P2 samples from the ground truth restricted to the split's
/// training jobs (validation targets stay out of the training pool) and
/// trains both regressors. All randomness derives from `seed`.
TrainedModels train_models(const GroundTruth& gt, const ModelConfig& mc, const JobSplit& split, uint64_t seed);

/// Held-out P1 samples: targets from `target_jobs`, neighbors and partners
/// from `pool_jobs` only, mirroring deployment where a new job leans on
/// catalog history.
std::vector<Sample> p1_holdout_samples(const GroundTruth& gt, const std::vector<std::string>& target_jobs,
                                       const std::vector<std::string>& pool_jobs, int neighbors);

}  // namespace hetsim
