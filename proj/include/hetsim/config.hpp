#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hetsim/dataset.hpp"
#include "hetsim/regressor.hpp"
#include "hetsim/simulator.hpp"

namespace hetsim {

struct DatasetConfig {
    std::optional<std::string> path;            // CSV throughput table
    std::optional<SyntheticSpec> synthetic;     // or generated ground truth
};

struct PowerOverride {
    std::optional<double> idle;
    std::optional<double> per_unit_load;
    std::optional<int> capacity;
};

struct ClusterConfig {
    int servers = 2;
    /// Accelerator ids drawn from the dataset; empty means all of them.
    std::vector<std::string> accelerators;
    std::map<std::string, PowerOverride> power;
};

struct ModelConfig {
    std::vector<int> hidden = {64, 64};
    double learning_rate = 0.05;
    int epochs = 400;
    int batch_size = 32;
    int patience = 40;
    int p1_neighbors = 3;
    double p2_noise_sigma = 0.1;
    double train_frac = 0.7;
    double val_frac = 0.15;
    std::optional<std::string> p1_path;  // pre-trained model files
    std::optional<std::string> p2_path;
};

struct ScenarioConfig {
    std::vector<std::string> bootstrap_jobs;    // explicit, or drawn by fraction
    std::optional<double> bootstrap_fraction;   // of the table's jobs, default 0.5
    std::vector<std::string> arrivals;          // explicit order, or seeded shuffle
    std::optional<int> arrival_count;
    double noise_sigma = 0.0;
    int rounds = 0;
    double sla_min_throughput_factor = 0.5;
    int sla_distributability = 1;
    std::string estimator = "learned";  // or "oracle"
};

/// One experiment configuration. Parsed strictly: unknown keys are errors.
struct Config {
    uint64_t seed = 1;
    std::string output_dir = "out";
    DatasetConfig dataset;
    ClusterConfig cluster;
    ModelConfig models;
    ScenarioConfig scenario;
};

Config load_config(const std::string& path);
Config parse_config(const std::string& text, const std::string& origin);

GroundTruth config_ground_truth(const Config& cfg);
std::vector<AcceleratorType> config_accelerators(const Config& cfg, const GroundTruth& gt);

/// Resolves bootstrap set and arrival order deterministically from the seed
/// when the config leaves them implicit.
Scenario config_scenario(const Config& cfg, const GroundTruth& gt);

Hyperparams config_hyperparams(const Config& cfg);

}  // namespace hetsim
