#include "hetsim/training.hpp"

#include <algorithm>

#include "hetsim/rng.hpp"

namespace hetsim {

std::vector<Sample> p1_holdout_samples(const GroundTruth& gt, const std::vector<std::string>& target_jobs,
                                       const std::vector<std::string>& pool_jobs, int neighbors) {
    P1BuildOptions o;
    o.neighbors = neighbors;
    o.target_jobs = target_jobs;
    o.pool_jobs = pool_jobs;
    return build_p1_samples(gt, o);
}

TrainedModels train_models(const GroundTruth& gt, const ModelConfig& mc, const JobSplit& split, uint64_t seed) {
    const FeatureSchema& schema = gt.schema();

    std::vector<int> p1_sizes = {p1_input_width(schema)};
    std::vector<int> p2_sizes = {p2_input_width(schema)};
    for (int h : mc.hidden) {
        p1_sizes.push_back(h);
        p2_sizes.push_back(h);
    }
    p1_sizes.push_back(2);
    p2_sizes.push_back(2);

    Hyperparams hp;
    hp.learning_rate = mc.learning_rate;
    hp.epochs = mc.epochs;
    hp.batch_size = mc.batch_size;
    hp.patience = mc.patience;

    P1BuildOptions p1_train_opts{mc.p1_neighbors, split.train, split.train};
    P1BuildOptions p1_val_opts{mc.p1_neighbors, split.val, split.train};
    const auto p1_train = build_p1_samples(gt, p1_train_opts);
    const auto p1_val = build_p1_samples(gt, p1_val_opts);
    if (p1_train.empty()) throw std::runtime_error("no P1 training samples; table too small for the split");

    std::vector<std::string> train_and_val = split.train;
    train_and_val.insert(train_and_val.end(), split.val.begin(), split.val.end());
    std::sort(train_and_val.begin(), train_and_val.end());

    P2BuildOptions p2_train_opts{split.train, {}};
    P2BuildOptions p2_val_opts{train_and_val, split.val};
    const auto p2_train = build_p2_samples(gt, mc.p2_noise_sigma, derive_seed(seed, "p2-train"), p2_train_opts);
    const auto p2_val = build_p2_samples(gt, mc.p2_noise_sigma, derive_seed(seed, "p2-val"), p2_val_opts);
    if (p2_train.empty()) throw std::runtime_error("no P2 training samples; table too small for the split");

    TrainedModels out{Regressor(p1_sizes, derive_seed(seed, "p1-init")),
                      Regressor(p2_sizes, derive_seed(seed, "p2-init")),
                      {},
                      {}};
    Hyperparams hp1 = hp;
    hp1.shuffle_seed = derive_seed(seed, "p1-shuffle");
    out.p1_report = out.p1.train(p1_train, p1_val, hp1);
    Hyperparams hp2 = hp;
    hp2.shuffle_seed = derive_seed(seed, "p2-shuffle");
    out.p2_report = out.p2.train(p2_train, p2_val, hp2);
    return out;
}

}  // namespace hetsim
