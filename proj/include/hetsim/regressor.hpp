#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hetsim {

/// One supervised example. Used for both estimator stages.
struct Sample {
    std::vector<double> input;
    std::vector<double> target;
};

struct Hyperparams {
    double learning_rate = 0.05;
    int epochs = 400;
    int batch_size = 32;
    int patience = 40;       // early-stopping patience on validation loss
    uint64_t shuffle_seed = 1;
};

struct TrainReport {
    int epochs_run = 0;
    double final_train_loss = 0.0;  // mean squared error
    double final_val_loss = 0.0;
    double final_train_mae = 0.0;
    double final_val_mae = 0.0;
};

/// Multilayer feedforward regressor: tanh hidden layers, linear output,
/// trained by plain mini-batch gradient descent. Deterministic given seeds.
/// Prediction on a const model is thread-safe; training is single-threaded.
class Regressor {
  public:
    Regressor(std::vector<int> layer_sizes, uint64_t seed);

    const std::vector<int>& layer_sizes() const { return sizes_; }
    int input_size() const { return sizes_.front(); }
    int output_size() const { return sizes_.back(); }

    std::vector<double> predict(std::span<const double> input) const;

    /// Minimizes MSE over the training samples; early-stops on validation
    /// loss and restores the best-epoch weights. Throws on dimension
    /// mismatch and on divergence (non-finite loss).
    TrainReport train(const std::vector<Sample>& train_samples, const std::vector<Sample>& val_samples,
                      const Hyperparams& hp);

    /// Max relative deviation between analytic parameter gradients and
    /// central finite differences of the per-sample MSE loss.
    double gradient_check(const Sample& sample, double epsilon) const;

    /// Versioned text serialization; predictions round-trip bit-identically.
    void save(std::ostream& out) const;
    void save(const std::string& path) const;
    static Regressor load(std::istream& in);
    static Regressor load(const std::string& path);

    /// (loss, mae) over all output components of the given samples.
    std::pair<double, double> evaluate(const std::vector<Sample>& samples) const;

    // Flat parameter access, layer by layer (weights then biases); test hook.
    std::vector<double>& parameters() { return params_; }
    const std::vector<double>& parameters() const { return params_; }

  private:
    struct LayerView {
        size_t w_ofs;  // n_out x n_in, row-major
        size_t b_ofs;  // n_out
        int n_in;
        int n_out;
    };

    explicit Regressor(std::vector<int> layer_sizes);  // uninitialized params, loader use
    void forward(std::span<const double> input, std::vector<std::vector<double>>& activations) const;
    double sample_loss_grad(const Sample& s, std::vector<double>& grad) const;  // accumulates
    double sample_loss(const Sample& s) const;
    void check_finite() const;

    std::vector<int> sizes_;
    std::vector<LayerView> layers_;
    std::vector<double> params_;
};

}  // namespace hetsim
