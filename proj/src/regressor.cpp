#include "hetsim/regressor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "hetsim/rng.hpp"

namespace hetsim {

namespace {

constexpr const char* kMagic = "hetsim-regressor";
constexpr const char* kVersion = "v1";

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

}  // namespace

Regressor::Regressor(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
    if (sizes_.size() < 2) throw std::invalid_argument("regressor needs at least input and output layers");
    size_t total = 0;
    for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
        if (sizes_[l] < 1 || sizes_[l + 1] < 1) throw std::invalid_argument("layer sizes must be >= 1");
        LayerView v;
        v.n_in = sizes_[l];
        v.n_out = sizes_[l + 1];
        v.w_ofs = total;
        total += static_cast<size_t>(v.n_in) * v.n_out;
        v.b_ofs = total;
        total += v.n_out;
        layers_.push_back(v);
    }
    params_.assign(total, 0.0);
}

Regressor::Regressor(std::vector<int> layer_sizes, uint64_t seed) : Regressor(std::move(layer_sizes)) {
    Rng rng(seed, "regressor-init");
    for (const auto& l : layers_) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(l.n_in));
        for (int i = 0; i < l.n_out * l.n_in; ++i) params_[l.w_ofs + i] = rng.uniform(-scale, scale);
        // biases start at zero
    }
}

void Regressor::forward(std::span<const double> input, std::vector<std::vector<double>>& acts) const {
    if (static_cast<int>(input.size()) != input_size())
        throw std::invalid_argument("input width " + std::to_string(input.size()) + " does not match model input " +
                                    std::to_string(input_size()));
    acts.assign(sizes_.size(), {});
    acts[0].assign(input.begin(), input.end());
    for (size_t l = 0; l < layers_.size(); ++l) {
        const auto& lv = layers_[l];
        const bool hidden = l + 1 < layers_.size();
        auto& out = acts[l + 1];
        out.assign(lv.n_out, 0.0);
        const double* w = params_.data() + lv.w_ofs;
        const double* b = params_.data() + lv.b_ofs;
        const double* in = acts[l].data();
        for (int o = 0; o < lv.n_out; ++o) {
            double z = b[o];
            const double* row = w + static_cast<size_t>(o) * lv.n_in;
            for (int i = 0; i < lv.n_in; ++i) z += row[i] * in[i];
            out[o] = hidden ? std::tanh(z) : z;
        }
    }
}

std::vector<double> Regressor::predict(std::span<const double> input) const {
    std::vector<std::vector<double>> acts;
    forward(input, acts);
    return acts.back();
}

double Regressor::sample_loss(const Sample& s) const {
    if (static_cast<int>(s.target.size()) != output_size())
        throw std::invalid_argument("target width does not match model output");
    std::vector<std::vector<double>> acts;
    forward(s.input, acts);
    const auto& out = acts.back();
    double loss = 0.0;
    for (size_t i = 0; i < out.size(); ++i) {
        const double e = out[i] - s.target[i];
        loss += e * e;
    }
    return loss / static_cast<double>(out.size());
}

double Regressor::sample_loss_grad(const Sample& s, std::vector<double>& grad) const {
    if (static_cast<int>(s.target.size()) != output_size())
        throw std::invalid_argument("target width does not match model output");
    std::vector<std::vector<double>> acts;
    forward(s.input, acts);
    const auto& out = acts.back();
    const int n_out = output_size();

    double loss = 0.0;
    std::vector<double> delta(n_out);
    for (int i = 0; i < n_out; ++i) {
        const double e = out[i] - s.target[i];
        loss += e * e;
        delta[i] = 2.0 * e / n_out;  // d loss / d output
    }
    loss /= n_out;

    // backprop through linear output and tanh hidden layers
    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
        const auto& lv = layers_[static_cast<size_t>(l)];
        const double* in = acts[static_cast<size_t>(l)].data();
        double* gw = grad.data() + lv.w_ofs;
        double* gb = grad.data() + lv.b_ofs;
        for (int o = 0; o < lv.n_out; ++o) {
            gb[o] += delta[static_cast<size_t>(o)];
            double* row = gw + static_cast<size_t>(o) * lv.n_in;
            for (int i = 0; i < lv.n_in; ++i) row[i] += delta[static_cast<size_t>(o)] * in[i];
        }
        if (l == 0) break;
        const double* w = params_.data() + lv.w_ofs;
        std::vector<double> prev(lv.n_in, 0.0);
        for (int i = 0; i < lv.n_in; ++i) {
            double g = 0.0;
            for (int o = 0; o < lv.n_out; ++o) g += w[static_cast<size_t>(o) * lv.n_in + i] * delta[static_cast<size_t>(o)];
            const double a = acts[static_cast<size_t>(l)][static_cast<size_t>(i)];
            prev[static_cast<size_t>(i)] = g * (1.0 - a * a);  // tanh'
        }
        delta = std::move(prev);
    }
    return loss;
}

std::pair<double, double> Regressor::evaluate(const std::vector<Sample>& samples) const {
    if (samples.empty()) return {0.0, 0.0};
    double se = 0.0, ae = 0.0;
    size_t n = 0;
    std::vector<std::vector<double>> acts;
    for (const auto& s : samples) {
        forward(s.input, acts);
        const auto& out = acts.back();
        if (s.target.size() != out.size()) throw std::invalid_argument("target width does not match model output");
        for (size_t i = 0; i < out.size(); ++i) {
            const double e = out[i] - s.target[i];
            se += e * e;
            ae += std::abs(e);
            ++n;
        }
    }
    return {se / n, ae / n};
}

void Regressor::check_finite() const {
    for (double p : params_)
        if (!std::isfinite(p)) throw std::runtime_error("training diverged: non-finite parameters");
}

TrainReport Regressor::train(const std::vector<Sample>& train_samples, const std::vector<Sample>& val_samples,
                             const Hyperparams& hp) {
    if (train_samples.empty()) throw std::invalid_argument("no training samples");
    if (hp.learning_rate <= 0.0 || hp.epochs < 1 || hp.batch_size < 1)
        throw std::invalid_argument("bad hyperparameters");
    for (const auto& s : train_samples)
        if (static_cast<int>(s.input.size()) != input_size() || static_cast<int>(s.target.size()) != output_size())
            throw std::invalid_argument("sample width does not match model");
    for (const auto& s : val_samples)
        if (static_cast<int>(s.input.size()) != input_size() || static_cast<int>(s.target.size()) != output_size())
            throw std::invalid_argument("sample width does not match model");

    Rng rng(hp.shuffle_seed, "train-shuffle");
    std::vector<size_t> order(train_samples.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> grad(params_.size(), 0.0);
    std::vector<double> best_params = params_;
    double best_val = std::numeric_limits<double>::infinity();
    int since_best = 0;
    int epochs_run = 0;

    const bool has_val = !val_samples.empty();
    for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(hp.batch_size)) {
            const size_t end = std::min(order.size(), start + static_cast<size_t>(hp.batch_size));
            std::fill(grad.begin(), grad.end(), 0.0);
            for (size_t k = start; k < end; ++k) sample_loss_grad(train_samples[order[k]], grad);
            const double inv = 1.0 / static_cast<double>(end - start);
            for (size_t p = 0; p < params_.size(); ++p) params_[p] -= hp.learning_rate * inv * grad[p];
        }
        check_finite();
        epochs_run = epoch;

        const double val_loss = has_val ? evaluate(val_samples).first : evaluate(train_samples).first;
        if (!std::isfinite(val_loss)) throw std::runtime_error("training diverged: non-finite loss");
        if (val_loss < best_val) {
            best_val = val_loss;
            best_params = params_;
            since_best = 0;
        } else if (++since_best > hp.patience) {
            break;
        }
    }
    params_ = best_params;

    TrainReport r;
    r.epochs_run = epochs_run;
    auto [tl, tm] = evaluate(train_samples);
    r.final_train_loss = tl;
    r.final_train_mae = tm;
    auto [vl, vm] = has_val ? evaluate(val_samples) : std::make_pair(tl, tm);
    r.final_val_loss = vl;
    r.final_val_mae = vm;
    return r;
}

double Regressor::gradient_check(const Sample& sample, double epsilon) const {
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    std::vector<double> analytic(params_.size(), 0.0);
    sample_loss_grad(sample, analytic);

    Regressor probe = *this;
    double worst = 0.0;
    for (size_t p = 0; p < params_.size(); ++p) {
        const double saved = probe.params_[p];
        probe.params_[p] = saved + epsilon;
        const double up = probe.sample_loss(sample);
        probe.params_[p] = saved - epsilon;
        const double down = probe.sample_loss(sample);
        probe.params_[p] = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double denom = std::max(std::abs(analytic[p]) + std::abs(numeric), 1e-6);
        worst = std::max(worst, std::abs(analytic[p] - numeric) / denom);
    }
    return worst;
}

void Regressor::save(std::ostream& out) const {
    out << kMagic << ' ' << kVersion << '\n';
    out << "layers";
    for (int s : sizes_) out << ' ' << s;
    out << '\n';
    out << "params " << params_.size() << '\n';
    for (size_t i = 0; i < params_.size(); ++i) out << format_double(params_[i]) << '\n';
}

void Regressor::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    save(out);
}

Regressor Regressor::load(std::istream& in) {
    std::string magic, version;
    if (!(in >> magic >> version) || magic != kMagic)
        throw std::runtime_error("not a regressor model file");
    if (version != kVersion) throw std::runtime_error("unsupported model file version '" + version + "'");
    std::string tag;
    if (!(in >> tag) || tag != "layers") throw std::runtime_error("corrupt model file: missing layers");
    std::string rest;
    std::getline(in, rest);
    std::istringstream ls(rest);
    std::vector<int> sizes;
    int v;
    while (ls >> v) sizes.push_back(v);
    Regressor model(std::move(sizes));
    size_t count = 0;
    if (!(in >> tag >> count) || tag != "params") throw std::runtime_error("corrupt model file: missing params");
    if (count != model.params_.size()) throw std::runtime_error("corrupt model file: parameter count mismatch");
    for (size_t i = 0; i < count; ++i) {
        std::string word;
        if (!(in >> word)) throw std::runtime_error("corrupt model file: truncated parameters");
        double d = 0.0;
        auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), d);
        if (ec != std::errc() || ptr != word.data() + word.size())
            throw std::runtime_error("corrupt model file: bad parameter '" + word + "'");
        model.params_[i] = d;
    }
    return model;
}

Regressor Regressor::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file '" + path + "'");
    return load(in);
}

}  // namespace hetsim
