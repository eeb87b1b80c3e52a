#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dnsid/dataset.hpp"
#include "dnsid/rng.hpp"

namespace dnsid::mlp {

struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyTestSet : std::runtime_error {
    EmptyTestSet() : std::runtime_error("empty test set") {}
};

struct ModelConfig {
    int input_dim = 0;     // equals the hash resolution h
    int hidden_layers = 1; // 1, 2 or 3 in the sweep
    int hidden_width = 64;
    int output_dim = 0;    // number of classes
    std::uint64_t seed = 0;
};

// Dense layer, weights stored row-major as out x in.
struct Layer {
    int in = 0;
    int out = 0;
    std::vector<double> w;
    std::vector<double> b;

    Layer() = default;
    Layer(int in_, int out_) : in(in_), out(out_), w(static_cast<std::size_t>(in_) * out_, 0.0), b(static_cast<std::size_t>(out_), 0.0) {}
};

// Feed-forward classifier: ReLU hidden layers, softmax output.
struct Network {
    ModelConfig config;
    std::vector<Layer> layers;
};

// Minimal row-major matrix for batched passes.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
};

// He-style uniform fan-in init for the rectilinear layers, biases zero.
// Weight draw order is fixed (layer by layer, row-major), so a seed pins
// the whole parameter vector.
inline Network init_network(const ModelConfig& config) {
    if (config.input_dim < 1 || config.output_dim < 2 || config.hidden_layers < 1 || config.hidden_width < 1)
        throw ShapeMismatch("bad model config");
    Network net;
    net.config = config;
    Rng rng(config.seed);
    int prev = config.input_dim;
    for (int l = 0; l < config.hidden_layers + 1; ++l) {
        const int width = (l == config.hidden_layers) ? config.output_dim : config.hidden_width;
        Layer layer(prev, width);
        const double limit = std::sqrt(6.0 / static_cast<double>(prev));
        for (double& w : layer.w) w = rng.uniform(-limit, limit);
        net.layers.push_back(std::move(layer));
        prev = width;
    }
    return net;
}

namespace detail {

// out = X * W^T + b, row by row
inline void affine(const Matrix& x, const Layer& layer, Matrix& out) {
    out.rows = x.rows;
    out.cols = static_cast<std::size_t>(layer.out);
    out.data.assign(out.rows * out.cols, 0.0);
    for (std::size_t i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double* oi = out.row(i);
        for (int o = 0; o < layer.out; ++o) {
            const double* w = layer.w.data() + static_cast<std::size_t>(o) * layer.in;
            double acc = layer.b[static_cast<std::size_t>(o)];
            for (int k = 0; k < layer.in; ++k) acc += w[k] * xi[k];
            oi[o] = acc;
        }
    }
}

inline void relu_inplace(Matrix& m) {
    for (double& v : m.data) v = v > 0.0 ? v : 0.0;
}

// Row-wise softmax with max subtraction.
inline void softmax_inplace(Matrix& m) {
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* r = m.row(i);
        double mx = r[0];
        for (std::size_t c = 1; c < m.cols; ++c) mx = std::max(mx, r[c]);
        double sum = 0.0;
        for (std::size_t c = 0; c < m.cols; ++c) {
            r[c] = std::exp(r[c] - mx);
            sum += r[c];
        }
        for (std::size_t c = 0; c < m.cols; ++c) r[c] /= sum;
    }
}

// acts[0] = X, acts[l+1] = activation of layer l; final entry is the
// softmax output.
inline void forward_pass(const Network& net, const Matrix& x, std::vector<Matrix>& acts) {
    acts.resize(net.layers.size() + 1);
    acts[0] = x;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        affine(acts[l], net.layers[l], acts[l + 1]);
        if (l + 1 < net.layers.size())
            relu_inplace(acts[l + 1]);
        else
            softmax_inplace(acts[l + 1]);
    }
}

inline std::size_t argmax_row(const double* r, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < n; ++c)
        if (r[c] > r[best]) best = c;
    return best;
}

} // namespace detail

inline Matrix forward_batch(const Network& net, const Matrix& x) {
    if (x.cols != static_cast<std::size_t>(net.config.input_dim))
        throw DimensionMismatch("input has " + std::to_string(x.cols) + " features, network expects " +
                                std::to_string(net.config.input_dim));
    std::vector<Matrix> acts;
    detail::forward_pass(net, x, acts);
    return std::move(acts.back());
}

inline std::vector<double> forward(const Network& net, const std::vector<double>& x) {
    Matrix m(1, x.size());
    std::copy(x.begin(), x.end(), m.data.begin());
    Matrix probs = forward_batch(net, m);
    return probs.data;
}

// Categorical cross-entropy, mean over the batch. Probabilities are
// floored at 1e-12 before the log; inference never applies the floor.
inline double loss(const Matrix& probs, const Matrix& labels) {
    if (probs.rows != labels.rows || probs.cols != labels.cols) throw ShapeMismatch("probs/labels shapes differ");
    if (probs.rows == 0) throw ShapeMismatch("empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        const double* p = probs.row(i);
        const double* y = labels.row(i);
        for (std::size_t c = 0; c < probs.cols; ++c) {
            if (y[c] != 0.0) total -= y[c] * std::log(std::max(p[c], 1e-12));
        }
    }
    return total / static_cast<double>(probs.rows);
}

struct Gradients {
    std::vector<Layer> layers; // same shapes as the network
};

// Backpropagation of the cross-entropy loss; softmax and loss fuse to
// (probs - labels) / N at the output pre-activation.
inline Gradients backward(const Network& net, const Matrix& x, const Matrix& labels) {
    if (x.rows == 0) throw ShapeMismatch("empty batch");
    if (labels.cols != static_cast<std::size_t>(net.config.output_dim)) throw ShapeMismatch("label width != output dim");
    if (labels.rows != x.rows) throw ShapeMismatch("batch sizes differ");

    std::vector<Matrix> acts;
    detail::forward_pass(net, x, acts);

    Gradients grads;
    grads.layers.reserve(net.layers.size());
    for (const Layer& l : net.layers) grads.layers.emplace_back(l.in, l.out);

    const double inv_n = 1.0 / static_cast<double>(x.rows);
    Matrix delta = acts.back();
    for (std::size_t i = 0; i < delta.rows; ++i) {
        double* d = delta.row(i);
        const double* y = labels.row(i);
        for (std::size_t c = 0; c < delta.cols; ++c) d[c] = (d[c] - y[c]) * inv_n;
    }

    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const Matrix& a_prev = acts[l];
        Layer& g = grads.layers[l];
        // dW = delta^T * a_prev, db = column sums of delta
        for (std::size_t i = 0; i < delta.rows; ++i) {
            const double* d = delta.row(i);
            const double* a = a_prev.row(i);
            for (int o = 0; o < g.out; ++o) {
                const double dv = d[static_cast<std::size_t>(o)];
                if (dv == 0.0) continue;
                double* gw = g.w.data() + static_cast<std::size_t>(o) * g.in;
                for (int k = 0; k < g.in; ++k) gw[k] += dv * a[k];
                g.b[static_cast<std::size_t>(o)] += dv;
            }
        }
        if (l == 0) break;
        // delta_{l-1} = (delta_l * W_l) ⊙ relu'(z_{l-1}); a_prev > 0 iff z > 0
        const Layer& layer = net.layers[l];
        Matrix next(delta.rows, static_cast<std::size_t>(layer.in));
        for (std::size_t i = 0; i < delta.rows; ++i) {
            const double* d = delta.row(i);
            const double* a = a_prev.row(i);
            double* nd = next.row(i);
            for (int k = 0; k < layer.in; ++k) {
                if (a[k] <= 0.0) continue; // ReLU gate
                double acc = 0.0;
                for (int o = 0; o < layer.out; ++o)
                    acc += d[o] * layer.w[static_cast<std::size_t>(o) * layer.in + k];
                nd[k] = acc;
            }
        }
        delta = std::move(next);
    }
    return grads;
}

// Adam with the fixed fingerprint: lr 1e-3, beta1 0.9, beta2 0.999,
// epsilon 1e-7.
struct AdamState {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-7;
    long timestep = 0;
    std::vector<Layer> m; // first moments, same shapes as the network
    std::vector<Layer> v; // second moments
};

inline void adam_step(AdamState& state, Network& net, const Gradients& grads) {
    if (state.m.empty()) {
        for (const Layer& l : net.layers) {
            state.m.emplace_back(l.in, l.out);
            state.v.emplace_back(l.in, l.out);
        }
    }
    if (grads.layers.size() != net.layers.size()) throw ShapeMismatch("gradient/network layer counts differ");
    ++state.timestep;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.timestep));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.timestep));
    auto update = [&](double& param, double g, double& m, double& v) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        const double mhat = m / bc1;
        const double vhat = v / bc2;
        param -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    };
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        Layer& layer = net.layers[l];
        const Layer& g = grads.layers[l];
        if (g.w.size() != layer.w.size() || g.b.size() != layer.b.size()) throw ShapeMismatch("gradient shape differs");
        for (std::size_t i = 0; i < layer.w.size(); ++i) update(layer.w[i], g.w[i], state.m[l].w[i], state.v[l].w[i]);
        for (std::size_t i = 0; i < layer.b.size(); ++i) update(layer.b[i], g.b[i], state.m[l].b[i], state.v[l].b[i]);
    }
}

struct TrainReport {
    int epochs_run = 0;
    std::vector<double> train_loss;
    std::vector<double> train_accuracy;
    std::vector<double> val_loss;
    std::vector<double> val_accuracy;
    bool stopped_early = false;
    int best_epoch = 0; // 1-based

    bool operator==(const TrainReport&) const = default;
};

constexpr int kMaxEpochs = 100;
constexpr int kEarlyStopPatience = 10;
constexpr int kBatchSize = 32;

namespace detail {

inline Matrix pack_features(const std::vector<dataset::Sample>& samples) {
    if (samples.empty()) return {};
    Matrix m(samples.size(), samples.front().features.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        std::copy(samples[i].features.begin(), samples[i].features.end(), m.row(i));
    return m;
}

inline Matrix pack_labels(const std::vector<dataset::Sample>& samples, std::size_t width) {
    Matrix m(samples.size(), width);
    for (std::size_t i = 0; i < samples.size(); ++i)
        m.row(i)[static_cast<std::size_t>(samples[i].label)] = 1.0;
    return m;
}

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

inline EvalResult evaluate(const Network& net, const Matrix& x, const Matrix& y) {
    Matrix probs = forward_batch(net, x);
    EvalResult r;
    r.loss = loss(probs, y);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < probs.rows; ++i) {
        std::size_t pred = argmax_row(probs.row(i), probs.cols);
        if (y.row(i)[pred] == 1.0) ++correct;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(probs.rows);
    return r;
}

} // namespace detail

// Mini-batch training (batch 32, reshuffled each epoch from the seeded
// generator) over at most 100 epochs. Early stopping watches validation
// categorical accuracy with patience 5 and restores the best epoch's
// weights. Identical (config, splits) give identical parameters.
inline std::pair<Network, TrainReport> train(const ModelConfig& config, const dataset::SplitDataset& splits) {
    if (splits.train.empty()) throw dataset::EmptyTrainingSet();
    for (const auto& s : splits.train) {
        if (s.features.size() != static_cast<std::size_t>(config.input_dim))
            throw DimensionMismatch("training sample width != input dim");
        if (s.one_hot.size() != static_cast<std::size_t>(config.output_dim))
            throw DimensionMismatch("training label width != output dim");
    }

    Network net = init_network(config);
    Rng rng(config.seed ^ 0x9e3779b97f4a7c15ull); // distinct stream from the init draws
    AdamState adam;

    const std::size_t n = splits.train.size();
    const std::size_t width = static_cast<std::size_t>(config.output_dim);
    Matrix val_x = detail::pack_features(splits.val);
    Matrix val_y = detail::pack_labels(splits.val, width);
    const bool have_val = !splits.val.empty();

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    TrainReport report;
    double best_val_acc = -1.0;
    int best_epoch = 0;
    int since_best = 0;
    std::vector<Layer> best_layers = net.layers;

    for (int epoch = 1; epoch <= kMaxEpochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        std::size_t epoch_correct = 0;
        for (std::size_t start = 0; start < n; start += kBatchSize) {
            const std::size_t rows = std::min<std::size_t>(kBatchSize, n - start);
            Matrix bx(rows, static_cast<std::size_t>(config.input_dim));
            Matrix by(rows, width);
            for (std::size_t r = 0; r < rows; ++r) {
                const dataset::Sample& s = splits.train[order[start + r]];
                std::copy(s.features.begin(), s.features.end(), bx.row(r));
                by.row(r)[static_cast<std::size_t>(s.label)] = 1.0;
            }

            std::vector<Matrix> acts;
            detail::forward_pass(net, bx, acts);
            const Matrix& probs = acts.back();
            epoch_loss += loss(probs, by) * static_cast<double>(rows);
            for (std::size_t r = 0; r < rows; ++r) {
                std::size_t pred = detail::argmax_row(probs.row(r), probs.cols);
                if (by.row(r)[pred] == 1.0) ++epoch_correct;
            }

            Gradients grads = backward(net, bx, by);
            adam_step(adam, net, grads);
        }

        report.train_loss.push_back(epoch_loss / static_cast<double>(n));
        report.train_accuracy.push_back(static_cast<double>(epoch_correct) / static_cast<double>(n));
        report.epochs_run = epoch;

        if (have_val) {
            detail::EvalResult ev = detail::evaluate(net, val_x, val_y);
            report.val_loss.push_back(ev.loss);
            report.val_accuracy.push_back(ev.accuracy);
            if (ev.accuracy > best_val_acc) {
                best_val_acc = ev.accuracy;
                best_epoch = epoch;
                best_layers = net.layers;
                since_best = 0;
            } else if (++since_best >= kEarlyStopPatience) {
                report.stopped_early = true;
                break;
            }
        } else {
            report.val_loss.push_back(0.0);
            report.val_accuracy.push_back(0.0);
            best_epoch = epoch;
        }
    }

    if (have_val) net.layers = best_layers;
    report.best_epoch = best_epoch;
    return {std::move(net), std::move(report)};
}

struct Metrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::vector<std::vector<int>> confusion; // [predicted][actual]
};

// Eq.-style macro F1: unweighted mean over classes of 2pr/(p+r), with a
// class scoring 0 when p + r == 0.
inline double macro_f1_from_confusion(const std::vector<std::vector<int>>& confusion) {
    const std::size_t c = confusion.size();
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
        long tp = confusion[j][j];
        long row = 0, col = 0;
        for (std::size_t q = 0; q < c; ++q) {
            row += confusion[j][q];
            col += confusion[q][j];
        }
        const double p = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
        const double r = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
        sum += (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    }
    return sum / static_cast<double>(c);
}

inline Metrics metrics(const Network& net, const std::vector<dataset::Sample>& test) {
    if (test.empty()) throw EmptyTestSet();
    const std::size_t c = static_cast<std::size_t>(net.config.output_dim);
    Metrics m;
    m.confusion.assign(c, std::vector<int>(c, 0));
    Matrix x = detail::pack_features(test);
    Matrix probs = forward_batch(net, x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        std::size_t pred = detail::argmax_row(probs.row(i), probs.cols);
        std::size_t actual = static_cast<std::size_t>(test[i].label);
        ++m.confusion[pred][actual];
        if (pred == actual) ++correct;
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    m.macro_f1 = macro_f1_from_confusion(m.confusion);
    return m;
}

} // namespace dnsid::mlp
