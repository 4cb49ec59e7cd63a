#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fracact/activations.hpp"
#include "fracact/dataset.hpp"
#include "fracact/errors.hpp"
#include "fracact/rng.hpp"
#include "fracact/tensor.hpp"

namespace fracact {

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct DenseLayer {
    Tensor weights; // in x out
    Tensor biases;  // out
    std::optional<ActivationSpec> activation; // last layer: none
};

struct MlpModel {
    std::vector<DenseLayer> layers;
    /// Total cached planes of the most recent forward; feeds the
    /// memory-vs-N measurement.
    std::optional<std::size_t> last_forward_planes;
};

enum class FdoInit { zero, uniform };

struct TrainConfig {
    int epochs = 200;
    int batch_size = 32;
    double learning_rate = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    double clip_max_norm = 10.0;
    double label_smoothing = 0.1;
    std::uint64_t seed = 1;
    FdoInit fdo_init = FdoInit::zero;
    /// Fractional orders use learning_rate * fdo_lr_scale.
    double fdo_lr_scale = 1.0;
};

/// Glorot gain: the logistic sigmoid has slope 1/4 at the origin, so its
/// layers need a 4x gain to keep signal variance from collapsing in a
/// deep stack; the other activations are near-unit-slope and use 1.
inline double init_gain(const ActivationSpec& act) {
    if (!act.falu && act.base == BaseKind::sigmoid) return 4.0;
    return 1.0;
}

/// MLP with Glorot-uniform weights, zero biases, and the given activation
/// on every hidden layer; the output layer is linear.
inline MlpModel make_mlp(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                         std::size_t classes, const ActivationSpec& act, Rng& rng,
                         FdoInit fdo_init = FdoInit::zero) {
    if (act.fractional || act.falu) validate_spec(act);
    MlpModel model;
    std::size_t prev = in_dim;
    std::vector<std::size_t> dims = hidden;
    dims.push_back(classes);
    const double gain = init_gain(act);
    for (std::size_t li = 0; li < dims.size(); ++li) {
        DenseLayer layer;
        layer.weights = Tensor::matrix(prev, dims[li]);
        layer.biases = Tensor::vector(dims[li]);
        const double limit =
            (li + 1 < dims.size() ? gain : 1.0) *
            std::sqrt(6.0 / static_cast<double>(prev + dims[li]));
        for (double& w : layer.weights.data()) w = rng.uniform(-limit, limit);
        if (li + 1 < dims.size()) {
            ActivationSpec spec = act;
            if ((spec.fractional || spec.falu) && fdo_init == FdoInit::uniform)
                spec.order = rng.uniform();
            layer.activation = spec;
        }
        prev = dims[li];
        model.layers.push_back(std::move(layer));
    }
    return model;
}

// ---------------------------------------------------------------------------
// Parameter registry
// ---------------------------------------------------------------------------

/// View of one registered parameter group with its optimizer flags.
/// Fractional orders and FALU betas are decay-excluded and box-clamped.
struct ParamRef {
    std::string name;
    double* data = nullptr;
    std::size_t size = 0;
    bool decay_excluded = false;
    bool is_fdo = false;
    std::optional<std::pair<double, double>> clamp_box;
};

inline bool layer_has_order(const ActivationSpec& spec) {
    return spec.fractional || spec.falu;
}

inline bool layer_has_slope(const ActivationSpec& spec) {
    return !spec.falu && !spec.fractional && spec.base == BaseKind::prelu;
}

/// Enumerates parameters in a fixed order: per layer weights, biases,
/// then activation scalars (order, beta, slope). Gradient vectors and
/// optimizer state use the same indexing.
inline std::vector<ParamRef> collect_params(MlpModel& model) {
    std::vector<ParamRef> params;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        DenseLayer& layer = model.layers[li];
        const std::string prefix = "layer" + std::to_string(li) + ".";
        params.push_back({prefix + "weights", layer.weights.data().data(),
                          layer.weights.size(), false, false, std::nullopt});
        params.push_back({prefix + "biases", layer.biases.data().data(),
                          layer.biases.size(), false, false, std::nullopt});
        if (!layer.activation) continue;
        ActivationSpec& spec = *layer.activation;
        if (layer_has_order(spec))
            params.push_back({prefix + "order", &spec.order, 1, true, true,
                              std::make_pair(kOrderMin, kOrderMax)});
        if (spec.falu)
            params.push_back({prefix + "falu_beta", &spec.falu_beta, 1, true,
                              false, std::make_pair(kBetaMin, kBetaMax)});
        if (layer_has_slope(spec))
            params.push_back({prefix + "prelu_slope", &spec.prelu_slope, 1,
                              false, false, std::nullopt});
    }
    return params;
}

/// Gradients aligned index-for-index with collect_params.
struct ModelGrads {
    std::vector<std::vector<double>> by_param;
};

// ---------------------------------------------------------------------------
// Forward / loss / backward
// ---------------------------------------------------------------------------

struct LayerCache {
    Tensor input; // input to the affine part
    std::optional<ForwardCache> act;
};

struct ForwardResult {
    Tensor logits;
    std::vector<LayerCache> caches;
};

namespace detail {

inline void check_finite(const Tensor& t, const std::string& where) {
    for (std::size_t i = 0; i < t.size(); ++i)
        if (!std::isfinite(t[i]))
            throw NonFiniteError(where + ": non-finite value " +
                                 std::to_string(t[i]) + " at element " +
                                 std::to_string(i));
}

inline Tensor affine(const Tensor& x, const DenseLayer& layer) {
    const std::size_t b = x.rows();
    const std::size_t in = x.cols();
    const std::size_t out = layer.weights.cols();
    if (layer.weights.rows() != in)
        throw ShapeError("forward: input width " + std::to_string(in) +
                         " does not match layer fan-in " +
                         std::to_string(layer.weights.rows()));
    Tensor z = Tensor::matrix(b, out);
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < out; ++j) z(i, j) = layer.biases[j];
        for (std::size_t k = 0; k < in; ++k) {
            const double v = x(i, k);
            for (std::size_t j = 0; j < out; ++j) z(i, j) += v * layer.weights(k, j);
        }
    }
    return z;
}

} // namespace detail

/// Full forward pass; caches per-layer inputs and activation planes for
/// backward. Non-finite values abort with the layer named.
inline ForwardResult forward(MlpModel& model, const Tensor& batch) {
    ForwardResult result;
    Tensor x = batch;
    std::size_t planes = 0;
    for (std::size_t li = 0; li < model.layers.size(); ++li) {
        const std::string tag = "layer " + std::to_string(li);
        LayerCache cache;
        cache.input = x;
        Tensor z = detail::affine(x, model.layers[li]);
        detail::check_finite(z, tag + " affine");
        if (model.layers[li].activation) {
            try {
                auto [y, fc] = frac_act_forward(*model.layers[li].activation, z);
                planes += fc.plane_count();
                cache.act = std::move(fc);
                x = std::move(y);
            } catch (const NonFiniteError& e) {
                throw NonFiniteError(tag + " activation: " + e.what());
            }
        } else {
            x = std::move(z);
        }
        result.caches.push_back(std::move(cache));
    }
    model.last_forward_planes = planes;
    result.logits = std::move(x);
    return result;
}

struct LossResult {
    double loss = 0.0;
    Tensor d_logits;
};

/// Cross-entropy against the label-smoothed one-hot target; gradient is
/// (softmax - smoothed target) / batch.
inline LossResult loss_label_smoothed_ce(const Tensor& logits,
                                         const std::vector<int>& targets,
                                         double epsilon) {
    if (epsilon < 0.0 || epsilon >= 1.0)
        throw DomainError("loss_label_smoothed_ce: epsilon must be in [0, 1)");
    const std::size_t b = logits.rows();
    const std::size_t classes = logits.cols();
    if (targets.size() != b)
        throw ShapeError("loss_label_smoothed_ce: target count " +
                         std::to_string(targets.size()) +
                         " does not match batch " + std::to_string(b));
    LossResult result;
    result.d_logits = Tensor::matrix(b, classes);
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= classes)
            throw ShapeError("loss_label_smoothed_ce: target " +
                             std::to_string(targets[i]) + " out of range");
        double m = logits(i, 0);
        for (std::size_t j = 1; j < classes; ++j) m = std::max(m, logits(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < classes; ++j) sum += std::exp(logits(i, j) - m);
        const double lse = m + std::log(sum);
        const double uniform = epsilon / static_cast<double>(classes);
        double row_loss = 0.0;
        for (std::size_t j = 0; j < classes; ++j) {
            const double q = uniform +
                (static_cast<std::size_t>(targets[i]) == j ? 1.0 - epsilon : 0.0);
            const double p = std::exp(logits(i, j) - lse);
            row_loss += q * (lse - logits(i, j));
            result.d_logits(i, j) = (p - q) / static_cast<double>(b);
        }
        total += row_loss;
    }
    result.loss = total / static_cast<double>(b);
    return result;
}

/// Backpropagation through every layer; returns gradients for all
/// registered parameters in collect_params order, including one d_order
/// per fractional layer.
inline ModelGrads backward(const MlpModel& model, const ForwardResult& fr,
                           const Tensor& d_logits) {
    if (fr.caches.size() != model.layers.size())
        throw ShapeError("backward: cache count does not match layer count");
    const std::size_t n_layers = model.layers.size();
    std::vector<std::vector<std::vector<double>>> per_layer(n_layers);

    Tensor d = d_logits;
    for (std::size_t li = n_layers; li-- > 0;) {
        const DenseLayer& layer = model.layers[li];
        const LayerCache& cache = fr.caches[li];
        std::vector<std::vector<double>>& slots = per_layer[li];

        Tensor d_z;
        std::vector<double> scalar_grads; // order, beta, slope in registry order
        if (layer.activation) {
            if (!cache.act)
                throw ShapeError("backward: missing activation cache at layer " +
                                 std::to_string(li));
            const ActivationSpec& spec = *layer.activation;
            ActivationGrads ag = frac_act_backward(spec, *cache.act, d);
            d_z = std::move(ag.d_input);
            if (layer_has_order(spec)) scalar_grads.push_back(ag.d_order);
            if (spec.falu) scalar_grads.push_back(ag.d_beta.value_or(0.0));
            if (layer_has_slope(spec)) scalar_grads.push_back(ag.d_slope.value_or(0.0));
        } else {
            d_z = d;
        }

        const Tensor& x = cache.input;
        const std::size_t b = x.rows();
        const std::size_t in = x.cols();
        const std::size_t out = layer.weights.cols();
        std::vector<double> dw(in * out, 0.0);
        std::vector<double> db(out, 0.0);
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = 0; j < out; ++j) {
                const double g = d_z(i, j);
                db[j] += g;
                for (std::size_t k = 0; k < in; ++k) dw[k * out + j] += x(i, k) * g;
            }
        }
        Tensor d_x = Tensor::matrix(b, in);
        for (std::size_t i = 0; i < b; ++i)
            for (std::size_t k = 0; k < in; ++k) {
                double acc = 0.0;
                for (std::size_t j = 0; j < out; ++j)
                    acc += d_z(i, j) * layer.weights(k, j);
                d_x(i, k) = acc;
            }

        slots.push_back(std::move(dw));
        slots.push_back(std::move(db));
        for (double g : scalar_grads) slots.push_back({g});
        d = std::move(d_x);
    }

    ModelGrads grads;
    for (auto& slots : per_layer)
        for (auto& s : slots) grads.by_param.push_back(std::move(s));
    return grads;
}

/// Returns all-zero upstream gradients shaped like d_logits for a batch.
inline Tensor zero_like(const Tensor& t) { return Tensor(t.shape()); }

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

/// Scales all gradients by max_norm/g when the global L2 norm g exceeds
/// max_norm. Returns the applied scale.
inline double clip_global_norm(ModelGrads& grads, double max_norm) {
    if (!(max_norm > 0.0))
        throw DomainError("clip_global_norm: max_norm must be positive");
    double sq = 0.0;
    for (const auto& g : grads.by_param)
        for (double v : g) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return 1.0;
    const double scale = max_norm / norm;
    for (auto& g : grads.by_param)
        for (double& v : g) v *= scale;
    return scale;
}

struct SgdState {
    std::vector<std::vector<double>> velocity; // aligned with collect_params
};

/// SGD with momentum and decoupled-by-flag weight decay:
///   v <- momentum*v + (grad + decay*param), decay = 0 when excluded;
///   param <- param - lr*v; then boxed parameters are clamped.
inline void sgd_step(MlpModel& model, const ModelGrads& grads,
                     const TrainConfig& cfg, SgdState& state) {
    std::vector<ParamRef> params = collect_params(model);
    if (grads.by_param.size() != params.size())
        throw ShapeError("sgd_step: gradient group count " +
                         std::to_string(grads.by_param.size()) +
                         " does not match parameter count " +
                         std::to_string(params.size()));
    if (state.velocity.empty()) {
        state.velocity.resize(params.size());
        for (std::size_t p = 0; p < params.size(); ++p)
            state.velocity[p].assign(params[p].size, 0.0);
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
        ParamRef& ref = params[p];
        if (grads.by_param[p].size() != ref.size)
            throw ShapeError("sgd_step: gradient size mismatch for " + ref.name);
        const double lr = cfg.learning_rate * (ref.is_fdo ? cfg.fdo_lr_scale : 1.0);
        const double decay = ref.decay_excluded ? 0.0 : cfg.weight_decay;
        std::vector<double>& vel = state.velocity[p];
        for (std::size_t i = 0; i < ref.size; ++i) {
            vel[i] = cfg.momentum * vel[i] +
                     (grads.by_param[p][i] + decay * ref.data[i]);
            ref.data[i] -= lr * vel[i];
        }
        if (ref.clamp_box) {
            for (std::size_t i = 0; i < ref.size; ++i)
                ref.data[i] = std::min(std::max(ref.data[i], ref.clamp_box->first),
                                       ref.clamp_box->second);
        }
    }
}

// ---------------------------------------------------------------------------
// FDO histogram and metrics
// ---------------------------------------------------------------------------

struct FdoHistogram {
    double lo = 0.0;
    double hi = 2.0;
    std::vector<std::size_t> counts;

    std::size_t mass() const {
        std::size_t m = 0;
        for (std::size_t c : counts) m += c;
        return m;
    }
};

/// Histogram of all registered fractional orders over [0, 2]. Values
/// outside the range are not counted, so the mass invariant exposes any
/// escape from the box.
inline FdoHistogram fdo_histogram(const MlpModel& model, int bins) {
    if (bins < 1) throw DomainError("fdo_histogram: bins must be >= 1");
    FdoHistogram hist;
    hist.counts.assign(static_cast<std::size_t>(bins), 0);
    for (const DenseLayer& layer : model.layers) {
        if (!layer.activation || !layer_has_order(*layer.activation)) continue;
        const double v = layer.activation->order;
        if (v < hist.lo || v > hist.hi) continue;
        const double t = (v - hist.lo) / (hist.hi - hist.lo);
        const int idx = std::min(bins - 1, static_cast<int>(t * bins));
        ++hist.counts[static_cast<std::size_t>(idx)];
    }
    return hist;
}

inline std::size_t count_fdo_params(const MlpModel& model) {
    std::size_t n = 0;
    for (const DenseLayer& layer : model.layers)
        if (layer.activation && layer_has_order(*layer.activation)) ++n;
    return n;
}

struct RunMetrics {
    // Index 0 is the pre-training evaluation; indices 1..epochs follow.
    std::vector<double> train_loss;
    std::vector<double> test_loss;
    std::vector<double> test_acc;
    std::vector<double> epoch_seconds; // one entry per trained epoch
    FdoHistogram hist_start;
    FdoHistogram hist_end;
    double best_test_acc = 0.0;
    std::size_t cached_planes_per_step = 0;
};

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

inline std::pair<double, double> evaluate(MlpModel& model, const Dataset& data,
                                          double label_smoothing, int batch_size) {
    const std::size_t n = data.size();
    double total_loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        Tensor bx = Tensor::matrix(end - start, data.dims());
        std::vector<int> by(end - start);
        for (std::size_t r = start; r < end; ++r) {
            for (std::size_t c = 0; c < data.dims(); ++c)
                bx(r - start, c) = data.features(r, c);
            by[r - start] = data.labels[r];
        }
        ForwardResult fr = forward(model, bx);
        LossResult lr = loss_label_smoothed_ce(fr.logits, by, label_smoothing);
        total_loss += lr.loss * static_cast<double>(end - start);
        for (std::size_t i = 0; i < by.size(); ++i) {
            std::size_t arg = 0;
            for (std::size_t j = 1; j < fr.logits.cols(); ++j)
                if (fr.logits(i, j) > fr.logits(i, arg)) arg = j;
            if (static_cast<int>(arg) == by[i]) ++correct;
        }
    }
    return {total_loss / static_cast<double>(n),
            static_cast<double>(correct) / static_cast<double>(n)};
}

/// Sub-stream id reserved for the per-epoch shuffle so it never collides
/// with the initializer streams drawn inside make_mlp.
inline constexpr std::uint64_t kShuffleStream = 0x511;

/// One optimizer pass over the training set. Owns the model, momentum
/// state, and the shuffle stream; a Trainer seeded identically replays
/// the identical run.
class Trainer {
public:
    Trainer(MlpModel model, TrainConfig cfg)
        : model_(std::move(model)), cfg_(cfg),
          shuffle_rng_(Rng(cfg.seed).fork(kShuffleStream)) {}

    MlpModel& model() { return model_; }
    const TrainConfig& config() const { return cfg_; }

    /// Runs one epoch (shuffle, batch, forward, loss, backward, clip,
    /// step). Returns the sample-weighted mean train loss. A non-finite
    /// loss or activation raises NanAbortError with the location.
    double train_epoch(const Dataset& train, int epoch_index) {
        const std::size_t n = train.size();
        const std::vector<std::size_t> perm = shuffle_rng_.permutation(n);
        double total_loss = 0.0;
        const std::size_t batch = static_cast<std::size_t>(cfg_.batch_size);
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t end = std::min(n, start + batch);
            Tensor bx = Tensor::matrix(end - start, train.dims());
            std::vector<int> by(end - start);
            for (std::size_t r = start; r < end; ++r) {
                const std::size_t src = perm[r];
                for (std::size_t c = 0; c < train.dims(); ++c)
                    bx(r - start, c) = train.features(src, c);
                by[r - start] = train.labels[src];
            }
            const std::string where = "epoch " + std::to_string(epoch_index) +
                                      ", batch " + std::to_string(start / batch);
            ForwardResult fr;
            try {
                fr = forward(model_, bx);
            } catch (const NonFiniteError& e) {
                throw NanAbortError(where + ": " + e.what());
            }
            LossResult lr = loss_label_smoothed_ce(fr.logits, by, cfg_.label_smoothing);
            if (!std::isfinite(lr.loss))
                throw NanAbortError(where + ": loss is " + std::to_string(lr.loss));
            total_loss += lr.loss * static_cast<double>(end - start);
            ModelGrads grads = backward(model_, fr, lr.d_logits);
            clip_global_norm(grads, cfg_.clip_max_norm);
            sgd_step(model_, grads, cfg_, state_);
        }
        return total_loss / static_cast<double>(n);
    }

private:
    MlpModel model_;
    TrainConfig cfg_;
    SgdState state_;
    Rng shuffle_rng_;
};

/// Full training run: epoch-0 evaluation, per-epoch train/test tracking,
/// FDO histogram snapshots at start and end. The model argument is
/// updated in place with the trained parameters.
inline RunMetrics train_model(MlpModel& model, const Dataset& train,
                              const Dataset& test, const TrainConfig& cfg,
                              int hist_bins = 20) {
    using clock = std::chrono::steady_clock;
    RunMetrics metrics;
    metrics.hist_start = fdo_histogram(model, hist_bins);

    Trainer trainer(std::move(model), cfg);
    {
        auto [train_l, train_a] = evaluate(trainer.model(), train,
                                           cfg.label_smoothing, cfg.batch_size);
        (void)train_a;
        auto [test_l, test_a] = evaluate(trainer.model(), test,
                                         cfg.label_smoothing, cfg.batch_size);
        metrics.train_loss.push_back(train_l);
        metrics.test_loss.push_back(test_l);
        metrics.test_acc.push_back(test_a);
        metrics.best_test_acc = test_a;
        metrics.cached_planes_per_step =
            trainer.model().last_forward_planes.value_or(0);
    }
    for (int e = 1; e <= cfg.epochs; ++e) {
        const auto t0 = clock::now();
        const double train_l = trainer.train_epoch(train, e);
        const auto t1 = clock::now();
        metrics.epoch_seconds.push_back(
            std::chrono::duration<double>(t1 - t0).count());
        auto [test_l, test_a] = evaluate(trainer.model(), test,
                                         cfg.label_smoothing, cfg.batch_size);
        metrics.train_loss.push_back(train_l);
        metrics.test_loss.push_back(test_l);
        metrics.test_acc.push_back(test_a);
        metrics.best_test_acc = std::max(metrics.best_test_acc, test_a);
    }
    metrics.hist_end = fdo_histogram(trainer.model(), hist_bins);
    model = std::move(trainer.model());
    return metrics;
}

} // namespace fracact
