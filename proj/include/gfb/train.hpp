#ifndef GFB_TRAIN_HPP
#define GFB_TRAIN_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gfb/core_math.hpp"
#include "gfb/error.hpp"
#include "gfb/model.hpp"
#include "gfb/pooling.hpp"
#include "gfb/textgraph.hpp"

namespace gfb {

struct LossAndGradient {
    double loss = 0.0;
    DenseMatrix grad; ///< d loss / d logits; zero outside the mask
};

/// Mean negative log-likelihood over masked rows of softmax output
/// `probabilities`, with its gradient w.r.t. the pre-softmax logits:
/// (p - onehot) / |mask| on masked rows.
inline LossAndGradient masked_cross_entropy(const DenseMatrix& probabilities, const std::vector<int>& labels,
                                            const NodeMask& mask) {
    if (labels.size() != probabilities.rows() || mask.size() != probabilities.rows())
        throw Error("masked_cross_entropy: labels/mask length does not match " +
                    std::to_string(probabilities.rows()) + " rows");
    std::size_t count = 0;
    for (auto m : mask) count += m ? 1 : 0;
    if (count == 0) throw Error("masked_cross_entropy: empty mask");

    LossAndGradient out{0.0, DenseMatrix(probabilities.rows(), probabilities.cols())};
    const double inv = 1.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < probabilities.rows(); ++i) {
        if (!mask[i]) continue;
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= probabilities.cols())
            throw Error("masked_cross_entropy: node " + std::to_string(i) + " has no valid label");
        out.loss -= std::log(probabilities(i, static_cast<std::size_t>(y)));
        auto g = out.grad.row(i);
        auto p = probabilities.row(i);
        for (std::size_t c = 0; c < g.size(); ++c) g[c] = p[c] * inv;
        g[static_cast<std::size_t>(y)] -= inv;
    }
    out.loss *= inv;
    return out;
}

struct AdamConfig {
    double learning_rate = 0.02;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment accumulators, one buffer per parameter tensor.
struct AdamState {
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
    std::int64_t step = 0;
};

/// One bias-corrected Adam update over all parameter tensors.
inline void adam_step(const std::vector<std::span<double>>& params, const std::vector<std::span<const double>>& grads,
                      AdamState& state, const AdamConfig& cfg) {
    if (params.size() != grads.size()) throw Error("adam_step: parameter and gradient counts differ");
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(p.size(), 0.0);
            state.v.emplace_back(p.size(), 0.0);
        }
    }
    if (state.m.size() != params.size()) throw Error("adam_step: state was created for a different parameter set");
    for (std::size_t k = 0; k < params.size(); ++k)
        if (params[k].size() != grads[k].size() || state.m[k].size() != params[k].size())
            throw Error("adam_step: shape mismatch in parameter " + std::to_string(k));

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params[k];
        auto g = grads[k];
        auto& m = state.m[k];
        auto& v = state.v[k];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / c1;
            const double v_hat = v[i] / c2;
            p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
    }
}

/// Stops once validation loss has failed to strictly improve on the best
/// value for `patience` consecutive epochs.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t patience) : patience_(patience) {
        if (patience < 1) throw Error("EarlyStopping: patience must be >= 1");
    }

    /// Records the loss of `epoch`; returns true if it is a new best.
    bool observe(std::size_t epoch, double val_loss) {
        if (val_loss < best_) {
            best_ = val_loss;
            best_epoch_ = epoch;
            wait_ = 0;
            return true;
        }
        ++wait_;
        return false;
    }

    bool should_stop() const noexcept { return wait_ >= patience_; }
    double best_loss() const noexcept { return best_; }
    std::size_t best_epoch() const noexcept { return best_epoch_; }

private:
    std::size_t patience_;
    std::size_t wait_ = 0;
    std::size_t best_epoch_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
};

struct TrainConfig {
    double learning_rate = 0.02;
    double dropout = 0.5;
    std::size_t max_epochs = 200;
    std::size_t patience = 10;
    double val_fraction = 0.1;
    std::uint64_t seed = 1;
    std::size_t embedding_dim = 200;
    /// Second-order operator of layer 2; empty trains a plain two-layer GCN.
    std::optional<GenVecKind> genvec = GenVecKind::MaxVec;
    std::size_t k_prime = 3;
    double lambda_init = 0.1;

    void validate() const {
        if (!(learning_rate > 0.0)) throw Error("config: learning_rate must be positive");
        if (!(dropout >= 0.0 && dropout < 1.0)) throw Error("config: dropout must be in [0, 1)");
        if (max_epochs < 1) throw Error("config: max_epochs must be >= 1");
        if (patience < 1) throw Error("config: patience must be >= 1");
        if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw Error("config: val_fraction must be in (0, 1)");
        if (embedding_dim < 1) throw Error("config: embedding_dim must be >= 1");
        if (genvec == GenVecKind::UpperVec) throw Error("config: genvec 'upper' cannot be trained");
        if (genvec == GenVecKind::TopkVec && k_prime < 1) throw Error("config: k_prime must be >= 1");
        if (!std::isfinite(lambda_init)) throw Error("config: lambda_init must be finite");
    }

    std::optional<GenVecOp> genvec_op() const {
        if (!genvec) return std::nullopt;
        return GenVecOp{*genvec, k_prime};
    }
};

struct EpochRecord {
    std::size_t epoch = 0; ///< 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> records;
    std::size_t stop_epoch = 0;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;

    /// Equality of everything except wall-clock times.
    bool same_trajectory(const TrainHistory& o) const {
        if (records.size() != o.records.size() || stop_epoch != o.stop_epoch || best_epoch != o.best_epoch ||
            best_val_loss != o.best_val_loss)
            return false;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const auto& a = records[i];
            const auto& b = o.records[i];
            if (a.epoch != b.epoch || a.train_loss != b.train_loss || a.val_loss != b.val_loss || a.val_acc != b.val_acc)
                return false;
        }
        return true;
    }
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;   ///< true instances
    std::size_t predicted = 0; ///< predicted instances
};

struct Metrics {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::size_t count = 0;
    std::vector<ClassMetrics> per_class;
};

/// Accuracy and unweighted per-class means over `n_classes` classes.
/// Undefined precision or recall (zero denominator) counts as 0, so a class
/// absent from both predictions and truth contributes 0 to all macro means.
/// Macro-F1 is the mean of per-class F1 scores.
inline Metrics evaluate_predictions(const std::vector<int>& predicted, const std::vector<int>& truth,
                                    std::size_t n_classes) {
    if (predicted.size() != truth.size()) throw Error("evaluate: prediction and truth lengths differ");
    if (truth.empty()) throw Error("evaluate: empty mask");
    if (n_classes == 0) throw Error("evaluate: no classes");
    Metrics m;
    m.count = truth.size();
    m.per_class.resize(n_classes);
    std::vector<std::size_t> tp(n_classes, 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto p = static_cast<std::size_t>(predicted[i]);
        const auto t = static_cast<std::size_t>(truth[i]);
        if (p >= n_classes || t >= n_classes) throw Error("evaluate: class index out of range");
        ++m.per_class[p].predicted;
        ++m.per_class[t].support;
        if (p == t) {
            ++tp[t];
            ++correct;
        }
    }
    m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    for (std::size_t c = 0; c < n_classes; ++c) {
        auto& pc = m.per_class[c];
        pc.precision = pc.predicted ? static_cast<double>(tp[c]) / static_cast<double>(pc.predicted) : 0.0;
        pc.recall = pc.support ? static_cast<double>(tp[c]) / static_cast<double>(pc.support) : 0.0;
        pc.f1 = pc.precision + pc.recall > 0.0 ? 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall) : 0.0;
        m.macro_precision += pc.precision;
        m.macro_recall += pc.recall;
        m.macro_f1 += pc.f1;
    }
    const double k = static_cast<double>(n_classes);
    m.macro_precision /= k;
    m.macro_recall /= k;
    m.macro_f1 /= k;
    return m;
}

/// Row-wise argmax, ties to the lowest class index.
inline std::vector<int> predict(const DenseMatrix& probabilities) {
    std::vector<int> out(probabilities.rows());
    for (std::size_t i = 0; i < probabilities.rows(); ++i)
        out[i] = static_cast<int>(detail::argmax(probabilities.row(i)));
    return out;
}

inline Metrics evaluate_probabilities(const DenseMatrix& probabilities, const TextGraph& g, const NodeMask& mask) {
    const auto pred = predict(probabilities);
    std::vector<int> p, t;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) {
            p.push_back(pred[i]);
            t.push_back(g.labels[i]);
        }
    if (t.empty()) throw Error("evaluate: empty mask");
    return evaluate_predictions(p, t, g.n_classes());
}

inline Metrics evaluate(const ModelState& model, const TextGraph& g, const NodeMask& mask) {
    Rng unused(0);
    const auto f = model_forward(g, model, Mode::Eval, unused);
    return evaluate_probabilities(f.probabilities, g, mask);
}

struct TrainResult {
    ModelState model;
    TrainHistory history;
    NodeMask train_mask; ///< training documents after the validation split
    NodeMask val_mask;
};

/// Applies one Adam step to the model parameters (lambda only when the layer
/// has a second-order branch).
inline void apply_gradients(ModelState& s, const Gradients& g, AdamState& adam, const AdamConfig& cfg) {
    std::vector<std::span<double>> params{s.layer1.weight.values(), s.layer2.weight.values()};
    std::vector<std::span<const double>> grads{g.w1.values(), g.w2.values()};
    if (s.layer2.genvec) {
        params.emplace_back(&s.layer2.lambda, 1);
        grads.emplace_back(&g.lambda, 1);
    }
    adam_step(params, grads, adam, cfg);
}

/// Full-graph transductive training with early stopping; returns the
/// parameters of the epoch with the lowest validation loss.
///
/// Random streams derived from config.seed: 1 -> validation split,
/// 2 -> initialization, 1000 + epoch -> dropout masks of that epoch.
inline TrainResult train(const TextGraph& graph, const TrainConfig& config) {
    config.validate();
    if (graph.n_classes() < 1) throw Error("train: graph has no classes");
    const Rng root(config.seed);

    TextGraph g = graph;
    Rng split_rng = root.split(1);
    g.assign_validation(config.val_fraction, split_rng);

    TrainResult r;
    r.train_mask = g.train_mask;
    r.val_mask = g.val_mask;
    // k' cannot exceed the output width; with fewer classes than k' it is
    // clamped, which makes TopkVec coincide with MeanVec.
    auto op = config.genvec_op();
    if (op && op->kind == GenVecKind::TopkVec) op->k_prime = std::min(op->k_prime, g.n_classes());
    ModelState state = make_model(g.n_nodes(), config.embedding_dim, g.n_classes(), op,
                                  config.lambda_init, config.dropout, root.split(2));
    r.model = state;

    AdamState adam;
    const AdamConfig adam_cfg{config.learning_rate};
    EarlyStopping stopper(config.patience);

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng drop_rng = root.split(1000 + epoch);
        const auto fwd = model_forward(g, state, Mode::Train, drop_rng);
        const auto loss = masked_cross_entropy(fwd.probabilities, g.labels, g.train_mask);
        if (!std::isfinite(loss.loss))
            throw Error("train: non-finite training loss at epoch " + std::to_string(epoch));
        const auto grads = model_backward(g, state, fwd, loss.grad);
        apply_gradients(state, grads, adam, adam_cfg);

        Rng unused(0);
        const auto eval = model_forward(g, state, Mode::Eval, unused);
        const auto val = masked_cross_entropy(eval.probabilities, g.labels, g.val_mask);
        if (!std::isfinite(val.loss))
            throw Error("train: non-finite validation loss at epoch " + std::to_string(epoch));
        const double val_acc = evaluate_probabilities(eval.probabilities, g, g.val_mask).accuracy;
        const auto t1 = std::chrono::steady_clock::now();

        r.history.records.push_back(
            {epoch, loss.loss, val.loss, val_acc, std::chrono::duration<double>(t1 - t0).count()});
        r.history.stop_epoch = epoch;
        if (stopper.observe(epoch, val.loss)) r.model = state;
        if (stopper.should_stop()) break;
    }
    r.history.best_epoch = stopper.best_epoch();
    r.history.best_val_loss = stopper.best_loss();
    return r;
}

} // namespace gfb

#endif // GFB_TRAIN_HPP
