#ifndef GFB_BENCH_HPP
#define GFB_BENCH_HPP

// Wall-clock timing of training epochs for different output heads, and of
// the extra forward cost of the second-order branch as its width k grows.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gfb/baselines.hpp"
#include "gfb/core_math.hpp"
#include "gfb/model.hpp"
#include "gfb/pooling.hpp"
#include "gfb/textgraph.hpp"
#include "gfb/train.hpp"

namespace gfb {

struct BenchVariant {
    enum class Kind { Gcn, Gfb, Fbp, Bp };
    Kind kind = Kind::Gcn;
    GenVecKind genvec = GenVecKind::MaxVec; ///< Gfb only

    std::string name() const {
        switch (kind) {
        case Kind::Gcn: return "gcn";
        case Kind::Gfb: return std::string(to_string(genvec));
        case Kind::Fbp: return "fbp";
        case Kind::Bp: return "bp";
        }
        return "?";
    }

    /// gcn | max | mean | diag | topk | fbp | bp
    static std::optional<BenchVariant> parse(const std::string& s) {
        if (s == "gcn") return BenchVariant{Kind::Gcn};
        if (s == "fbp") return BenchVariant{Kind::Fbp};
        if (s == "bp") return BenchVariant{Kind::Bp};
        if (auto k = parse_genvec_kind(s); k && *k != GenVecKind::UpperVec) return BenchVariant{Kind::Gfb, *k};
        return std::nullopt;
    }
};

struct BenchOptions {
    std::size_t warmup_epochs = 2;
    std::size_t timed_epochs = 5;
    std::size_t fbp_rank = 16;
    double eps = 0.0;
};

struct BenchTiming {
    std::string variant;
    double median_seconds = 0.0;
    std::vector<double> samples;
};

inline double median(std::vector<double> v) {
    if (v.empty()) throw Error("median: no samples");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline std::unique_ptr<Head> make_head(const BenchVariant& v, std::size_t in_dim, std::size_t n_classes,
                                       const TrainConfig& cfg, const BenchOptions& opt, Rng& rng) {
    switch (v.kind) {
    case BenchVariant::Kind::Gcn:
        return std::make_unique<GfbHead>(
            GfbLayer{glorot_init(n_classes, in_dim, rng), 0.0, std::nullopt, Activation::Softmax});
    case BenchVariant::Kind::Gfb:
        return std::make_unique<GfbHead>(GfbLayer{glorot_init(n_classes, in_dim, rng), cfg.lambda_init,
                                                  GenVecOp{v.genvec, std::min(cfg.k_prime, n_classes)},
                                                  Activation::Softmax});
    case BenchVariant::Kind::Fbp: return std::make_unique<FbpHead>(in_dim, opt.fbp_rank, n_classes, opt.eps, rng);
    case BenchVariant::Kind::Bp: return std::make_unique<BpHead>(in_dim, n_classes, opt.eps, rng);
    }
    throw Error("make_head: unknown variant");
}

/// Median seconds of `timed_epochs` full training epochs (forward, loss,
/// backward, Adam) after `warmup_epochs` untimed ones.
inline BenchTiming bench_epoch(const TextGraph& g, const TrainConfig& cfg, const BenchVariant& variant,
                               const BenchOptions& opt = {}) {
    if (opt.timed_epochs < 1) throw Error("bench_epoch: need at least one timed epoch");
    const Rng root(cfg.seed);
    Rng init = root.split(2);
    GcnLayer layer1{glorot_init(cfg.embedding_dim, g.n_nodes(), init), Activation::Relu};
    auto head = make_head(variant, cfg.embedding_dim, g.n_classes(), cfg, opt, init);
    AdamState adam;
    const AdamConfig adam_cfg{cfg.learning_rate};

    BenchTiming out{variant.name(), 0.0, {}};
    for (std::size_t e = 0; e < opt.warmup_epochs + opt.timed_epochs; ++e) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng drop = root.split(1000 + e);
        const auto hidden = hidden_forward(g.normalized, layer1, cfg.dropout, Mode::Train, drop);
        DenseMatrix probs = head->forward(g.normalized, hidden.output);
        softmax_rows(probs);
        const auto loss = masked_cross_entropy(probs, g.labels, g.train_mask);
        const DenseMatrix d_hidden = head->backward(g.normalized, loss.grad);
        const DenseMatrix d_w1 = hidden_backward(g.normalized, layer1, hidden, d_hidden);

        auto params = head->parameters();
        auto grads = head->gradients();
        params.insert(params.begin(), layer1.weight.values());
        grads.insert(grads.begin(), d_w1.values());
        adam_step(params, grads, adam, adam_cfg);
        const auto t1 = std::chrono::steady_clock::now();
        if (e >= opt.warmup_epochs) out.samples.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    out.median_seconds = median(out.samples);
    return out;
}

struct ScalingPoint {
    std::size_t k = 0;
    double gfb_seconds = 0.0;
    double gcn_seconds = 0.0;
    double extra_seconds = 0.0; ///< gfb - gcn
};

struct ScalingResult {
    std::vector<ScalingPoint> points;
    double slope = 0.0;     ///< least-squares seconds per unit k of the extra cost
    double intercept = 0.0;
    double exponent = 0.0;  ///< least-squares slope of log(extra) against log(k)
};

/// Times gfb_preactivation against the matching first-order layer for each
/// output width k on the graph's adjacency with random nonnegative inputs.
inline ScalingResult bench_k_scaling(const TextGraph& g, const std::vector<std::size_t>& ks, const GenVecOp& op,
                                     std::size_t in_dim = 200, std::size_t reps = 15, std::uint64_t seed = 0) {
    if (ks.size() < 2) throw Error("bench_k_scaling: need at least two widths");
    Rng rng(seed);
    DenseMatrix h(g.n_nodes(), in_dim);
    for (double& v : h.values()) v = rng.uniform();
    using clock = std::chrono::steady_clock;

    ScalingResult r;
    for (std::size_t k : ks) {
        Rng wr = rng.split(k);
        DenseMatrix w = glorot_init(k, in_dim, wr);
        for (double& v : w.values()) v = std::abs(v);
        const GcnLayer gcn{w, Activation::None};
        const GfbLayer gfb{w, 0.1, GenVecOp{op.kind, std::min(op.k_prime, k)}, Activation::None};
        std::vector<double> tg, tf;
        double sink = 0.0;
        for (std::size_t i = 0; i < reps + 1; ++i) {
            auto t0 = clock::now();
            sink += gcn_forward(g.normalized, h, gcn)(0, 0);
            auto t1 = clock::now();
            sink += gfb_preactivation(g.normalized, h, gfb)(0, 0);
            auto t2 = clock::now();
            if (i == 0) continue;
            tg.push_back(std::chrono::duration<double>(t1 - t0).count());
            tf.push_back(std::chrono::duration<double>(t2 - t1).count());
        }
        if (!std::isfinite(sink)) throw Error("bench_k_scaling: non-finite output");
        ScalingPoint p{k, median(tf), median(tg), 0.0};
        p.extra_seconds = p.gfb_seconds - p.gcn_seconds;
        r.points.push_back(p);
    }

    auto fit = [](const std::vector<double>& x, const std::vector<double>& y) {
        const double n = static_cast<double>(x.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sx += x[i];
            sy += y[i];
            sxx += x[i] * x[i];
            sxy += x[i] * y[i];
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        return std::pair{slope, (sy - slope * sx) / n};
    };
    std::vector<double> x, y, lx, ly;
    for (const auto& p : r.points) {
        x.push_back(static_cast<double>(p.k));
        y.push_back(p.extra_seconds);
        if (p.extra_seconds > 0.0) {
            lx.push_back(std::log(static_cast<double>(p.k)));
            ly.push_back(std::log(p.extra_seconds));
        }
    }
    std::tie(r.slope, r.intercept) = fit(x, y);
    r.exponent = lx.size() >= 2 ? fit(lx, ly).first : std::nan("");
    return r;
}

} // namespace gfb

#endif // GFB_BENCH_HPP
