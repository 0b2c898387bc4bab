#ifndef GFB_GRADCHECK_HPP
#define GFB_GRADCHECK_HPP

// Finite-difference verification of the hand-written backward pass.
//
// For every GenVec kind and seed a random small graph and model are drawn and
// the analytic gradients of the masked cross-entropy are compared with
// central differences. The error of a parameter group is
//   ||analytic - numeric||_2 / max(||analytic||_2, ||numeric||_2)
// (0 when both are zero). Instances whose max/top-k' selection or relu input
// lies within `margin` of a kink are redrawn, so differences never straddle
// a non-differentiable point.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gfb/core_math.hpp"
#include "gfb/model.hpp"
#include "gfb/pooling.hpp"
#include "gfb/textgraph.hpp"
#include "gfb/train.hpp"

namespace gfb {

struct GradcheckOptions {
    std::uint64_t seed = 1;
    std::size_t n_seeds = 5;
    std::size_t n_nodes = 6;
    std::size_t hidden = 5;
    std::size_t n_classes = 3;
    std::size_t k_prime = 2;
    double step = 1e-5;
    double tolerance = 1e-5;
    double margin = 1e-3;
    std::vector<GenVecKind> kinds{GenVecKind::MaxVec, GenVecKind::MeanVec, GenVecKind::DiagVec, GenVecKind::TopkVec};
    /// Perturbs the analytic gradients; used to show the harness can fail.
    bool corrupt_backward = false;
};

struct GradcheckRow {
    std::string layer; ///< "layer1", "layer2" or "loss"
    std::string param; ///< "W1", "W2", "lambda" or "logits"
    GenVecKind genvec = GenVecKind::MaxVec;
    double max_rel_error = 0.0; ///< worst over seeds
};

struct GradcheckReport {
    std::vector<GradcheckRow> rows;
    double worst = 0.0;
    bool passed = true;
};

inline double relative_error(std::span<const double> analytic, std::span<const double> numeric) {
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
        na += analytic[i] * analytic[i];
        nn += numeric[i] * numeric[i];
    }
    const double scale = std::sqrt(std::max(na, nn));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

/// Random weighted graph on n nodes (every node a labeled document).
inline TextGraph random_graph(std::size_t n, std::size_t n_classes, Rng& rng, double edge_prob = 0.5) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) {
        t.push_back({i, i, 1.0});
        for (std::size_t j = i + 1; j < n; ++j)
            if (rng.uniform() < edge_prob) {
                const double w = rng.uniform(0.1, 1.0);
                t.push_back({i, j, w});
                t.push_back({j, i, w});
            }
    }
    TextGraph g;
    g.n_docs = n;
    g.adjacency = SparseMatrix::from_triplets(n, n, std::move(t));
    g.normalized = normalize_adjacency(g.adjacency);
    for (std::size_t c = 0; c < n_classes; ++c) g.class_names.push_back("c" + std::to_string(c));
    g.labels.resize(n);
    g.train_mask.assign(n, 0);
    g.val_mask.assign(n, 0);
    g.test_mask.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        g.labels[i] = static_cast<int>(rng.uniform_index(n_classes));
        g.node_names.push_back("n" + std::to_string(i));
        (rng.uniform() < 0.7 ? g.train_mask : g.test_mask)[i] = 1;
    }
    g.train_mask[0] = 1;
    g.test_mask[0] = 0;
    return g;
}

namespace detail {

/// Smallest distance of the forward pass to a point where it is not
/// differentiable (relu at 0, argmax / top-k' membership changes).
inline double kink_margin(const ForwardPass& f, const GenVecOp& op) {
    double m = INFINITY;
    for (double v : f.hidden.pre.values()) m = std::min(m, std::abs(v));
    if (op.kind == GenVecKind::MaxVec || op.kind == GenVecKind::TopkVec) {
        const std::size_t rank = op.kind == GenVecKind::MaxVec ? 1 : op.k_prime;
        for (std::size_t u = 0; u < f.terms.first.rows(); ++u) {
            auto z = f.terms.first.row(u);
            if (rank >= z.size()) continue;
            std::vector<double> s(z.begin(), z.end());
            std::sort(s.begin(), s.end(), std::greater<>());
            m = std::min(m, s[rank - 1] - s[rank]);
        }
    }
    return m;
}

} // namespace detail

inline GradcheckReport run_gradcheck(const GradcheckOptions& opt) {
    GradcheckReport report;
    const Rng root(opt.seed);
    for (GenVecKind kind : opt.kinds) {
        const GenVecOp op{kind, opt.k_prime};
        GradcheckRow w1{"layer1", "W1", kind}, w2{"layer2", "W2", kind}, lam{"layer2", "lambda", kind},
            logits{"loss", "logits", kind};
        for (std::size_t s = 0; s < opt.n_seeds; ++s) {
            // Draw until the instance is away from every kink.
            TextGraph g;
            ModelState model;
            Rng drop(0);
            ForwardPass f;
            for (std::uint64_t attempt = 0;; ++attempt) {
                Rng r = root.split(static_cast<std::uint64_t>(kind) * 1'000'003ULL + s * 1009ULL + attempt);
                g = random_graph(opt.n_nodes, opt.n_classes, r);
                model = make_model(opt.n_nodes, opt.hidden, opt.n_classes, op, r.uniform(0.3, 1.0), 0.5, r.split(7));
                drop = r.split(9);
                Rng d = drop;
                f = model_forward(g, model, Mode::Train, d);
                if (detail::kink_margin(f, op) > opt.margin) break;
                if (attempt > 1000) throw Error("gradcheck: could not draw a kink-free instance");
            }

            auto loss_of = [&](const ModelState& m) {
                Rng d = drop;
                const auto fp = model_forward(g, m, Mode::Train, d);
                return masked_cross_entropy(fp.probabilities, g.labels, g.train_mask).loss;
            };
            const auto ce = masked_cross_entropy(f.probabilities, g.labels, g.train_mask);
            Gradients grads = model_backward(g, model, f, ce.grad);
            if (opt.corrupt_backward) {
                for (double& v : grads.w2.values()) v *= 1.001;
                grads.lambda *= 1.001;
            }

            const DenseMatrix n_w1 = finite_difference_grad(
                [&](const DenseMatrix& x) {
                    ModelState m = model;
                    m.layer1.weight = x;
                    return loss_of(m);
                },
                model.layer1.weight, opt.step);
            const DenseMatrix n_w2 = finite_difference_grad(
                [&](const DenseMatrix& x) {
                    ModelState m = model;
                    m.layer2.weight = x;
                    return loss_of(m);
                },
                model.layer2.weight, opt.step);
            const DenseMatrix n_lam = finite_difference_grad(
                [&](const DenseMatrix& x) {
                    ModelState m = model;
                    m.layer2.lambda = x(0, 0);
                    return loss_of(m);
                },
                DenseMatrix(1, 1, model.layer2.lambda), opt.step);
            const DenseMatrix n_logits = finite_difference_grad(
                [&](const DenseMatrix& x) {
                    DenseMatrix p = x;
                    softmax_rows(p);
                    return masked_cross_entropy(p, g.labels, g.train_mask).loss;
                },
                f.logits, opt.step);

            w1.max_rel_error = std::max(w1.max_rel_error, relative_error(grads.w1.values(), n_w1.values()));
            w2.max_rel_error = std::max(w2.max_rel_error, relative_error(grads.w2.values(), n_w2.values()));
            lam.max_rel_error = std::max(lam.max_rel_error, relative_error({&grads.lambda, 1}, n_lam.values()));
            logits.max_rel_error = std::max(logits.max_rel_error, relative_error(ce.grad.values(), n_logits.values()));
        }
        for (const auto& row : {w1, w2, lam, logits}) {
            report.rows.push_back(row);
            report.worst = std::max(report.worst, row.max_rel_error);
        }
    }
    report.passed = report.worst < opt.tolerance;
    return report;
}

} // namespace gfb

#endif // GFB_GRADCHECK_HPP
