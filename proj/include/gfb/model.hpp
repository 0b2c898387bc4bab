#ifndef GFB_MODEL_HPP
#define GFB_MODEL_HPP

// Two-layer network: a GCN layer over identity node features followed by a
// GFB layer that adds lambda * genvec_rank1(W h) to each node's first-order
// term before neighborhood aggregation.
//
//   H1     = relu(A~ W1^T)                 (identity input, no n x n matrix)
//   Hd     = dropout(H1)                   (train mode only)
//   Z      = Hd W2^T
//   T      = Z + lambda * G,  G_u = genvec_rank1(Z_u)
//   logits = A~ T
//   P      = softmax(logits)

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gfb/core_math.hpp"
#include "gfb/error.hpp"
#include "gfb/pooling.hpp"
#include "gfb/textgraph.hpp"

namespace gfb {

enum class Activation { None, Relu, Softmax };

/// Stands in for an n x n identity feature matrix.
struct IdentityFeatures {
    std::size_t n;
};

struct GcnLayer {
    DenseMatrix weight; ///< out_dim x in_dim
    Activation activation = Activation::Relu;
};

struct GfbLayer {
    DenseMatrix weight; ///< out_dim x in_dim, shared by both branches
    double lambda = 0.1;
    /// Second-order operator; empty means a plain first-order GCN layer.
    std::optional<GenVecOp> genvec = GenVecOp{};
    Activation activation = Activation::Softmax;
};

inline void softmax_rows(DenseMatrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        double mx = r[0];
        for (double v : r) mx = std::max(mx, v);
        double s = 0.0;
        for (double& v : r) {
            v = std::exp(v - mx);
            s += v;
        }
        for (double& v : r) v /= s;
    }
}

inline void apply_activation(DenseMatrix& m, Activation act) {
    switch (act) {
    case Activation::None: break;
    case Activation::Relu:
        for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
        break;
    case Activation::Softmax: softmax_rows(m); break;
    }
}

namespace detail {

inline void check_square_adjacency(const SparseMatrix& a, std::size_t n_rows, const char* who) {
    if (a.rows() != a.cols() || a.cols() != n_rows)
        throw Error(std::string(who) + ": adjacency is " + shape_str(a.rows(), a.cols()) + " but features have " +
                    std::to_string(n_rows) + " rows");
}

} // namespace detail

/// sigma(A~ H W^T)
inline DenseMatrix gcn_forward(const SparseMatrix& a, const DenseMatrix& h, const GcnLayer& layer) {
    detail::check_square_adjacency(a, h.rows(), "gcn_forward");
    if (h.cols() != layer.weight.cols())
        throw Error("gcn_forward: features have " + std::to_string(h.cols()) + " columns, weight expects " +
                    std::to_string(layer.weight.cols()));
    DenseMatrix out = spmm(a, matmul_bt(h, layer.weight));
    apply_activation(out, layer.activation);
    return out;
}

/// sigma(A~ W^T): identity features reduce H W^T to a transpose (column gather).
inline DenseMatrix gcn_forward(const SparseMatrix& a, IdentityFeatures h, const GcnLayer& layer) {
    detail::check_square_adjacency(a, h.n, "gcn_forward");
    if (h.n != layer.weight.cols())
        throw Error("gcn_forward: " + std::to_string(h.n) + " identity features, weight expects " +
                    std::to_string(layer.weight.cols()));
    DenseMatrix out = spmm(a, transpose(layer.weight));
    apply_activation(out, layer.activation);
    return out;
}

/// Per-node terms of a GFB layer before aggregation.
struct GfbTerms {
    DenseMatrix first;  ///< Z = H W^T
    DenseMatrix second; ///< rows genvec_rank1(Z_u); zeros for a first-order layer
};

inline GfbTerms gfb_terms(const DenseMatrix& h, const GfbLayer& layer) {
    if (h.cols() != layer.weight.cols())
        throw Error("gfb_forward: features have " + std::to_string(h.cols()) + " columns, weight expects " +
                    std::to_string(layer.weight.cols()));
    GfbTerms t{matmul_bt(h, layer.weight), DenseMatrix(h.rows(), layer.weight.rows())};
    if (layer.genvec) {
        if (!layer.genvec->trainable()) throw Error("gfb layer: UpperVec is an analysis operator only");
        for (std::size_t u = 0; u < h.rows(); ++u) genvec_rank1(t.first.row(u), *layer.genvec, t.second.row(u));
    }
    return t;
}

inline DenseMatrix combine_terms(const GfbTerms& t, double lambda) {
    DenseMatrix out = t.first;
    auto o = out.values();
    auto s = t.second.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += lambda * s[i];
    return out;
}

/// A~ (Z + lambda G), before the output activation.
inline DenseMatrix gfb_preactivation(const SparseMatrix& a, const DenseMatrix& h, const GfbLayer& layer) {
    detail::check_square_adjacency(a, h.rows(), "gfb_forward");
    return spmm(a, combine_terms(gfb_terms(h, layer), layer.lambda));
}

inline DenseMatrix gfb_forward(const SparseMatrix& a, const DenseMatrix& h, const GfbLayer& layer) {
    DenseMatrix out = gfb_preactivation(a, h, layer);
    apply_activation(out, layer.activation);
    return out;
}

struct GfbGradients {
    DenseMatrix weight;
    double lambda = 0.0;
    DenseMatrix input; ///< d loss / d H
};

/// Backward through the GFB layer given d loss / d (pre-activation output).
inline GfbGradients gfb_backward(const SparseMatrix& a, const DenseMatrix& h, const GfbLayer& layer,
                                 const GfbTerms& terms, const DenseMatrix& d_pre) {
    GfbGradients g;
    DenseMatrix d_t = spmm_transposed(a, d_pre);
    DenseMatrix d_z = d_t;
    if (layer.genvec) {
        double d_lambda = 0.0;
        for (std::size_t i = 0; i < d_t.size(); ++i) d_lambda += d_t.values()[i] * terms.second.values()[i];
        g.lambda = d_lambda;
        std::vector<double> scratch(layer.weight.rows());
        for (std::size_t u = 0; u < h.rows(); ++u) {
            genvec_rank1_backward(terms.first.row(u), *layer.genvec, d_t.row(u), scratch);
            auto dz = d_z.row(u);
            for (std::size_t j = 0; j < dz.size(); ++j) dz[j] += layer.lambda * scratch[j];
        }
    }
    g.weight = matmul_at(d_z, h);
    g.input = matmul(d_z, layer.weight);
    return g;
}

struct ModelState {
    GcnLayer layer1;
    GfbLayer layer2;
    double dropout = 0.5;

    std::size_t n_nodes() const noexcept { return layer1.weight.cols(); }
    std::size_t hidden_dim() const noexcept { return layer1.weight.rows(); }
    std::size_t n_classes() const noexcept { return layer2.weight.rows(); }

    friend bool operator==(const ModelState& a, const ModelState& b) {
        return a.layer1.weight == b.layer1.weight && a.layer1.activation == b.layer1.activation &&
               a.layer2.weight == b.layer2.weight && a.layer2.lambda == b.layer2.lambda &&
               a.layer2.genvec == b.layer2.genvec && a.layer2.activation == b.layer2.activation &&
               a.dropout == b.dropout;
    }
};

/// Glorot-initialized model; layer-1 and layer-2 weights come from separate
/// child streams of `rng`.
inline ModelState make_model(std::size_t n_nodes, std::size_t hidden, std::size_t n_classes,
                             std::optional<GenVecOp> genvec, double lambda_init, double dropout, const Rng& rng) {
    Rng r1 = rng.split(1), r2 = rng.split(2);
    ModelState m;
    m.layer1 = {glorot_init(hidden, n_nodes, r1), Activation::Relu};
    m.layer2 = {glorot_init(n_classes, hidden, r2), lambda_init, genvec, Activation::Softmax};
    m.dropout = dropout;
    return m;
}

enum class Mode { Train, Eval };

/// Layer-1 activations: relu(A~ W1^T), optionally dropped out.
struct HiddenPass {
    DenseMatrix pre;       ///< A~ W1^T
    DenseMatrix activated; ///< relu(pre)
    DenseMatrix drop_mask; ///< empty when no dropout was applied
    DenseMatrix output;    ///< input to layer 2
};

/// Dropout masks are drawn from `rng` in train mode only.
inline HiddenPass hidden_forward(const SparseMatrix& a, const GcnLayer& layer, double dropout, Mode mode, Rng& rng) {
    GcnLayer linear = layer;
    linear.activation = Activation::None;
    HiddenPass p;
    p.pre = gcn_forward(a, IdentityFeatures{a.rows()}, linear);
    p.activated = p.pre;
    apply_activation(p.activated, layer.activation);
    p.output = p.activated;
    if (mode == Mode::Train && dropout > 0.0) {
        p.drop_mask = dropout_mask(p.output.rows(), p.output.cols(), dropout, rng);
        for (std::size_t i = 0; i < p.output.size(); ++i) p.output.values()[i] *= p.drop_mask.values()[i];
    }
    return p;
}

/// d loss / d W1 given d loss / d (layer-1 output).
inline DenseMatrix hidden_backward(const SparseMatrix& a, const GcnLayer& layer, const HiddenPass& p,
                                   const DenseMatrix& d_output) {
    DenseMatrix d_pre = d_output;
    for (std::size_t i = 0; i < d_pre.size(); ++i) {
        double& v = d_pre.values()[i];
        if (!p.drop_mask.empty()) v *= p.drop_mask.values()[i];
        if (layer.activation == Activation::Relu && !(p.pre.values()[i] > 0.0)) v = 0.0;
    }
    // pre = A~ W1^T  =>  dW1^T = A~^T d_pre
    return transpose(spmm_transposed(a, d_pre));
}

/// Activations of one forward pass, kept for the backward pass.
struct ForwardPass {
    bool cached = false;
    HiddenPass hidden;
    GfbTerms terms;
    DenseMatrix logits;
    DenseMatrix probabilities;
};

inline void check_model_matches(const TextGraph& g, const ModelState& s) {
    if (s.n_nodes() != g.n_nodes())
        throw Error("model expects " + std::to_string(s.n_nodes()) + " nodes, graph has " + std::to_string(g.n_nodes()));
    if (s.layer2.weight.cols() != s.hidden_dim())
        throw Error("layer 2 input dim " + std::to_string(s.layer2.weight.cols()) + " != hidden dim " +
                    std::to_string(s.hidden_dim()));
    if (g.n_classes() != 0 && s.n_classes() != g.n_classes())
        throw Error("model has " + std::to_string(s.n_classes()) + " classes, graph has " +
                    std::to_string(g.n_classes()));
}

/// Layer 1 (relu) -> dropout (train mode) -> GFB layer -> row softmax.
/// Eval mode never touches `rng`.
inline ForwardPass model_forward(const TextGraph& g, const ModelState& s, Mode mode, Rng& rng) {
    check_model_matches(g, s);
    ForwardPass f;
    f.hidden = hidden_forward(g.normalized, s.layer1, s.dropout, mode, rng);
    f.terms = gfb_terms(f.hidden.output, s.layer2);
    f.logits = spmm(g.normalized, combine_terms(f.terms, s.layer2.lambda));
    f.probabilities = f.logits;
    apply_activation(f.probabilities, s.layer2.activation);
    f.cached = true;
    return f;
}

struct Gradients {
    DenseMatrix w1;
    DenseMatrix w2;
    double lambda = 0.0;
};

/// Reverse pass given d loss / d logits (the layer-2 pre-activation).
inline Gradients model_backward(const TextGraph& g, const ModelState& s, const ForwardPass& f,
                                const DenseMatrix& d_logits) {
    if (!f.cached) throw Error("model_backward: forward pass has no cached activations");
    if (d_logits.rows() != f.logits.rows() || d_logits.cols() != f.logits.cols())
        throw Error("model_backward: upstream gradient is " + shape_str(d_logits.rows(), d_logits.cols()) +
                    ", logits are " + shape_str(f.logits.rows(), f.logits.cols()));
    const GfbGradients g2 = gfb_backward(g.normalized, f.hidden.output, s.layer2, f.terms, d_logits);
    Gradients out;
    out.w1 = hidden_backward(g.normalized, s.layer1, f.hidden, g2.input);
    out.w2 = g2.weight;
    out.lambda = s.layer2.genvec ? g2.lambda : 0.0;
    return out;
}

/// Relabels nodes: node i of `g` becomes node perm[i]. Both adjacency
/// matrices are permuted entrywise (no renormalization), so values are exact.
/// The documents-first ordering is not preserved.
inline TextGraph permute_graph(const TextGraph& g, const std::vector<std::size_t>& perm) {
    const std::size_t n = g.n_nodes();
    if (perm.size() != n) throw Error("permute_graph: permutation has " + std::to_string(perm.size()) + " entries, graph has " + std::to_string(n) + " nodes");
    std::vector<std::uint8_t> hit(n, 0);
    for (std::size_t p : perm) {
        if (p >= n || hit[p]) throw Error("permute_graph: not a bijection");
        hit[p] = 1;
    }
    auto permute_matrix = [&](const SparseMatrix& m) {
        auto t = m.triplets();
        for (auto& e : t) {
            e.row = perm[e.row];
            e.col = perm[e.col];
        }
        return SparseMatrix::from_triplets(n, n, std::move(t));
    };
    TextGraph out = g;
    out.adjacency = permute_matrix(g.adjacency);
    out.normalized = permute_matrix(g.normalized);
    for (std::size_t i = 0; i < n; ++i) {
        out.labels[perm[i]] = g.labels[i];
        out.train_mask[perm[i]] = g.train_mask[i];
        out.val_mask[perm[i]] = g.val_mask[i];
        out.test_mask[perm[i]] = g.test_mask[i];
        if (!g.node_names.empty()) out.node_names[perm[i]] = g.node_names[i];
    }
    return out;
}

/// Row i of `m` moves to row perm[i].
inline DenseMatrix permute_rows(const DenseMatrix& m, const std::vector<std::size_t>& perm) {
    DenseMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto src = m.row(i);
        std::copy(src.begin(), src.end(), out.row(perm[i]).begin());
    }
    return out;
}

/// Column j of `m` moves to column perm[j].
inline DenseMatrix permute_columns(const DenseMatrix& m, const std::vector<std::size_t>& perm) {
    DenseMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, perm[j]) = m(i, j);
    return out;
}

} // namespace gfb

#endif // GFB_MODEL_HPP
