#ifndef GFB_BASELINES_HPP
#define GFB_BASELINES_HPP

// Output heads used to compare the cost of second-order aggregation schemes.
// Each head maps layer-1 output H (n x d) to class logits (n x C) and can
// backpropagate through itself, accumulating its own parameter gradients.
//
//   GfbHead: A~ (H W^T + lambda G)           (plain GCN when genvec is empty)
//   FbpHead: (A~ vec((H_u F^T)(H_u F^T)^T + eps I)) V^T    F: k x d
//   BpHead:  (A~ vec(H_u H_u^T + eps I)) V^T
// vec() keeps the upper triangle, so BP aggregates d(d+1)/2 features per node.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "gfb/core_math.hpp"
#include "gfb/model.hpp"
#include "gfb/pooling.hpp"

namespace gfb {

/// d loss / d h for p = vec(h h^T + eps I), accumulated into `dh`.
inline void bilinear_pool_backward(std::span<const double> h, std::span<const double> dp, std::span<double> dh) {
    std::size_t p = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        dh[i] += 2.0 * h[i] * dp[p++];
        for (std::size_t j = i + 1; j < h.size(); ++j, ++p) {
            dh[i] += h[j] * dp[p];
            dh[j] += h[i] * dp[p];
        }
    }
}

class Head {
public:
    virtual ~Head() = default;
    virtual DenseMatrix forward(const SparseMatrix& a, const DenseMatrix& h) = 0;
    /// Returns d loss / d H and stores parameter gradients.
    virtual DenseMatrix backward(const SparseMatrix& a, const DenseMatrix& d_logits) = 0;
    virtual std::vector<std::span<double>> parameters() = 0;
    virtual std::vector<std::span<const double>> gradients() const = 0;
};

class GfbHead final : public Head {
public:
    explicit GfbHead(GfbLayer layer) : layer_(std::move(layer)) {}

    DenseMatrix forward(const SparseMatrix& a, const DenseMatrix& h) override {
        input_ = h;
        terms_ = gfb_terms(h, layer_);
        return spmm(a, combine_terms(terms_, layer_.lambda));
    }

    DenseMatrix backward(const SparseMatrix& a, const DenseMatrix& d_logits) override {
        auto g = gfb_backward(a, input_, layer_, terms_, d_logits);
        d_weight_ = std::move(g.weight);
        d_lambda_ = g.lambda;
        return std::move(g.input);
    }

    std::vector<std::span<double>> parameters() override {
        std::vector<std::span<double>> p{layer_.weight.values()};
        if (layer_.genvec) p.emplace_back(&layer_.lambda, 1);
        return p;
    }

    std::vector<std::span<const double>> gradients() const override {
        std::vector<std::span<const double>> g{d_weight_.values()};
        if (layer_.genvec) g.emplace_back(&d_lambda_, 1);
        return g;
    }

    const GfbLayer& layer() const noexcept { return layer_; }

private:
    GfbLayer layer_;
    DenseMatrix input_;
    GfbTerms terms_;
    DenseMatrix d_weight_;
    double d_lambda_ = 0.0;
};

class BpHead final : public Head {
public:
    BpHead(std::size_t in_dim, std::size_t n_classes, double eps, Rng& rng)
        : classifier_(glorot_init(n_classes, triangular_size(in_dim), rng)), eps_(eps) {}

    DenseMatrix forward(const SparseMatrix& a, const DenseMatrix& h) override {
        input_ = h;
        DenseMatrix pooled(h.rows(), triangular_size(h.cols()));
        for (std::size_t u = 0; u < h.rows(); ++u) bilinear_pool(h.row(u), eps_, pooled.row(u));
        aggregated_ = spmm(a, pooled);
        return matmul_bt(aggregated_, classifier_);
    }

    DenseMatrix backward(const SparseMatrix& a, const DenseMatrix& d_logits) override {
        d_classifier_ = matmul_at(d_logits, aggregated_);
        const DenseMatrix d_pooled = spmm_transposed(a, matmul(d_logits, classifier_));
        DenseMatrix d_h(input_.rows(), input_.cols());
        for (std::size_t u = 0; u < input_.rows(); ++u) bilinear_pool_backward(input_.row(u), d_pooled.row(u), d_h.row(u));
        return d_h;
    }

    std::vector<std::span<double>> parameters() override { return {classifier_.values()}; }
    std::vector<std::span<const double>> gradients() const override { return {d_classifier_.values()}; }

    DenseMatrix& classifier() noexcept { return classifier_; }

private:
    DenseMatrix classifier_; ///< C x d(d+1)/2
    double eps_;
    DenseMatrix input_;
    DenseMatrix aggregated_;
    DenseMatrix d_classifier_;
};

class FbpHead final : public Head {
public:
    FbpHead(std::size_t in_dim, std::size_t rank, std::size_t n_classes, double eps, Rng& rng)
        : factor_(glorot_init(rank, in_dim, rng)), classifier_(glorot_init(n_classes, triangular_size(rank), rng)),
          eps_(eps) {}

    DenseMatrix forward(const SparseMatrix& a, const DenseMatrix& h) override {
        input_ = h;
        projected_ = matmul_bt(h, factor_);
        DenseMatrix pooled(h.rows(), triangular_size(factor_.rows()));
        for (std::size_t u = 0; u < h.rows(); ++u) bilinear_pool(projected_.row(u), eps_, pooled.row(u));
        aggregated_ = spmm(a, pooled);
        return matmul_bt(aggregated_, classifier_);
    }

    DenseMatrix backward(const SparseMatrix& a, const DenseMatrix& d_logits) override {
        d_classifier_ = matmul_at(d_logits, aggregated_);
        const DenseMatrix d_pooled = spmm_transposed(a, matmul(d_logits, classifier_));
        DenseMatrix d_proj(projected_.rows(), projected_.cols());
        for (std::size_t u = 0; u < projected_.rows(); ++u)
            bilinear_pool_backward(projected_.row(u), d_pooled.row(u), d_proj.row(u));
        d_factor_ = matmul_at(d_proj, input_);
        return matmul(d_proj, factor_);
    }

    std::vector<std::span<double>> parameters() override { return {factor_.values(), classifier_.values()}; }
    std::vector<std::span<const double>> gradients() const override {
        return {d_factor_.values(), d_classifier_.values()};
    }

    DenseMatrix& factor() noexcept { return factor_; }
    DenseMatrix& classifier() noexcept { return classifier_; }

private:
    DenseMatrix factor_;     ///< k x d
    DenseMatrix classifier_; ///< C x k(k+1)/2
    double eps_;
    DenseMatrix input_;
    DenseMatrix projected_;
    DenseMatrix aggregated_;
    DenseMatrix d_factor_;
    DenseMatrix d_classifier_;
};

} // namespace gfb

#endif // GFB_BASELINES_HPP
