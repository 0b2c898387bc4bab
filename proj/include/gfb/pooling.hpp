#ifndef GFB_POOLING_HPP
#define GFB_POOLING_HPP

// Compact second-order summarization operators.
//
// For a per-node factorized feature z = W h the auto-correlation is M = z z^T.
// genvec() summarizes each row of an explicit M; genvec_rank1() computes the
// same thing for nonnegative z in O(k) as s(z) * z without forming M, and is
// what the GFB layer uses. bilinear_pool() and fbp_transform() are the full
// (non-compact) second-order representations kept as baselines and oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gfb/core_math.hpp"
#include "gfb/error.hpp"

namespace gfb {

enum class GenVecKind { MaxVec, MeanVec, DiagVec, TopkVec, UpperVec };

inline std::string_view to_string(GenVecKind k) {
    switch (k) {
    case GenVecKind::MaxVec: return "max";
    case GenVecKind::MeanVec: return "mean";
    case GenVecKind::DiagVec: return "diag";
    case GenVecKind::TopkVec: return "topk";
    case GenVecKind::UpperVec: return "upper";
    }
    return "?";
}

inline std::optional<GenVecKind> parse_genvec_kind(std::string_view s) {
    if (s == "max") return GenVecKind::MaxVec;
    if (s == "mean") return GenVecKind::MeanVec;
    if (s == "diag") return GenVecKind::DiagVec;
    if (s == "topk") return GenVecKind::TopkVec;
    if (s == "upper") return GenVecKind::UpperVec;
    return std::nullopt;
}

struct GenVecOp {
    GenVecKind kind = GenVecKind::MaxVec;
    std::size_t k_prime = 3; ///< number of largest entries averaged by TopkVec

    /// Whether the op may be used inside a trainable layer. UpperVec is an
    /// analysis operator only.
    bool trainable() const noexcept { return kind != GenVecKind::UpperVec; }

    friend bool operator==(const GenVecOp&, const GenVecOp&) = default;
};

namespace detail {

/// Index of the largest entry; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
        if (x[i] > x[best]) best = i;
    return best;
}

/// Indices of the k largest entries, larger values first, ties by lower index.
inline std::vector<std::size_t> top_indices(std::span<const double> x, std::size_t k) {
    std::vector<std::size_t> idx(x.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto by_value = [&](std::size_t a, std::size_t b) { return x[a] > x[b] || (x[a] == x[b] && a < b); };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), by_value);
    idx.resize(k);
    return idx;
}

inline double mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Mean of the k largest entries, summed in index order so that k = n
/// reproduces mean() bit for bit.
inline double top_mean(std::span<const double> x, std::size_t k) {
    auto idx = top_indices(x, k);
    std::sort(idx.begin(), idx.end());
    double s = 0.0;
    for (std::size_t i : idx) s += x[i];
    return s / static_cast<double>(k);
}

inline void check_k_prime(const GenVecOp& op, std::size_t n) {
    if (op.kind == GenVecKind::TopkVec && (op.k_prime < 1 || op.k_prime > n))
        throw Error("TopkVec: k' = " + std::to_string(op.k_prime) + " must lie in [1, " + std::to_string(n) + "]");
}

inline void check_unit_interval(std::span<const double> p, const char* who) {
    for (double v : p)
        if (!(v >= 0.0 && v <= 1.0)) throw Error(std::string(who) + ": entry " + std::to_string(v) + " outside [0, 1]");
}

} // namespace detail

/// upper(p) = 1 - prod_j (1 - p_j): probability that at least one of k
/// independent events with probabilities p_j occurs.
inline double upper_bound(std::span<const double> p) {
    detail::check_unit_interval(p, "upper_bound");
    double miss = 1.0;
    for (double v : p) miss *= 1.0 - v;
    return 1.0 - miss;
}

/// Row summary g(x) for row `row` of M (DiagVec picks element `row`).
inline double summarize_row(std::span<const double> x, std::size_t row, const GenVecOp& op) {
    switch (op.kind) {
    case GenVecKind::MaxVec: return x[detail::argmax(x)];
    case GenVecKind::MeanVec: return detail::mean(x);
    case GenVecKind::DiagVec: return x[row];
    case GenVecKind::TopkVec: return detail::top_mean(x, op.k_prime);
    case GenVecKind::UpperVec: return upper_bound(x);
    }
    return 0.0;
}

/// Row-wise summary of an explicit square matrix.
inline std::vector<double> genvec(const DenseMatrix& m, const GenVecOp& op) {
    if (m.rows() != m.cols()) throw Error("genvec: matrix is " + shape_str(m.rows(), m.cols()) + ", expected square");
    detail::check_k_prime(op, m.cols());
    std::vector<double> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] = summarize_row(m.row(i), i, op);
    return out;
}

/// Scale s(z) such that genvec(z z^T) = s(z) * z for nonnegative z. Not used
/// for DiagVec, whose rank-one form is the elementwise square.
inline double rank1_scale(std::span<const double> z, const GenVecOp& op) {
    switch (op.kind) {
    case GenVecKind::MaxVec: return z[detail::argmax(z)];
    case GenVecKind::MeanVec: return detail::mean(z);
    case GenVecKind::TopkVec: return detail::top_mean(z, op.k_prime);
    case GenVecKind::UpperVec: return upper_bound(z);
    case GenVecKind::DiagVec: break;
    }
    throw Error("rank1_scale: DiagVec has no scalar form");
}

/// genvec(z z^T) without forming the outer product, written into `out`.
/// Applied to every input, including vectors with negative entries.
inline void genvec_rank1(std::span<const double> z, const GenVecOp& op, std::span<double> out) {
    if (z.empty()) return;
    detail::check_k_prime(op, z.size());
    if (op.kind == GenVecKind::DiagVec) {
        for (std::size_t i = 0; i < z.size(); ++i) out[i] = z[i] * z[i];
        return;
    }
    const double s = rank1_scale(z, op);
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = s * z[i];
}

inline std::vector<double> genvec_rank1(std::span<const double> z, const GenVecOp& op) {
    std::vector<double> out(z.size());
    genvec_rank1(z, op, out);
    return out;
}

/// Vector-Jacobian product of genvec_rank1 at z: returns J^T * upstream.
///
/// For y = s(z) z the Jacobian is s I + z (grad s)^T, so the result is
/// s * u + (z . u) * grad s. grad s is e_argmax for MaxVec, 1/k for MeanVec
/// and 1/k' on the selected indices for TopkVec; DiagVec gives 2 z * u.
inline void genvec_rank1_backward(std::span<const double> z, const GenVecOp& op, std::span<const double> upstream,
                                  std::span<double> grad_z) {
    const std::size_t k = z.size();
    if (k == 0) return;
    detail::check_k_prime(op, k);
    if (op.kind == GenVecKind::DiagVec) {
        for (std::size_t i = 0; i < k; ++i) grad_z[i] = 2.0 * z[i] * upstream[i];
        return;
    }
    double zu = 0.0;
    for (std::size_t i = 0; i < k; ++i) zu += z[i] * upstream[i];
    const double s = rank1_scale(z, op);
    for (std::size_t i = 0; i < k; ++i) grad_z[i] = s * upstream[i];
    switch (op.kind) {
    case GenVecKind::MaxVec: grad_z[detail::argmax(z)] += zu; break;
    case GenVecKind::MeanVec:
        for (std::size_t i = 0; i < k; ++i) grad_z[i] += zu / static_cast<double>(k);
        break;
    case GenVecKind::TopkVec:
        for (std::size_t i : detail::top_indices(z, op.k_prime)) grad_z[i] += zu / static_cast<double>(op.k_prime);
        break;
    case GenVecKind::UpperVec: {
        // d upper / d z_j = prod_{l != j} (1 - z_l)
        for (std::size_t j = 0; j < k; ++j) {
            double prod = 1.0;
            for (std::size_t l = 0; l < k; ++l)
                if (l != j) prod *= 1.0 - z[l];
            grad_z[j] += zu * prod;
        }
        break;
    }
    case GenVecKind::DiagVec: break;
    }
}

inline std::vector<double> genvec_rank1_backward(std::span<const double> z, const GenVecOp& op,
                                                 std::span<const double> upstream) {
    std::vector<double> g(z.size());
    genvec_rank1_backward(z, op, upstream, g);
    return g;
}

inline std::size_t triangular_size(std::size_t d) { return d * (d + 1) / 2; }

/// Upper triangle (row-major over i <= j) of h h^T + eps I.
inline void bilinear_pool(std::span<const double> h, double eps, std::span<double> out) {
    std::size_t p = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        out[p++] = h[i] * h[i] + eps;
        for (std::size_t j = i + 1; j < h.size(); ++j) out[p++] = h[i] * h[j];
    }
}

inline std::vector<double> bilinear_pool(std::span<const double> h, double eps) {
    if (eps < 0.0) throw Error("bilinear_pool: eps must be nonnegative");
    std::vector<double> out(triangular_size(h.size()));
    bilinear_pool(h, eps, out);
    return out;
}

/// Upper triangle of (W h)(W h)^T + eps I for a k x d factor W.
inline std::vector<double> fbp_transform(const DenseMatrix& w, std::span<const double> h, double eps) {
    if (w.cols() != h.size())
        throw Error("fbp_transform: W is " + shape_str(w.rows(), w.cols()) + " but h has length " +
                    std::to_string(h.size()));
    std::vector<double> z(w.rows(), 0.0);
    for (std::size_t i = 0; i < w.rows(); ++i) {
        auto wr = w.row(i);
        for (std::size_t j = 0; j < h.size(); ++j) z[i] += wr[j] * h[j];
    }
    return bilinear_pool(z, eps);
}

} // namespace gfb

#endif // GFB_POOLING_HPP
