#ifndef GFB_CORE_MATH_HPP
#define GFB_CORE_MATH_HPP

// Dense/sparse linear algebra, seeded randomness and a central-difference
// gradient harness. All floating point is 64-bit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "gfb/error.hpp"

namespace gfb {

inline std::string shape_str(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

/// Row-major dense matrix of doubles.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            throw Error("DenseMatrix: data length " + std::to_string(data_.size()) +
                        " does not match shape " + shape_str(rows_, cols_));
    }
    DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
        rows_ = rows.size();
        cols_ = rows_ ? rows.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw Error("DenseMatrix: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw Error("max_abs_diff: shape mismatch " + shape_str(a.rows(), a.cols()) + " vs " +
                    shape_str(b.rows(), b.cols()));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// a * b
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw Error("matmul: inner dimensions differ (" + shape_str(a.rows(), a.cols()) + " * " +
                    shape_str(b.rows(), b.cols()) + ")");
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto out = c.row(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            auto brow = b.row(k);
            for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
        }
    }
    return c;
}

/// a * b^T
inline DenseMatrix matmul_bt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.cols())
        throw Error("matmul_bt: inner dimensions differ (" + shape_str(a.rows(), a.cols()) +
                    " * (" + shape_str(b.rows(), b.cols()) + ")^T)");
    DenseMatrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto arow = a.row(i);
        for (std::size_t j = 0; j < b.rows(); ++j) {
            auto brow = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += arow[k] * brow[k];
            c(i, j) = s;
        }
    }
    return c;
}

/// a^T * b
inline DenseMatrix matmul_at(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows())
        throw Error("matmul_at: inner dimensions differ ((" + shape_str(a.rows(), a.cols()) +
                    ")^T * " + shape_str(b.rows(), b.cols()) + ")");
    DenseMatrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        auto arow = a.row(k);
        auto brow = b.row(k);
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = arow[i];
            if (aki == 0.0) continue;
            auto out = c.row(i);
            for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aki * brow[j];
        }
    }
    return c;
}

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Compressed sparse row matrix. Column indices are strictly increasing within
/// each row and explicit zeros are never stored.
class SparseMatrix {
public:
    SparseMatrix() : row_ptr_(1, 0) {}

    SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                 std::vector<std::size_t> col_idx, std::vector<double> values)
        : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
          values_(std::move(values)) {
        validate();
    }

    /// Builds from unordered triplets. Duplicate coordinates are an error; zero
    /// values are dropped.
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries) {
        std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
            return std::tie(a.row, a.col) < std::tie(b.row, b.col);
        });
        std::vector<std::size_t> row_ptr(rows + 1, 0);
        std::vector<std::size_t> col_idx;
        std::vector<double> values;
        col_idx.reserve(entries.size());
        values.reserve(entries.size());
        for (std::size_t e = 0; e < entries.size(); ++e) {
            const auto& t = entries[e];
            if (t.row >= rows || t.col >= cols)
                throw Error("SparseMatrix: entry (" + std::to_string(t.row) + "," + std::to_string(t.col) +
                            ") outside " + shape_str(rows, cols));
            if (e > 0 && entries[e - 1].row == t.row && entries[e - 1].col == t.col)
                throw Error("SparseMatrix: duplicate entry (" + std::to_string(t.row) + "," +
                            std::to_string(t.col) + ")");
            if (t.value == 0.0) continue;
            col_idx.push_back(t.col);
            values.push_back(t.value);
            ++row_ptr[t.row + 1];
        }
        for (std::size_t i = 0; i < rows; ++i) row_ptr[i + 1] += row_ptr[i];
        return SparseMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
    }

    static SparseMatrix from_dense(const DenseMatrix& d) {
        std::vector<Triplet> t;
        for (std::size_t i = 0; i < d.rows(); ++i)
            for (std::size_t j = 0; j < d.cols(); ++j)
                if (d(i, j) != 0.0) t.push_back({i, j, d(i, j)});
        return from_triplets(d.rows(), d.cols(), std::move(t));
    }

    static SparseMatrix identity(std::size_t n) {
        std::vector<std::size_t> ptr(n + 1), idx(n);
        for (std::size_t i = 0; i < n; ++i) {
            ptr[i + 1] = i + 1;
            idx[i] = i;
        }
        return SparseMatrix(n, n, std::move(ptr), std::move(idx), std::vector<double>(n, 1.0));
    }

    DenseMatrix to_dense() const {
        DenseMatrix d(rows_, cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) d(i, col_idx_[p]) = values_[p];
        return d;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t nnz() const noexcept { return values_.size(); }
    const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
    const std::vector<std::size_t>& col_idx() const noexcept { return col_idx_; }
    const std::vector<double>& values() const noexcept { return values_; }

    /// Stored value at (i, j), or 0.
    double at(std::size_t i, std::size_t j) const {
        auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
        auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
        auto it = std::lower_bound(first, last, j);
        if (it == last || *it != j) return 0.0;
        return values_[static_cast<std::size_t>(it - col_idx_.begin())];
    }

    std::vector<Triplet> triplets() const {
        std::vector<Triplet> t;
        t.reserve(nnz());
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) t.push_back({i, col_idx_[p], values_[p]});
        return t;
    }

    /// Structural and numeric symmetry, entries compared within `tol`.
    bool is_symmetric(double tol = 0.0) const {
        if (rows_ != cols_) return false;
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
                const std::size_t j = col_idx_[p];
                auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[j]);
                auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[j + 1]);
                auto it = std::lower_bound(first, last, i);
                if (it == last || *it != i) return false;
                if (std::abs(values_[static_cast<std::size_t>(it - col_idx_.begin())] - values_[p]) > tol)
                    return false;
            }
        return true;
    }

    friend bool operator==(const SparseMatrix&, const SparseMatrix&) = default;

private:
    void validate() const {
        if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
            col_idx_.size() != values_.size())
            throw Error("SparseMatrix: inconsistent CSR arrays");
        for (std::size_t i = 0; i < rows_; ++i) {
            if (row_ptr_[i] > row_ptr_[i + 1]) throw Error("SparseMatrix: row offsets decrease");
            for (std::size_t p = row_ptr_[i]; p < row_ptr_[i + 1]; ++p) {
                if (col_idx_[p] >= cols_) throw Error("SparseMatrix: column index out of range");
                if (p > row_ptr_[i] && col_idx_[p] <= col_idx_[p - 1])
                    throw Error("SparseMatrix: column indices not strictly increasing in row " + std::to_string(i));
                if (values_[p] == 0.0) throw Error("SparseMatrix: explicit zero stored");
            }
        }
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::size_t> col_idx_;
    std::vector<double> values_;
};

/// Sparse-dense product A * H. Each output row accumulates in ascending
/// column order, so results are bit-reproducible.
inline DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& h) {
    if (a.cols() != h.rows())
        throw Error("spmm: A is " + shape_str(a.rows(), a.cols()) + " but H is " + shape_str(h.rows(), h.cols()));
    DenseMatrix out(a.rows(), h.cols());
    const auto& ptr = a.row_ptr();
    const auto& idx = a.col_idx();
    const auto& val = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto o = out.row(i);
        for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) {
            const double w = val[p];
            auto hr = h.row(idx[p]);
            for (std::size_t j = 0; j < h.cols(); ++j) o[j] += w * hr[j];
        }
    }
    return out;
}

/// A^T * H without forming A^T.
inline DenseMatrix spmm_transposed(const SparseMatrix& a, const DenseMatrix& h) {
    if (a.rows() != h.rows())
        throw Error("spmm_transposed: A is " + shape_str(a.rows(), a.cols()) + " but H is " +
                    shape_str(h.rows(), h.cols()));
    DenseMatrix out(a.cols(), h.cols());
    const auto& ptr = a.row_ptr();
    const auto& idx = a.col_idx();
    const auto& val = a.values();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        auto hr = h.row(i);
        for (std::size_t p = ptr[i]; p < ptr[i + 1]; ++p) {
            const double w = val[p];
            auto o = out.row(idx[p]);
            for (std::size_t j = 0; j < h.cols(); ++j) o[j] += w * hr[j];
        }
    }
    return out;
}

/// Counter-based SplitMix64 generator.
///
/// Draw n (1-based) is mix(seed + n * golden_gamma). A child stream for `key`
/// is seeded with mix(seed ^ mix(key + golden_gamma)); it depends only on the
/// parent seed and the key, never on how much of the parent has been consumed.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed) {}

    static constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t draws() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept { return mix(seed_ + (++counter_) * golden_gamma); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), rejection-sampled so there is no modulo bias.
    std::uint64_t uniform_index(std::uint64_t n) {
        if (n == 0) throw Error("Rng::uniform_index: empty range");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    Rng split(std::uint64_t key) const noexcept { return Rng(mix(seed_ ^ mix(key + golden_gamma))); }

    friend bool operator==(const Rng&, const Rng&) = default;

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

/// Fisher-Yates shuffle driven by Rng (std::shuffle is not portable across
/// standard libraries).
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(v[i - 1], v[j]);
    }
}

/// Glorot/Xavier uniform in [-a, a), a = sqrt(6 / (rows + cols)).
inline DenseMatrix glorot_init(std::size_t rows, std::size_t cols, Rng& rng) {
    if (rows == 0 || cols == 0) throw Error("glorot_init: zero dimension " + shape_str(rows, cols));
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    DenseMatrix w(rows, cols);
    for (double& v : w.values()) v = a * (2.0 * rng.uniform() - 1.0);
    return w;
}

/// Inverted dropout mask: 0 with probability `rate`, else 1 / (1 - rate).
inline DenseMatrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw Error("dropout_mask: rate must be in [0, 1), got " + std::to_string(rate));
    DenseMatrix m(rows, cols, 1.0);
    if (rate == 0.0) return m;
    const double keep = 1.0 / (1.0 - rate);
    for (double& v : m.values()) v = rng.uniform() < rate ? 0.0 : keep;
    return m;
}

/// Central differences (f(X + h e_ij) - f(X - h e_ij)) / 2h for every entry.
inline DenseMatrix finite_difference_grad(const std::function<double(const DenseMatrix&)>& f, const DenseMatrix& x,
                                          double h) {
    if (!(h > 0.0)) throw Error("finite_difference_grad: step must be positive");
    DenseMatrix g(x.rows(), x.cols());
    DenseMatrix probe = x;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double orig = probe.values()[k];
        probe.values()[k] = orig + h;
        const double fp = f(probe);
        probe.values()[k] = orig - h;
        const double fm = f(probe);
        probe.values()[k] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw Error("finite_difference_grad: non-finite function value at entry " + std::to_string(k));
        g.values()[k] = (fp - fm) / (2.0 * h);
    }
    return g;
}

} // namespace gfb

#endif // GFB_CORE_MATH_HPP
