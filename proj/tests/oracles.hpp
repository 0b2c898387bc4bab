#ifndef GFB_TESTS_ORACLES_HPP
#define GFB_TESTS_ORACLES_HPP

// Slow reference implementations used by the unit and acceptance tests. They
// share no code with the library beyond its data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gfb/gfb.hpp"

namespace oracle {

using gfb::DenseMatrix;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline std::vector<double> random_vector(std::size_t k, double lo, double hi, gfb::Rng& rng) {
    std::vector<double> v(k);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline DenseMatrix random_matrix(std::size_t r, std::size_t c, gfb::Rng& rng, double lo = -1.0, double hi = 1.0) {
    DenseMatrix m(r, c);
    for (double& v : m.values()) v = rng.uniform(lo, hi);
    return m;
}

inline DenseMatrix outer(const std::vector<double>& z) {
    DenseMatrix m(z.size(), z.size());
    for (std::size_t i = 0; i < z.size(); ++i)
        for (std::size_t j = 0; j < z.size(); ++j) m(i, j) = z[i] * z[j];
    return m;
}

inline DenseMatrix dense_product(const DenseMatrix& a, const DenseMatrix& b) {
    DenseMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline DenseMatrix dense_transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

// Window statistics by explicit enumeration of every window as a word set.
struct WindowCounts {
    std::set<std::string> vocab;
    std::int64_t total = 0;
    std::map<std::string, std::int64_t> word;
    std::map<std::pair<std::string, std::string>, std::int64_t> pair; // first < second
};

inline WindowCounts enumerate_windows(const std::vector<gfb::TokenList>& docs, std::size_t min_freq,
                                      std::size_t window) {
    WindowCounts wc;
    std::map<std::string, std::size_t> freq;
    for (const auto& d : docs)
        for (const auto& t : d) ++freq[t];
    for (const auto& [w, f] : freq)
        if (f >= min_freq) wc.vocab.insert(w);
    for (const auto& d : docs) {
        std::vector<std::string> stream;
        for (const auto& t : d)
            if (wc.vocab.count(t)) stream.push_back(t);
        if (stream.empty()) continue;
        std::vector<std::set<std::string>> windows;
        if (stream.size() <= window) {
            windows.emplace_back(stream.begin(), stream.end());
        } else {
            for (std::size_t s = 0; s + window <= stream.size(); ++s)
                windows.emplace_back(stream.begin() + static_cast<long>(s), stream.begin() + static_cast<long>(s + window));
        }
        for (const auto& w : windows) {
            ++wc.total;
            for (const auto& a : w) {
                ++wc.word[a];
                for (const auto& b : w)
                    if (a < b) ++wc.pair[{a, b}];
            }
        }
    }
    return wc;
}

// Doc-word TF-IDF by direct counting: (doc, word) -> weight, zeros omitted.
inline std::map<std::pair<std::size_t, std::string>, double> tfidf_table(const std::vector<gfb::TokenList>& docs,
                                                                         const std::set<std::string>& vocab) {
    std::map<std::pair<std::size_t, std::string>, double> out;
    for (const auto& w : vocab) {
        std::size_t df = 0;
        for (const auto& d : docs) df += std::find(d.begin(), d.end(), w) != d.end() ? 1 : 0;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            const auto tf = std::count(docs[i].begin(), docs[i].end(), w);
            const double weight = static_cast<double>(tf) * std::log(static_cast<double>(docs.size()) / static_cast<double>(df));
            if (tf > 0 && weight != 0.0) out[{i, w}] = weight;
        }
    }
    return out;
}

// Positive PMI straight from the definition with probabilities.
inline std::map<std::pair<std::string, std::string>, double> pmi_table(const WindowCounts& wc) {
    std::map<std::pair<std::string, std::string>, double> out;
    const double total = static_cast<double>(wc.total);
    for (const auto& [key, count] : wc.pair) {
        const double pij = static_cast<double>(count) / total;
        const double pi = static_cast<double>(wc.word.at(key.first)) / total;
        const double pj = static_cast<double>(wc.word.at(key.second)) / total;
        const double v = std::log(pij / (pi * pj));
        if (v > 1e-13) out[key] = v;
    }
    return out;
}

// Dense assembly of the text-graph adjacency.
inline DenseMatrix dense_adjacency(const std::vector<gfb::WeightedEdge>& doc_word,
                                   const std::vector<gfb::WeightedEdge>& word_word, std::size_t n_docs,
                                   std::size_t n_words) {
    DenseMatrix a(n_docs + n_words, n_docs + n_words);
    for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) = 1.0;
    for (const auto& e : doc_word) a(e.a, n_docs + e.b) = a(n_docs + e.b, e.a) = e.weight;
    for (const auto& e : word_word) a(n_docs + e.a, n_docs + e.b) = a(n_docs + e.b, n_docs + e.a) = e.weight;
    return a;
}

// Slow GFB pre-activation: materializes M_u = z_u z_u^T per node and applies
// the row-wise summary to it.
inline DenseMatrix gfb_explicit(const DenseMatrix& a_norm, const DenseMatrix& h, const DenseMatrix& w, double lambda,
                                const gfb::GenVecOp& op) {
    const DenseMatrix z = dense_product(h, dense_transpose(w));
    DenseMatrix t(z.rows(), z.cols());
    for (std::size_t u = 0; u < z.rows(); ++u) {
        std::vector<double> zu(z.row(u).begin(), z.row(u).end());
        const auto g = gfb::genvec(outer(zu), op);
        for (std::size_t c = 0; c < zu.size(); ++c) t(u, c) = zu[c] + lambda * g[c];
    }
    return dense_product(a_norm, t);
}

inline std::vector<std::size_t> random_permutation(std::size_t n, gfb::Rng& rng) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    gfb::shuffle(p, rng);
    return p;
}

} // namespace oracle

#endif // GFB_TESTS_ORACLES_HPP
