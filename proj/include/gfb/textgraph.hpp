#ifndef GFB_TEXTGRAPH_HPP
#define GFB_TEXTGRAPH_HPP

// Corpus -> heterogeneous document/word graph.
//
// Nodes are ordered documents first (corpus order), then words (vocabulary
// order, i.e. byte-wise sorted). Document-word edges carry TF-IDF weights,
// word-word edges carry positive PMI computed from sliding-window presence
// counts, and every node has a self-loop of weight 1.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gfb/core_math.hpp"
#include "gfb/error.hpp"

namespace gfb {

enum class Split { Train, Test };

inline std::string_view to_string(Split s) { return s == Split::Train ? "train" : "test"; }

struct Document {
    std::string id;
    Split split = Split::Train;
    std::string label;
    std::string text;
};

struct Corpus {
    std::vector<Document> documents;

    /// Throws DataError unless ids are unique and both splits are present.
    void validate() const {
        std::unordered_set<std::string> seen;
        bool has_train = false, has_test = false;
        for (const auto& d : documents) {
            if (!seen.insert(d.id).second) throw DataError("corpus: duplicate doc_id '" + d.id + "'");
            (d.split == Split::Train ? has_train : has_test) = true;
        }
        if (!has_train) throw DataError("corpus: no train documents");
        if (!has_test) throw DataError("corpus: no test documents");
    }
};

using StopwordSet = std::unordered_set<std::string>;
using TokenList = std::vector<std::string>;

namespace detail {

inline bool is_ascii_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// Byte length of a non-ASCII Unicode whitespace code point starting at `pos`
/// (NEL, NBSP, U+1680, U+2000..U+200A, U+2028, U+2029, U+202F, U+205F,
/// U+3000), or 0.
inline std::size_t unicode_space_len(std::string_view s, std::size_t pos) {
    auto at = [&](std::size_t k) -> unsigned { return pos + k < s.size() ? static_cast<unsigned char>(s[pos + k]) : 0u; };
    const unsigned b0 = at(0);
    if (b0 == 0xC2 && (at(1) == 0x85 || at(1) == 0xA0)) return 2;
    if (b0 == 0xE1 && at(1) == 0x9A && at(2) == 0x80) return 3;
    if (b0 == 0xE2 && at(1) == 0x80 && ((at(2) >= 0x80 && at(2) <= 0x8A) || at(2) == 0xA8 || at(2) == 0xA9 || at(2) == 0xAF))
        return 3;
    if (b0 == 0xE2 && at(1) == 0x81 && at(2) == 0x9F) return 3;
    if (b0 == 0xE3 && at(1) == 0x80 && at(2) == 0x80) return 3;
    return 0;
}

/// Letters, digits and any non-ASCII byte (so UTF-8 letters survive intact).
inline bool is_word_char(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

inline void flush_token(std::string& tok, const StopwordSet& stopwords, TokenList& out) {
    std::size_t b = 0, e = tok.size();
    while (b < e && !is_word_char(static_cast<unsigned char>(tok[b]))) ++b;
    while (e > b && !is_word_char(static_cast<unsigned char>(tok[e - 1]))) --e;
    if (e > b) {
        std::string word = tok.substr(b, e - b);
        if (!stopwords.contains(word)) out.push_back(std::move(word));
    }
    tok.clear();
}

} // namespace detail

/// Tokenizer rules:
///   1. ASCII letters are lowercased; other bytes are kept as-is.
///   2. ASCII and Unicode whitespace separate tokens.
///   3. Inside a token, ASCII punctuation other than ' and - also separates.
///   4. Leading/trailing ' and - are stripped from each piece.
///   5. Empty pieces and stopwords are dropped. Order is preserved.
inline TokenList preprocess(std::string_view raw, const StopwordSet& stopwords) {
    TokenList out;
    std::string tok;
    for (std::size_t i = 0; i < raw.size();) {
        const auto c = static_cast<unsigned char>(raw[i]);
        if (detail::is_ascii_space(c)) {
            detail::flush_token(tok, stopwords, out);
            ++i;
        } else if (std::size_t n = detail::unicode_space_len(raw, i); n > 0) {
            detail::flush_token(tok, stopwords, out);
            i += n;
        } else if (detail::is_word_char(c) || c == '\'' || c == '-') {
            tok.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
            ++i;
        } else {
            detail::flush_token(tok, stopwords, out);
            ++i;
        }
    }
    detail::flush_token(tok, stopwords, out);
    return out;
}

struct PairCount {
    std::size_t i; ///< smaller word index
    std::size_t j; ///< larger word index
    std::int64_t windows;
};

/// Vocabulary plus the sliding-window statistics used for PMI.
struct Vocabulary {
    std::vector<std::string> words;                    ///< sorted
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::int64_t> doc_freq;                ///< documents containing the word
    std::vector<std::int64_t> term_freq;               ///< total occurrences
    std::int64_t n_windows = 0;                        ///< W
    std::vector<std::int64_t> word_windows;            ///< W(i)
    std::vector<PairCount> pair_windows;               ///< W(i,j) > 0, sorted by (i, j)
    std::size_t n_documents = 0;

    std::size_t size() const noexcept { return words.size(); }

    std::int64_t pair(std::size_t a, std::size_t b) const {
        if (a > b) std::swap(a, b);
        auto it = std::lower_bound(pair_windows.begin(), pair_windows.end(), std::pair{a, b},
                                   [](const PairCount& p, const std::pair<std::size_t, std::size_t>& key) {
                                       return std::tie(p.i, p.j) < std::tie(key.first, key.second);
                                   });
        if (it == pair_windows.end() || it->i != a || it->j != b) return 0;
        return it->windows;
    }

    /// Maps a token list to vocabulary indices, dropping out-of-vocabulary tokens.
    std::vector<std::size_t> encode(const TokenList& tokens) const {
        std::vector<std::size_t> ids;
        ids.reserve(tokens.size());
        for (const auto& t : tokens)
            if (auto it = index.find(t); it != index.end()) ids.push_back(it->second);
        return ids;
    }
};

/// Builds the vocabulary (words occurring at least `min_freq` times) and
/// window statistics over the in-vocabulary token stream of each document.
/// A document with L tokens contributes max(1, L - window_size + 1) windows
/// (none if it has no in-vocabulary tokens); counts are per-window presence.
inline Vocabulary build_vocab(const std::vector<TokenList>& docs, std::size_t min_freq, std::size_t window_size) {
    if (min_freq < 1) throw Error("build_vocab: min_freq must be >= 1");
    if (window_size < 1) throw Error("build_vocab: window_size must be >= 1");

    std::map<std::string, std::int64_t> freq;
    for (const auto& d : docs)
        for (const auto& t : d) ++freq[t];

    Vocabulary v;
    v.n_documents = docs.size();
    for (const auto& [word, count] : freq) {
        if (count >= static_cast<std::int64_t>(min_freq)) {
            v.index.emplace(word, v.words.size());
            v.words.push_back(word);
            v.term_freq.push_back(count);
        }
    }
    if (v.words.empty())
        throw DataError("build_vocab: vocabulary is empty after filtering (min_freq = " + std::to_string(min_freq) + ")");

    const std::size_t n = v.words.size();
    v.doc_freq.assign(n, 0);
    v.word_windows.assign(n, 0);
    std::unordered_map<std::uint64_t, std::int64_t> pairs;
    std::vector<std::size_t> distinct;

    for (const auto& d : docs) {
        const auto ids = v.encode(d);
        if (ids.empty()) continue;

        distinct.assign(ids.begin(), ids.end());
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (std::size_t w : distinct) ++v.doc_freq[w];

        const std::size_t len = ids.size();
        const std::size_t n_win = len <= window_size ? 1 : len - window_size + 1;
        const std::size_t span = std::min(len, window_size);
        for (std::size_t s = 0; s < n_win; ++s) {
            distinct.assign(ids.begin() + static_cast<std::ptrdiff_t>(s),
                            ids.begin() + static_cast<std::ptrdiff_t>(s + span));
            std::sort(distinct.begin(), distinct.end());
            distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
            ++v.n_windows;
            for (std::size_t a = 0; a < distinct.size(); ++a) {
                ++v.word_windows[distinct[a]];
                for (std::size_t b = a + 1; b < distinct.size(); ++b)
                    ++pairs[static_cast<std::uint64_t>(distinct[a]) * n + distinct[b]];
            }
        }
    }

    v.pair_windows.reserve(pairs.size());
    for (const auto& [key, count] : pairs) v.pair_windows.push_back({key / n, key % n, count});
    std::sort(v.pair_windows.begin(), v.pair_windows.end(),
              [](const PairCount& a, const PairCount& b) { return std::tie(a.i, a.j) < std::tie(b.i, b.j); });
    return v;
}

struct WeightedEdge {
    std::size_t a;
    std::size_t b;
    double weight;
};

/// (document index, word index, tf * ln(N / df)) with tf the raw count.
/// Zero weights (words present in every document) are omitted.
inline std::vector<WeightedEdge> tfidf(const std::vector<TokenList>& docs, const Vocabulary& vocab) {
    std::vector<WeightedEdge> edges;
    const double n_docs = static_cast<double>(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        std::map<std::size_t, std::int64_t> counts;
        for (std::size_t w : vocab.encode(docs[d])) ++counts[w];
        for (const auto& [w, tf] : counts) {
            const double idf = std::log(n_docs / static_cast<double>(vocab.doc_freq[w]));
            const double weight = static_cast<double>(tf) * idf;
            if (weight > 0.0) edges.push_back({d, w, weight});
        }
    }
    return edges;
}

/// Positive PMI word pairs (i < j), PMI = ln(W(i,j) W / (W(i) W(j))).
inline std::vector<WeightedEdge> pmi(const Vocabulary& vocab) {
    if (vocab.n_windows < 1) throw Error("pmi: vocabulary has no windows");
    std::vector<WeightedEdge> edges;
    const std::int64_t total = vocab.n_windows;
    for (const auto& p : vocab.pair_windows) {
        const std::int64_t wi = vocab.word_windows[p.i];
        const std::int64_t wj = vocab.word_windows[p.j];
        // PMI > 0  <=>  W(i,j) W > W(i) W(j); decided exactly in integers.
        if (p.windows * total <= wi * wj) continue;
        const double value = std::log(static_cast<double>(p.windows) * static_cast<double>(total) /
                                      (static_cast<double>(wi) * static_cast<double>(wj)));
        edges.push_back({p.i, p.j, value});
    }
    return edges;
}

/// Symmetric (n_docs + n_words)^2 adjacency with unit diagonal.
inline SparseMatrix assemble_adjacency(const std::vector<WeightedEdge>& doc_word,
                                       const std::vector<WeightedEdge>& word_word, std::size_t n_docs,
                                       std::size_t n_words) {
    const std::size_t n = n_docs + n_words;
    std::vector<Triplet> t;
    t.reserve(n + 2 * (doc_word.size() + word_word.size()));
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    auto check_weight = [](double w) {
        if (!(std::isfinite(w) && w >= 0.0)) throw Error("assemble_adjacency: invalid edge weight " + std::to_string(w));
    };
    for (const auto& e : doc_word) {
        if (e.a >= n_docs || e.b >= n_words) throw Error("assemble_adjacency: doc-word edge index out of range");
        check_weight(e.weight);
        t.push_back({e.a, n_docs + e.b, e.weight});
        t.push_back({n_docs + e.b, e.a, e.weight});
    }
    for (const auto& e : word_word) {
        if (e.a >= n_words || e.b >= n_words) throw Error("assemble_adjacency: word-word edge index out of range");
        if (e.a == e.b) throw Error("assemble_adjacency: word-word self edge " + std::to_string(e.a));
        check_weight(e.weight);
        t.push_back({n_docs + e.a, n_docs + e.b, e.weight});
        t.push_back({n_docs + e.b, n_docs + e.a, e.weight});
    }
    return SparseMatrix::from_triplets(n, n, std::move(t));
}

/// Weighted degree (row sums, accumulated in column order).
inline std::vector<double> weighted_degree(const SparseMatrix& a) {
    std::vector<double> deg(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p) deg[i] += a.values()[p];
    return deg;
}

/// D^{-1/2} A D^{-1/2}. Each entry is A_ij / sqrt(deg_i * deg_j), which is
/// exactly symmetric when A is; the product falls back to
/// sqrt(deg_i) * sqrt(deg_j) when it leaves the normal range. Entries that
/// underflow to zero are dropped.
inline SparseMatrix normalize_adjacency(const SparseMatrix& a) {
    if (a.rows() != a.cols()) throw Error("normalize_adjacency: matrix is not square");
    if (!a.is_symmetric()) throw Error("normalize_adjacency: matrix is not symmetric");
    const auto deg = weighted_degree(a);
    for (std::size_t i = 0; i < deg.size(); ++i)
        if (!(deg[i] > 0.0))
            throw Error("normalize_adjacency: node " + std::to_string(i) + " has non-positive degree " +
                        std::to_string(deg[i]));
    auto t = a.triplets();
    for (auto& e : t) {
        const double d = deg[e.row] * deg[e.col];
        e.value /= std::isnormal(d) ? std::sqrt(d) : std::sqrt(deg[e.row]) * std::sqrt(deg[e.col]);
    }
    return SparseMatrix::from_triplets(a.rows(), a.cols(), std::move(t));
}

struct TrainValSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

/// Moves round(val_fraction * |train|) randomly chosen ids into validation.
/// Both halves are returned in ascending order.
inline TrainValSplit split_dataset(const std::vector<std::size_t>& train_ids, double val_fraction, Rng& rng) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw Error("split_dataset: val_fraction must be in (0, 1), got " + std::to_string(val_fraction));
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(train_ids.size())));
    if (n_val == 0 || n_val >= train_ids.size())
        throw Error("split_dataset: validation set of size " + std::to_string(n_val) + " from " +
                    std::to_string(train_ids.size()) + " training ids is degenerate");
    std::vector<std::size_t> order = train_ids;
    shuffle(order, rng);
    TrainValSplit s;
    s.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.train.begin(), s.train.end());
    return s;
}

using NodeMask = std::vector<std::uint8_t>;

inline std::vector<std::size_t> mask_indices(const NodeMask& m) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m[i]) idx.push_back(i);
    return idx;
}

/// Document/word graph. Labels and masks are per node; word nodes carry label
/// -1 and belong to no mask.
struct TextGraph {
    std::size_t n_docs = 0;
    std::size_t n_words = 0;
    SparseMatrix adjacency;  ///< A, raw weights with unit self-loops
    SparseMatrix normalized; ///< D^{-1/2} A D^{-1/2}
    std::vector<std::string> class_names;
    std::vector<int> labels;
    NodeMask train_mask;
    NodeMask val_mask;
    NodeMask test_mask;
    std::vector<std::string> node_names; ///< doc ids, then words

    std::size_t n_nodes() const noexcept { return n_docs + n_words; }
    std::size_t n_classes() const noexcept { return class_names.size(); }

    /// Carves a validation set out of the training documents.
    void assign_validation(double val_fraction, Rng& rng) {
        std::vector<std::size_t> train = mask_indices(train_mask);
        for (std::size_t i : mask_indices(val_mask)) train.push_back(i);
        std::sort(train.begin(), train.end());
        const auto s = split_dataset(train, val_fraction, rng);
        train_mask.assign(n_nodes(), 0);
        val_mask.assign(n_nodes(), 0);
        for (std::size_t i : s.train) train_mask[i] = 1;
        for (std::size_t i : s.val) val_mask[i] = 1;
    }

    friend bool operator==(const TextGraph&, const TextGraph&) = default;
};

struct GraphOptions {
    std::size_t window_size = 20;
    std::size_t min_freq = 5;
};

inline TextGraph build_text_graph(const Corpus& corpus, const StopwordSet& stopwords, const GraphOptions& opt = {}) {
    corpus.validate();
    std::vector<TokenList> docs;
    docs.reserve(corpus.documents.size());
    for (const auto& d : corpus.documents) docs.push_back(preprocess(d.text, stopwords));

    const Vocabulary vocab = build_vocab(docs, opt.min_freq, opt.window_size);

    TextGraph g;
    g.n_docs = corpus.documents.size();
    g.n_words = vocab.size();
    g.adjacency = assemble_adjacency(tfidf(docs, vocab), pmi(vocab), g.n_docs, g.n_words);
    g.normalized = normalize_adjacency(g.adjacency);

    std::set<std::string> classes;
    for (const auto& d : corpus.documents) classes.insert(d.label);
    g.class_names.assign(classes.begin(), classes.end());

    const std::size_t n = g.n_nodes();
    g.labels.assign(n, -1);
    g.train_mask.assign(n, 0);
    g.val_mask.assign(n, 0);
    g.test_mask.assign(n, 0);
    g.node_names.reserve(n);
    for (std::size_t i = 0; i < g.n_docs; ++i) {
        const auto& d = corpus.documents[i];
        g.labels[i] = static_cast<int>(std::lower_bound(g.class_names.begin(), g.class_names.end(), d.label) -
                                       g.class_names.begin());
        (d.split == Split::Train ? g.train_mask : g.test_mask)[i] = 1;
        g.node_names.push_back(d.id);
    }
    for (const auto& w : vocab.words) g.node_names.push_back(w);
    return g;
}

} // namespace gfb

#endif // GFB_TEXTGRAPH_HPP
