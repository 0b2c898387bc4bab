#ifndef GFB_GRAPH_IO_HPP
#define GFB_GRAPH_IO_HPP

// Text formats:
//
// Corpus TSV, one document per line:
//   doc_id <TAB> train|test <TAB> label <TAB> text
// Any further tabs belong to the text. Blank lines are ignored.
//
// Stopwords: one word per line, lowercased on load.
//
// Graph file:
//   textgraph v1 <n_docs> <n_words> <nnz>
//   <row> <col> <value>              nnz lines of A, row-major, %.17g
//   classes <n_classes>
//   <class name>                     one per line, in class-index order
//   docs <n_docs>
//   <doc_id> <TAB> <split> <TAB> <class index>
//   words <n_words>
//   <word>
// The normalized adjacency is recomputed on load; validation masks are not
// stored (they are drawn at training time).

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "gfb/error.hpp"
#include "gfb/textgraph.hpp"

namespace gfb {

namespace detail {

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline Corpus read_corpus_tsv(std::istream& in, const std::string& source = "<corpus>") {
    Corpus c;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        detail::strip_cr(line);
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto t1 = line.find('\t');
        const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        const auto t3 = t2 == std::string::npos ? t2 : line.find('\t', t2 + 1);
        if (t3 == std::string::npos)
            throw DataError(source + ":" + std::to_string(line_no) + ": expected 4 tab-separated fields");
        Document d;
        d.id = line.substr(0, t1);
        const std::string split = line.substr(t1 + 1, t2 - t1 - 1);
        d.label = line.substr(t2 + 1, t3 - t2 - 1);
        d.text = line.substr(t3 + 1);
        if (d.id.empty()) throw DataError(source + ":" + std::to_string(line_no) + ": empty doc_id");
        if (d.label.empty()) throw DataError(source + ":" + std::to_string(line_no) + ": empty label");
        if (split == "train")
            d.split = Split::Train;
        else if (split == "test")
            d.split = Split::Test;
        else
            throw DataError(source + ":" + std::to_string(line_no) + ": split must be 'train' or 'test', got '" +
                            split + "'");
        c.documents.push_back(std::move(d));
    }
    return c;
}

inline void write_corpus_tsv(std::ostream& out, const Corpus& c) {
    for (const auto& d : c.documents)
        out << d.id << '\t' << to_string(d.split) << '\t' << d.label << '\t' << d.text << '\n';
}

inline StopwordSet read_stopwords(std::istream& in) {
    StopwordSet s;
    std::string line;
    while (std::getline(in, line)) {
        detail::strip_cr(line);
        const auto b = line.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t");
        std::string w = line.substr(b, e - b + 1);
        for (char& ch : w)
            if (static_cast<unsigned char>(ch) < 0x80) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        s.insert(std::move(w));
    }
    return s;
}

inline void write_graph(std::ostream& out, const TextGraph& g) {
    out << "textgraph v1 " << g.n_docs << ' ' << g.n_words << ' ' << g.adjacency.nnz() << '\n';
    for (const auto& t : g.adjacency.triplets()) out << t.row << ' ' << t.col << ' ' << detail::format_double(t.value) << '\n';
    out << "classes " << g.class_names.size() << '\n';
    for (const auto& c : g.class_names) out << c << '\n';
    out << "docs " << g.n_docs << '\n';
    for (std::size_t i = 0; i < g.n_docs; ++i)
        out << g.node_names[i] << '\t' << (g.test_mask[i] ? "test" : "train") << '\t' << g.labels[i] << '\n';
    out << "words " << g.n_words << '\n';
    for (std::size_t i = 0; i < g.n_words; ++i) out << g.node_names[g.n_docs + i] << '\n';
}

inline TextGraph read_graph(std::istream& in, const std::string& source = "<graph>") {
    std::size_t line_no = 0;
    std::string line;
    auto next = [&]() -> std::string& {
        if (!std::getline(in, line)) throw DataError(source + ": unexpected end of file after line " + std::to_string(line_no));
        ++line_no;
        detail::strip_cr(line);
        return line;
    };
    auto fail = [&](const std::string& what) -> DataError {
        return DataError(source + ":" + std::to_string(line_no) + ": " + what);
    };
    auto section = [&](const std::string& name) {
        std::istringstream ss(next());
        std::string tag;
        std::size_t count = 0;
        if (!(ss >> tag >> count) || tag != name) throw fail("expected '" + name + " <count>'");
        return count;
    };

    TextGraph g;
    std::size_t nnz = 0;
    {
        std::istringstream ss(next());
        std::string magic, version;
        if (!(ss >> magic >> version >> g.n_docs >> g.n_words >> nnz) || magic != "textgraph")
            throw fail("missing 'textgraph' header");
        if (version != "v1") throw fail("unsupported graph version '" + version + "'");
    }
    const std::size_t n = g.n_nodes();
    std::vector<Triplet> t;
    t.reserve(nnz);
    for (std::size_t e = 0; e < nnz; ++e) {
        const char* p = next().c_str();
        char* end = nullptr;
        const auto r = std::strtoull(p, &end, 10);
        if (end == p) throw fail("bad row index");
        p = end;
        const auto c = std::strtoull(p, &end, 10);
        if (end == p) throw fail("bad column index");
        p = end;
        const double v = std::strtod(p, &end);
        if (end == p) throw fail("bad value");
        if (r >= n || c >= n) throw fail("entry outside " + std::to_string(n) + " nodes");
        t.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c), v});
    }
    try {
        g.adjacency = SparseMatrix::from_triplets(n, n, std::move(t));
        g.normalized = normalize_adjacency(g.adjacency);
    } catch (const DataError&) {
        throw;
    } catch (const Error& e) {
        throw DataError(source + ": invalid adjacency: " + e.what());
    }

    const std::size_t n_classes = section("classes");
    for (std::size_t k = 0; k < n_classes; ++k) g.class_names.push_back(next());

    if (section("docs") != g.n_docs) throw fail("document count disagrees with header");
    g.labels.assign(n, -1);
    g.train_mask.assign(n, 0);
    g.val_mask.assign(n, 0);
    g.test_mask.assign(n, 0);
    for (std::size_t i = 0; i < g.n_docs; ++i) {
        const std::string& l = next();
        const auto t1 = l.find('\t');
        const auto t2 = t1 == std::string::npos ? t1 : l.find('\t', t1 + 1);
        if (t2 == std::string::npos) throw fail("expected doc_id<TAB>split<TAB>class");
        const std::string split = l.substr(t1 + 1, t2 - t1 - 1);
        if (split != "train" && split != "test") throw fail("bad split '" + split + "'");
        const int label = std::atoi(l.c_str() + t2 + 1);
        if (label < 0 || static_cast<std::size_t>(label) >= n_classes) throw fail("class index out of range");
        g.node_names.push_back(l.substr(0, t1));
        g.labels[i] = label;
        (split == "train" ? g.train_mask : g.test_mask)[i] = 1;
    }
    if (section("words") != g.n_words) throw fail("word count disagrees with header");
    for (std::size_t i = 0; i < g.n_words; ++i) g.node_names.push_back(next());
    return g;
}

template <class T, class Fn>
T with_input_file(const std::string& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "' for reading");
    return fn(in);
}

inline Corpus load_corpus(const std::string& path) {
    return with_input_file<Corpus>(path, [&](std::istream& in) { return read_corpus_tsv(in, path); });
}

inline StopwordSet load_stopwords(const std::string& path) {
    return with_input_file<StopwordSet>(path, [](std::istream& in) { return read_stopwords(in); });
}

inline TextGraph load_graph(const std::string& path) {
    return with_input_file<TextGraph>(path, [&](std::istream& in) { return read_graph(in, path); });
}

inline void save_graph(const std::string& path, const TextGraph& g) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    write_graph(out, g);
    if (!out) throw DataError("failed writing '" + path + "'");
}

} // namespace gfb

#endif // GFB_GRAPH_IO_HPP
