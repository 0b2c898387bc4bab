#ifndef GFB_CONFIG_HPP
#define GFB_CONFIG_HPP

// Flat key=value run configuration. '#' starts a comment; blank lines are
// ignored; unknown keys are rejected.
//
//   key            default   meaning
//   learning_rate  0.02      Adam step size
//   dropout        0.5       dropout on the hidden layer
//   max_epochs     200
//   patience       10        early-stopping patience (epochs)
//   val_fraction   0.1       share of training docs held out for validation
//   seed           1
//   embedding_dim  200       hidden width of layer 1
//   genvec         max       max | mean | diag | topk | none (plain GCN)
//   k_prime        3         entries averaged by topk
//   lambda_init    0.1       initial second-order weight
//   window_size    20        sliding window for PMI
//   min_freq       5         minimum corpus frequency of a word
//   corpus, stopwords, graph, checkpoint, metrics   file paths (empty)

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "gfb/error.hpp"
#include "gfb/graph_io.hpp"
#include "gfb/train.hpp"

namespace gfb {

struct RunConfig {
    TrainConfig train;
    GraphOptions graph_options;
    std::string corpus;
    std::string stopwords;
    std::string graph;
    std::string checkpoint;
    std::string metrics;

    static const std::vector<std::string>& keys() {
        static const std::vector<std::string> k{"learning_rate", "dropout",     "max_epochs", "patience",
                                                "val_fraction",  "seed",        "embedding_dim", "genvec",
                                                "k_prime",       "lambda_init", "window_size", "min_freq",
                                                "corpus",        "stopwords",   "graph",      "checkpoint",
                                                "metrics"};
        return k;
    }

    /// Sets one key from its textual value. Throws Error on unknown keys or
    /// unparsable values.
    void set(const std::string& key, const std::string& value) {
        auto as_double = [&]() {
            char* end = nullptr;
            const double v = std::strtod(value.c_str(), &end);
            if (value.empty() || *end != '\0') throw Error("config: '" + key + "' expects a number, got '" + value + "'");
            return v;
        };
        auto as_count = [&]() {
            std::uint64_t v = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || p != value.data() + value.size())
                throw Error("config: '" + key + "' expects a non-negative integer, got '" + value + "'");
            return v;
        };
        if (key == "learning_rate") train.learning_rate = as_double();
        else if (key == "dropout") train.dropout = as_double();
        else if (key == "max_epochs") train.max_epochs = as_count();
        else if (key == "patience") train.patience = as_count();
        else if (key == "val_fraction") train.val_fraction = as_double();
        else if (key == "seed") train.seed = as_count();
        else if (key == "embedding_dim") train.embedding_dim = as_count();
        else if (key == "genvec") {
            if (value == "none") {
                train.genvec.reset();
            } else {
                auto k = parse_genvec_kind(value);
                if (!k || *k == GenVecKind::UpperVec)
                    throw Error("config: genvec must be one of max, mean, diag, topk, none; got '" + value + "'");
                train.genvec = *k;
            }
        } else if (key == "k_prime") train.k_prime = as_count();
        else if (key == "lambda_init") train.lambda_init = as_double();
        else if (key == "window_size") graph_options.window_size = as_count();
        else if (key == "min_freq") graph_options.min_freq = as_count();
        else if (key == "corpus") corpus = value;
        else if (key == "stopwords") stopwords = value;
        else if (key == "graph") graph = value;
        else if (key == "checkpoint") checkpoint = value;
        else if (key == "metrics") metrics = value;
        else throw Error("config: unknown key '" + key + "'");
    }

    /// Parses "key=value".
    void set_assignment(const std::string& assignment) {
        const auto eq = assignment.find('=');
        if (eq == std::string::npos) throw Error("config: expected key=value, got '" + assignment + "'");
        set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
    }

    static RunConfig parse(std::istream& in, const std::string& source = "<config>") {
        RunConfig c;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            if (trim(line).empty()) continue;
            try {
                c.set_assignment(line);
            } catch (const Error& e) {
                throw Error(source + ":" + std::to_string(line_no) + ": " + e.what());
            }
        }
        return c;
    }

    static RunConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open '" + path + "' for reading");
        return parse(in, path);
    }

    void write(std::ostream& out) const {
        out << "learning_rate=" << detail::format_double(train.learning_rate) << '\n'
            << "dropout=" << detail::format_double(train.dropout) << '\n'
            << "max_epochs=" << train.max_epochs << '\n'
            << "patience=" << train.patience << '\n'
            << "val_fraction=" << detail::format_double(train.val_fraction) << '\n'
            << "seed=" << train.seed << '\n'
            << "embedding_dim=" << train.embedding_dim << '\n'
            << "genvec=" << (train.genvec ? std::string(to_string(*train.genvec)) : "none") << '\n'
            << "k_prime=" << train.k_prime << '\n'
            << "lambda_init=" << detail::format_double(train.lambda_init) << '\n'
            << "window_size=" << graph_options.window_size << '\n'
            << "min_freq=" << graph_options.min_freq << '\n'
            << "corpus=" << corpus << '\n'
            << "stopwords=" << stopwords << '\n'
            << "graph=" << graph << '\n'
            << "checkpoint=" << checkpoint << '\n'
            << "metrics=" << metrics << '\n';
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }
};

} // namespace gfb

#endif // GFB_CONFIG_HPP
