#ifndef GFB_SYNTH_HPP
#define GFB_SYNTH_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "gfb/core_math.hpp"
#include "gfb/error.hpp"
#include "gfb/textgraph.hpp"

namespace gfb {

struct SynthOptions {
    std::size_t n_docs = 200;
    std::size_t n_classes = 2;
    std::size_t vocab_size = 150;
    double noise = 0.3;
    std::uint64_t seed = 7;
    std::size_t min_length = 20;
    std::size_t max_length = 40;
};

/// Deterministic labeled corpus.
///
/// The vocabulary w000..w{V-1} is cut into n_classes contiguous blocks. Each
/// token of a class-c document is drawn uniformly from the whole vocabulary
/// with probability `noise`, otherwise uniformly from block c. Document i
/// has class i mod n_classes; a seeded shuffle puts round(0.7 n) documents
/// in the training split.
inline Corpus synthesize_corpus(const SynthOptions& o) {
    if (o.n_classes < 2) throw Error("synth: need at least 2 classes");
    if (o.n_docs < 2 * o.n_classes) throw Error("synth: n_docs must be >= 2 * n_classes");
    if (o.vocab_size < o.n_classes) throw Error("synth: vocab_size must be >= n_classes");
    if (!(o.noise >= 0.0 && o.noise <= 1.0)) throw Error("synth: noise must lie in [0, 1]");
    if (o.min_length < 1 || o.max_length < o.min_length) throw Error("synth: invalid document length range");

    const int width = std::max(3, static_cast<int>(std::to_string(o.vocab_size - 1).size()));
    auto word = [&](std::size_t i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "w%0*zu", width, i);
        return std::string(buf);
    };
    auto block_begin = [&](std::size_t c) { return c * o.vocab_size / o.n_classes; };

    const Rng root(o.seed);
    Rng text_rng = root.split(1);
    Rng split_rng = root.split(2);

    std::vector<std::size_t> order(o.n_docs);
    for (std::size_t i = 0; i < o.n_docs; ++i) order[i] = i;
    shuffle(order, split_rng);
    const auto n_train = static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(o.n_docs)));
    std::vector<std::uint8_t> is_train(o.n_docs, 0);
    for (std::size_t i = 0; i < n_train; ++i) is_train[order[i]] = 1;

    Corpus c;
    for (std::size_t i = 0; i < o.n_docs; ++i) {
        const std::size_t cls = i % o.n_classes;
        const std::size_t lo = block_begin(cls), hi = block_begin(cls + 1);
        const std::size_t len = o.min_length + text_rng.uniform_index(o.max_length - o.min_length + 1);
        std::string text;
        for (std::size_t t = 0; t < len; ++t) {
            std::size_t w;
            if (text_rng.uniform() < o.noise)
                w = text_rng.uniform_index(o.vocab_size);
            else
                w = lo + text_rng.uniform_index(hi - lo);
            if (t) text += ' ';
            text += word(w);
        }
        char id[32];
        std::snprintf(id, sizeof id, "doc%04zu", i);
        c.documents.push_back({id, is_train[i] ? Split::Train : Split::Test, "class" + std::to_string(cls), text});
    }
    return c;
}

} // namespace gfb

#endif // GFB_SYNTH_HPP
