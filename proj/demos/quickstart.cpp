// Synthesize a small corpus, build its text graph, train a GFB-GCN with
// MaxVec aggregation and report test accuracy.

#include <cstdio>

#include "gfb/gfb.hpp"

int main() {
    const gfb::Corpus corpus = gfb::synthesize_corpus({});
    const gfb::TextGraph graph = gfb::build_text_graph(corpus, {});
    std::printf("graph: %zu docs, %zu words, %zu nonzeros\n", graph.n_docs, graph.n_words, graph.adjacency.nnz());

    gfb::TrainConfig cfg;
    cfg.genvec = gfb::GenVecKind::MaxVec;
    const auto result = gfb::train(graph, cfg);
    const auto test = gfb::evaluate(result.model, graph, graph.test_mask);
    std::printf("stopped at epoch %zu (best %zu), lambda %.4f, test accuracy %.4f, macro-F1 %.4f\n",
                result.history.stop_epoch, result.history.best_epoch, result.model.layer2.lambda, test.accuracy,
                test.macro_f1);
}
