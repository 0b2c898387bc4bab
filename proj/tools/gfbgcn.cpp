// gfbgcn: build text graphs, train/evaluate GFB-GCN models, check gradients
// and benchmark epoch cost.
//
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 check failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gfb/gfb.hpp"

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kCheckFailed = 3 };

struct ConfigError : gfb::Error {
    using gfb::Error::Error;
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) out.push_back(item);
    return out;
}

gfb::RunConfig resolve_config(const std::string& path, const std::vector<std::string>& overrides) {
    try {
        gfb::RunConfig c = path.empty() ? gfb::RunConfig{} : gfb::RunConfig::load(path);
        for (const auto& o : overrides) c.set_assignment(o);
        c.train.validate();
        return c;
    } catch (const gfb::DataError&) {
        throw;
    } catch (const gfb::Error& e) {
        throw ConfigError(e.what());
    }
}

int cmd_synth(const gfb::SynthOptions& o, const std::string& out_path) {
    const auto corpus = gfb::synthesize_corpus(o);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw gfb::DataError("cannot open '" + out_path + "' for writing");
    gfb::write_corpus_tsv(out, corpus);
    std::cout << "wrote " << corpus.documents.size() << " documents to " << out_path << '\n';
    return kOk;
}

int cmd_build_graph(const std::string& corpus_path, const std::string& stopwords_path, const std::string& out_path,
                    const gfb::GraphOptions& opt) {
    const auto corpus = gfb::load_corpus(corpus_path);
    const auto stop = stopwords_path.empty() ? gfb::StopwordSet{} : gfb::load_stopwords(stopwords_path);
    const auto g = gfb::build_text_graph(corpus, stop, opt);
    gfb::save_graph(out_path, g);
    std::size_t offdiag = 0;
    for (const auto& t : g.adjacency.triplets()) offdiag += t.row < t.col ? 1 : 0;
    std::cout << "nodes " << g.n_nodes() << " (docs " << g.n_docs << ", words " << g.n_words << ")\n"
              << "edges " << offdiag << " (nnz " << g.adjacency.nnz() << ")\n"
              << "classes " << g.n_classes() << '\n';
    return kOk;
}

int cmd_train(const gfb::RunConfig& cfg, bool with_timing) {
    if (cfg.graph.empty()) throw ConfigError("train: no graph path (use --graph or graph= in the config)");
    const auto g = gfb::load_graph(cfg.graph);
    const auto result = gfb::train(g, cfg.train);
    const auto test = gfb::evaluate(result.model, g, g.test_mask);
    if (!cfg.checkpoint.empty()) gfb::save_checkpoint(cfg.checkpoint, result.model);
    if (!cfg.metrics.empty()) {
        std::ofstream out(cfg.metrics, std::ios::binary);
        if (!out) throw gfb::DataError("cannot open '" + cfg.metrics + "' for writing");
        gfb::write_metrics_jsonl(out, result.history, test, g.class_names, with_timing);
    }
    std::cout << gfb::summary_json(result.history, test, g.class_names).dump() << '\n';
    return kOk;
}

int cmd_eval(const std::string& graph_path, const std::string& ckpt_path, const std::string& mask_name) {
    const auto g = gfb::load_graph(graph_path);
    const auto model = gfb::load_checkpoint(ckpt_path);
    if (model.n_nodes() != g.n_nodes())
        throw gfb::DataError("checkpoint expects " + std::to_string(model.n_nodes()) + " nodes, graph has " +
                             std::to_string(g.n_nodes()));
    if (model.n_classes() != g.n_classes())
        throw gfb::DataError("checkpoint expects " + std::to_string(model.n_classes()) + " classes, graph has " +
                             std::to_string(g.n_classes()));
    gfb::NodeMask mask;
    if (mask_name == "test") {
        mask = g.test_mask;
    } else if (mask_name == "train") {
        mask = g.train_mask;
    } else {
        mask.assign(g.n_nodes(), 0);
        for (std::size_t i = 0; i < g.n_docs; ++i) mask[i] = 1;
    }
    std::cout << gfb::metrics_json(gfb::evaluate(model, g, mask), g.class_names).dump() << '\n';
    return kOk;
}

int cmd_gradcheck(const gfb::GradcheckOptions& opt) {
    const auto rep = gfb::run_gradcheck(opt);
    std::printf("%-8s %-8s %-6s %14s\n", "layer", "param", "genvec", "max_rel_err");
    for (const auto& r : rep.rows)
        std::printf("%-8s %-8s %-6s %14.3e\n", r.layer.c_str(), r.param.c_str(),
                    std::string(gfb::to_string(r.genvec)).c_str(), r.max_rel_error);
    std::printf("worst %.3e (tolerance %.0e): %s\n", rep.worst, opt.tolerance, rep.passed ? "PASS" : "FAIL");
    return rep.passed ? kOk : kCheckFailed;
}

int cmd_bench(const std::string& graph_path, const gfb::RunConfig& cfg, const std::string& variants,
              const std::string& k_list, bool allow_bp, const gfb::BenchOptions& opt, std::size_t reps) {
    std::vector<gfb::BenchVariant> vs;
    for (const auto& name : split_list(variants)) {
        auto v = gfb::BenchVariant::parse(name);
        if (!v) throw ConfigError("bench: unknown variant '" + name + "'");
        if (v->kind == gfb::BenchVariant::Kind::Bp && !allow_bp)
            throw ConfigError("bench: the bp variant costs orders of magnitude more per epoch; pass --allow-bp");
        vs.push_back(*v);
    }
    std::vector<std::size_t> ks;
    for (const auto& k : split_list(k_list)) ks.push_back(std::stoul(k));

    const auto g = gfb::load_graph(graph_path);
    const auto base = gfb::bench_epoch(g, cfg.train, {gfb::BenchVariant::Kind::Gcn}, opt);
    std::printf("%-8s %14s %10s\n", "variant", "sec/epoch", "ratio_gcn");
    std::printf("%-8s %14.6f %10.3f\n", "gcn", base.median_seconds, 1.0);
    for (const auto& v : vs) {
        if (v.kind == gfb::BenchVariant::Kind::Gcn) continue;
        const auto t = gfb::bench_epoch(g, cfg.train, v, opt);
        std::printf("%-8s %14.6f %10.3f\n", t.variant.c_str(), t.median_seconds, t.median_seconds / base.median_seconds);
    }
    if (ks.size() >= 2) {
        for (const auto& v : vs) {
            if (v.kind != gfb::BenchVariant::Kind::Gfb) continue;
            const auto s = gfb::bench_k_scaling(g, ks, {v.genvec, cfg.train.k_prime}, cfg.train.embedding_dim, reps);
            std::printf("k-scaling %s: slope %.3e s/k, log-log exponent %.3f\n", v.name().c_str(), s.slope, s.exponent);
            for (const auto& p : s.points)
                std::printf("  k=%-5zu gfb %.6f gcn %.6f extra %.6f\n", p.k, p.gfb_seconds, p.gcn_seconds,
                            p.extra_seconds);
        }
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"GFB-GCN: text graphs and generalized factorized bilinear graph convolution"};
    app.require_subcommand(1);

    // synth
    gfb::SynthOptions synth;
    std::string synth_out;
    auto* s = app.add_subcommand("synth", "Generate a deterministic synthetic corpus TSV");
    s->add_option("--n-docs", synth.n_docs)->capture_default_str();
    s->add_option("--n-classes", synth.n_classes)->capture_default_str();
    s->add_option("--vocab-size", synth.vocab_size)->capture_default_str();
    s->add_option("--noise", synth.noise)->capture_default_str();
    s->add_option("--seed", synth.seed)->capture_default_str();
    s->add_option("--out", synth_out, "Output TSV path")->required();

    // build-graph
    std::string corpus_path, stop_path, graph_out;
    gfb::GraphOptions gopt;
    auto* b = app.add_subcommand("build-graph", "Build a textgraph file from a corpus TSV");
    b->add_option("--corpus", corpus_path)->required();
    b->add_option("--stopwords", stop_path, "One word per line");
    b->add_option("--out", graph_out)->required();
    b->add_option("--window", gopt.window_size)->capture_default_str();
    b->add_option("--min-freq", gopt.min_freq)->capture_default_str();

    // train
    std::string config_path, t_graph, t_ckpt, t_metrics;
    std::vector<std::string> overrides;
    bool no_timing = false;
    auto* t = app.add_subcommand("train", "Train a model on a textgraph file");
    t->add_option("--config", config_path, "key=value config file");
    t->add_option("--graph", t_graph);
    t->add_option("--checkpoint", t_ckpt);
    t->add_option("--metrics", t_metrics, "JSON-lines output");
    t->add_option("--set", overrides, "Override a config key (key=value), repeatable");
    t->add_flag("--no-timing", no_timing, "Write 0 for epoch wall times (byte-reproducible metrics)");

    // eval
    std::string e_graph, e_ckpt, e_mask = "test";
    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint; prints metrics JSON");
    e->add_option("--graph", e_graph)->required();
    e->add_option("--checkpoint", e_ckpt)->required();
    e->add_option("--mask", e_mask)->check(CLI::IsMember({"test", "train", "docs"}))->capture_default_str();

    // gradcheck
    gfb::GradcheckOptions gc;
    auto* gcmd = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
    gcmd->add_option("--seed", gc.seed)->capture_default_str();
    gcmd->add_option("--seeds", gc.n_seeds)->capture_default_str();
    gcmd->add_option("--nodes", gc.n_nodes)->capture_default_str();
    gcmd->add_option("--hidden", gc.hidden)->capture_default_str();
    gcmd->add_option("--classes", gc.n_classes)->capture_default_str();
    gcmd->add_option("--k-prime", gc.k_prime)->capture_default_str();
    gcmd->add_flag("--corrupt-backward", gc.corrupt_backward, "Perturb analytic gradients (harness self-test)");

    // bench
    std::string bench_graph, variants = "gcn,max,mean,diag,topk,fbp", k_list = "8,16,32,64,128,256";
    std::string bench_config;
    std::vector<std::string> bench_overrides;
    bool allow_bp = false;
    gfb::BenchOptions bopt;
    std::size_t reps = 15;
    auto* bn = app.add_subcommand("bench", "Seconds per training epoch per variant, and k-scaling");
    bn->add_option("--graph", bench_graph)->required();
    bn->add_option("--config", bench_config);
    bn->add_option("--set", bench_overrides);
    bn->add_option("--variants", variants, "gcn,max,mean,diag,topk,fbp,bp")->capture_default_str();
    bn->add_option("--k-list", k_list)->capture_default_str();
    bn->add_flag("--allow-bp", allow_bp, "Permit the full bilinear pooling variant");
    bn->add_option("--epochs", bopt.timed_epochs)->capture_default_str();
    bn->add_option("--warmup", bopt.warmup_epochs)->capture_default_str();
    bn->add_option("--reps", reps, "Repetitions per k in the scaling test")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (*s) return cmd_synth(synth, synth_out);
        if (*b) return cmd_build_graph(corpus_path, stop_path, graph_out, gopt);
        if (*t) {
            auto cfg = resolve_config(config_path, overrides);
            if (!t_graph.empty()) cfg.graph = t_graph;
            if (!t_ckpt.empty()) cfg.checkpoint = t_ckpt;
            if (!t_metrics.empty()) cfg.metrics = t_metrics;
            return cmd_train(cfg, !no_timing);
        }
        if (*e) return cmd_eval(e_graph, e_ckpt, e_mask);
        if (*gcmd) return cmd_gradcheck(gc);
        if (*bn) return cmd_bench(bench_graph, resolve_config(bench_config, bench_overrides), variants, k_list, allow_bp,
                                  bopt, reps);
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kUsage;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kData;
    }
    return kUsage;
}
