#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <sstream>

#include "gfb/checkpoint.hpp"
#include "gfb/config.hpp"
#include "gfb/graph_io.hpp"
#include "gfb/report.hpp"
#include "gfb/synth.hpp"
#include "oracles.hpp"

using namespace gfb;

namespace {

TextGraph fixture_graph() {
    const auto sw = load_stopwords(std::string(GFB_TEST_DATA) + "/stopwords.txt");
    return build_text_graph(load_corpus(std::string(GFB_TEST_DATA) + "/fixture_4doc.tsv"), sw, {3, 1});
}

std::string to_text(const TextGraph& g) {
    std::ostringstream out;
    write_graph(out, g);
    return out.str();
}

template <class Fn>
std::string error_of(Fn fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST(CorpusTsv, ParsesFields) {
    std::istringstream in("a\ttrain\tpos\tsome text\there\nb\ttest\tneg\t\n\n");
    const auto c = read_corpus_tsv(in);
    ASSERT_EQ(c.documents.size(), 2u);
    EXPECT_EQ(c.documents[0].text, "some text\there");
    EXPECT_EQ(c.documents[1].split, Split::Test);
    EXPECT_EQ(c.documents[1].text, "");
}

TEST(CorpusTsv, MalformedLineNamesLineNumber) {
    std::istringstream in("a\ttrain\tpos\tok\nb\ttrain\tbroken\n");
    EXPECT_NE(error_of([&] { read_corpus_tsv(in, "c.tsv"); }).find("c.tsv:2"), std::string::npos);
    std::istringstream bad_split("a\tdev\tpos\tok\n");
    EXPECT_NE(error_of([&] { read_corpus_tsv(bad_split, "c.tsv"); }).find("c.tsv:1"), std::string::npos);
}

TEST(CorpusTsv, WriteReadRoundTrip) {
    const auto c = synthesize_corpus({20, 2, 30, 0.3, 3, 5, 8});
    std::stringstream s;
    write_corpus_tsv(s, c);
    const auto back = read_corpus_tsv(s);
    ASSERT_EQ(back.documents.size(), c.documents.size());
    for (std::size_t i = 0; i < c.documents.size(); ++i) {
        EXPECT_EQ(back.documents[i].id, c.documents[i].id);
        EXPECT_EQ(back.documents[i].text, c.documents[i].text);
        EXPECT_EQ(back.documents[i].label, c.documents[i].label);
        EXPECT_EQ(back.documents[i].split, c.documents[i].split);
    }
}

TEST(Stopwords, TrimsAndLowercases) {
    std::istringstream in("  The \nAND\r\n\nof\n");
    EXPECT_EQ(read_stopwords(in), (StopwordSet{"the", "and", "of"}));
}

TEST(MissingFiles, MessageNamesPath) {
    EXPECT_NE(error_of([] { load_corpus("/nonexistent/corpus.tsv"); }).find("/nonexistent/corpus.tsv"), std::string::npos);
    EXPECT_NE(error_of([] { load_graph("/nonexistent/g.txt"); }).find("/nonexistent/g.txt"), std::string::npos);
    EXPECT_THROW(load_checkpoint("/nonexistent/m.ckpt"), DataError);
}

TEST(GraphFile, RoundTripIsBitExact) {
    const auto g = fixture_graph();
    const std::string text = to_text(g);
    std::istringstream in(text);
    const auto back = read_graph(in);
    EXPECT_EQ(back.adjacency, g.adjacency);
    EXPECT_EQ(back.normalized, g.normalized);
    EXPECT_EQ(back.labels, g.labels);
    EXPECT_EQ(back.class_names, g.class_names);
    EXPECT_EQ(back.node_names, g.node_names);
    EXPECT_EQ(back.train_mask, g.train_mask);
    EXPECT_EQ(back.test_mask, g.test_mask);
    EXPECT_EQ(to_text(back), text);
}

TEST(GraphFile, RoundTripsAwkwardDoubles) {
    TextGraph g = fixture_graph();
    const double awkward[] = {0.1, 1.0 / 3.0, 5e-324, 1e300, 2.0 / 7.0, 123456.789e-7};
    std::map<std::pair<std::size_t, std::size_t>, double> upper;
    std::size_t k = 0;
    for (const auto& e : g.adjacency.triplets())
        if (e.row < e.col) upper[{e.row, e.col}] = awkward[k++ % 6];
    auto t = g.adjacency.triplets();
    for (auto& e : t) {
        if (e.row < e.col) e.value = upper.at({e.row, e.col});
        if (e.row > e.col) e.value = upper.at({e.col, e.row});
    }
    g.adjacency = SparseMatrix::from_triplets(g.n_nodes(), g.n_nodes(), t);
    std::istringstream in(to_text(g));
    EXPECT_EQ(read_graph(in).adjacency, g.adjacency);
}

TEST(GraphFile, CorruptionIsReported) {
    const std::string text = to_text(fixture_graph());
    std::istringstream bad_header("graph v2 1 1 1\n");
    EXPECT_THROW(read_graph(bad_header), DataError);
    std::istringstream truncated(text.substr(0, text.size() / 2));
    EXPECT_THROW(read_graph(truncated), DataError);
    std::string broken = text;
    broken.replace(broken.find('\n') + 1, 1, "x");
    std::istringstream bad_entry(broken);
    EXPECT_NE(error_of([&] { read_graph(bad_entry, "g.txt"); }).find("g.txt:2"), std::string::npos);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    Rng rng(71);
    for (auto op : std::vector<std::optional<GenVecOp>>{std::nullopt, GenVecOp{GenVecKind::MaxVec}, GenVecOp{GenVecKind::MeanVec},
                                                        GenVecOp{GenVecKind::DiagVec}, GenVecOp{GenVecKind::TopkVec, 2}}) {
        auto m = make_model(11, 7, 3, op, rng.uniform(), 0.5, rng.split(1));
        m.layer2.lambda = 1.0 / 3.0;
        const auto bytes = serialize_checkpoint(m);
        EXPECT_EQ(deserialize_checkpoint(bytes), m);
        EXPECT_EQ(serialize_checkpoint(deserialize_checkpoint(bytes)), bytes);
    }
}

TEST(Checkpoint, CorruptionIsReported) {
    const auto m = make_model(5, 3, 2, GenVecOp{}, 0.1, 0.5, Rng(1));
    const auto bytes = serialize_checkpoint(m);

    auto version = bytes;
    version[8] = 9;
    EXPECT_NE(error_of([&] { deserialize_checkpoint(version); }).find("version"), std::string::npos);

    auto magic = bytes;
    magic[0] = 'X';
    EXPECT_NE(error_of([&] { deserialize_checkpoint(magic); }).find("magic"), std::string::npos);

    auto truncated = bytes;
    truncated.resize(bytes.size() - 8);
    EXPECT_NE(error_of([&] { deserialize_checkpoint(truncated); }).find("size"), std::string::npos);

    auto header_only = bytes;
    header_only.resize(10);
    EXPECT_THROW(deserialize_checkpoint(header_only), DataError);

    auto nan_weight = bytes;
    const double nan = std::nan("");
    std::memcpy(nan_weight.data() + bytes.size() - 8, &nan, 8);
    EXPECT_THROW(deserialize_checkpoint(nan_weight), DataError);
}

TEST(RunConfig, DefaultsMatchTraining) {
    std::istringstream empty("");
    const auto c = RunConfig::parse(empty);
    EXPECT_EQ(c.train.learning_rate, 0.02);
    EXPECT_EQ(c.graph_options.window_size, 20u);
    EXPECT_EQ(c.graph_options.min_freq, 5u);
    EXPECT_EQ(c.train.genvec, GenVecKind::MaxVec);
}

TEST(RunConfig, ParsesCommentsAndValues) {
    std::istringstream in("# experiment\nlearning_rate = 0.01  # lower\ngenvec=topk\nk_prime=2\n\nseed=42\ngenvec=none\n");
    const auto c = RunConfig::parse(in);
    EXPECT_EQ(c.train.learning_rate, 0.01);
    EXPECT_EQ(c.train.k_prime, 2u);
    EXPECT_EQ(c.train.seed, 42u);
    EXPECT_FALSE(c.train.genvec.has_value());
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
    std::istringstream unknown("learning_rate=0.1\nlearnin_rate=0.2\n");
    EXPECT_NE(error_of([&] { RunConfig::parse(unknown, "run.cfg"); }).find("run.cfg:2"), std::string::npos);
    std::istringstream kind("genvec=median\n");
    EXPECT_THROW(RunConfig::parse(kind), Error);
    std::istringstream upper("genvec=upper\n");
    EXPECT_THROW(RunConfig::parse(upper), Error);
    std::istringstream number("max_epochs=ten\n");
    EXPECT_THROW(RunConfig::parse(number), Error);
    std::istringstream negative("patience=-1\n");
    EXPECT_THROW(RunConfig::parse(negative), Error);
    std::istringstream no_eq("dropout\n");
    EXPECT_THROW(RunConfig::parse(no_eq), Error);
}

TEST(RunConfig, WriteParseRoundTrip) {
    RunConfig c;
    c.train.learning_rate = 0.1 / 3.0;
    c.train.genvec = GenVecKind::DiagVec;
    c.graph_options.window_size = 7;
    c.metrics = "out/m.jsonl";
    std::stringstream s;
    c.write(s);
    const auto back = RunConfig::parse(s);
    std::stringstream s2;
    back.write(s2);
    EXPECT_EQ(s.str(), s2.str());
    EXPECT_EQ(back.train.learning_rate, c.train.learning_rate);
    // Every documented key appears once.
    for (const auto& k : RunConfig::keys()) EXPECT_NE(s.str().find(k + "="), std::string::npos) << k;
}

TEST(Synth, DeterministicAndShaped) {
    const auto a = synthesize_corpus({}), b = synthesize_corpus({});
    std::ostringstream sa, sb;
    write_corpus_tsv(sa, a);
    write_corpus_tsv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
    ASSERT_EQ(a.documents.size(), 200u);
    std::size_t train = 0;
    for (const auto& d : a.documents) train += d.split == Split::Train;
    EXPECT_EQ(train, 140u);
    SynthOptions other;
    other.seed = 8;
    std::ostringstream sc;
    write_corpus_tsv(sc, synthesize_corpus(other));
    EXPECT_NE(sa.str(), sc.str());
}

TEST(Synth, NoiseFreeClassesUseDisjointWords) {
    SynthOptions o;
    o.noise = 0.0;
    const auto c = synthesize_corpus(o);
    std::map<std::string, std::set<std::string>> words_of;
    for (const auto& d : c.documents)
        for (const auto& t : preprocess(d.text, {})) words_of[d.label].insert(t);
    ASSERT_EQ(words_of.size(), 2u);
    for (const auto& w : words_of["class0"]) EXPECT_EQ(words_of["class1"].count(w), 0u) << w;
}

TEST(Synth, RejectsDegenerateParameters) {
    EXPECT_THROW(synthesize_corpus({3, 2, 10, 0.3, 1, 5, 10}), Error);
    EXPECT_THROW(synthesize_corpus({10, 1, 10, 0.3, 1, 5, 10}), Error);
    EXPECT_THROW(synthesize_corpus({10, 2, 10, 1.5, 1, 5, 10}), Error);
    EXPECT_THROW(synthesize_corpus({10, 2, 10, 0.3, 1, 5, 4}), Error);
}

TEST(Report, MetricsKeysAreStable) {
    const auto m = evaluate_predictions({0, 1, 1}, {0, 1, 0}, 2);
    const auto j = metrics_json(m, {"neg", "pos"});
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"accuracy", "macro_precision", "macro_recall", "macro_f1", "count", "per_class"}));
    std::vector<std::string> per;
    for (const auto& [k, v] : j["per_class"][0].items()) per.push_back(k);
    EXPECT_EQ(per, (std::vector<std::string>{"class", "precision", "recall", "f1", "support", "predicted"}));
    EXPECT_EQ(j["per_class"][1]["class"], "pos");
}

TEST(Report, JsonLinesLayout) {
    TrainHistory h;
    h.records = {{1, 0.7, 0.6, 0.5, 0.01}, {2, 0.5, 0.4, 0.75, 0.02}};
    h.stop_epoch = 2;
    h.best_epoch = 2;
    h.best_val_loss = 0.4;
    const auto m = evaluate_predictions({0, 1}, {0, 1}, 2);
    std::ostringstream with, without;
    write_metrics_jsonl(with, h, m, {"a", "b"}, true);
    write_metrics_jsonl(without, h, m, {"a", "b"}, false);
    std::istringstream lines(without.str());
    std::string line;
    std::vector<nlohmann::ordered_json> objs;
    while (std::getline(lines, line)) objs.push_back(nlohmann::ordered_json::parse(line));
    ASSERT_EQ(objs.size(), 3u);
    EXPECT_EQ(objs[0]["epoch"], 1);
    EXPECT_EQ(objs[1]["seconds"], 0.0);
    EXPECT_EQ(objs[2]["summary"], true);
    EXPECT_EQ(objs[2]["test"]["accuracy"], 1.0);
    EXPECT_NE(with.str(), without.str());
}
