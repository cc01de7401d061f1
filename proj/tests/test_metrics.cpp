#include "ggrx/canonical.hpp"
#include "ggrx/error.hpp"
#include "ggrx/metrics.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace ggrx;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) {
        path = (std::filesystem::temp_directory_path() / name).string();
    }
    ~TempFile() { std::remove(path.c_str()); }
};

LabeledGraph triangle() {
    return LabeledGraph({"A", "A", "A"}, {{0, 1, "e"}, {1, 2, "e"}, {0, 2, "e"}});
}

LabeledGraph paw() {
    // triangle 0-1-2 with a pendant node 3 on node 0
    return LabeledGraph({"A", "B", "B", "C"},
                        {{0, 1, "e"}, {1, 2, "e"}, {0, 2, "e"}, {0, 3, "f"}});
}

std::vector<LabeledGraph> random_corpus(uint64_t seed, int count, int min_nodes, int max_nodes,
                                        int extra_edges = 3) {
    Rng rng(derive_seed(seed, "metrics-corpus"));
    std::vector<LabeledGraph> out;
    for (int i = 0; i < count; ++i)
        out.push_back(
            testsupport::random_connected_graph(rng, min_nodes, max_nodes, 2, 2, extra_edges));
    return out;
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(static_cast<bool>(in));
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        REQUIRE(eq != std::string::npos);
        out[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return out;
}

} // namespace

TEST_CASE("descriptors are unit histograms unless flagged empty") {
    auto corpus = random_corpus(60, 10, 2, 9);
    for (const auto& g : corpus) {
        for (int k = 0; k < kDescriptorKinds; ++k) {
            Descriptor d = descriptor(g, static_cast<DescriptorKind>(k));
            if (d.empty) {
                CHECK(d.mass.empty());
                continue;
            }
            double sum = 0.0;
            for (const auto& [key, mass] : d.mass) {
                CHECK(mass > 0.0);
                sum += mass;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    LabeledGraph lone({"Z"}, {});
    CHECK(descriptor(lone, DescriptorKind::EdgeLabel).empty);
    CHECK(descriptor(lone, DescriptorKind::Orbit).empty);
    CHECK_FALSE(descriptor(lone, DescriptorKind::Degree).empty);
    CHECK(descriptor(lone, DescriptorKind::Degree).mass.at("0") == doctest::Approx(1.0));
}

TEST_CASE("hand-computed histograms on a star and a paw") {
    LabeledGraph star({"C", "L", "L", "L"}, {{0, 1, "e"}, {0, 2, "e"}, {0, 3, "e"}});
    Descriptor deg = descriptor(star, DescriptorKind::Degree);
    CHECK(deg.mass.size() == 2);
    CHECK(deg.mass.at("1") == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(deg.mass.at("3") == doctest::Approx(0.25).epsilon(1e-12));

    Descriptor labels = descriptor(star, DescriptorKind::NodeLabel);
    CHECK(labels.mass.at("C") == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(labels.mass.at("L") == doctest::Approx(0.75).epsilon(1e-12));

    Descriptor edge_labels = descriptor(paw(), DescriptorKind::EdgeLabel);
    CHECK(edge_labels.mass.at("e") == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(edge_labels.mass.at("f") == doctest::Approx(0.25).epsilon(1e-12));

    Descriptor joint = descriptor(paw(), DescriptorKind::LabelDegree);
    CHECK(joint.mass.at("A:3") == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(joint.mass.at("B:2") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(joint.mass.at("C:1") == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("clustering coefficients and their binning") {
    auto zero = clustering_coefficients(LabeledGraph({"A", "B", "C"}, {{0, 1, "e"}, {1, 2, "e"}}));
    for (double c : zero) CHECK(c == 0.0);

    auto ones = clustering_coefficients(triangle());
    for (double c : ones) CHECK(c == doctest::Approx(1.0).epsilon(1e-12));

    auto mixed = clustering_coefficients(paw());
    CHECK(mixed[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(mixed[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mixed[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mixed[3] == 0.0);

    Descriptor d = descriptor(triangle(), DescriptorKind::Clustering);
    CHECK(d.mass.size() == 1);
    CHECK(d.mass.at("99") == doctest::Approx(1.0).epsilon(1e-12)); // coefficient 1.0 tops out

    Descriptor dp = descriptor(paw(), DescriptorKind::Clustering);
    CHECK(dp.mass.at("33") == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(dp.mass.at("99") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(dp.mass.at("0") == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("orbit counts on hand-checked graphlets") {
    SUBCASE("three-path") {
        auto counts = orbit_counts(LabeledGraph({"A", "B", "C"}, {{0, 1, "e"}, {1, 2, "e"}}));
        CHECK(counts[0][0] == 1);
        CHECK(counts[1][0] == 2);
        CHECK(counts[0][1] == 1);
        CHECK(counts[2][1] == 1);
        CHECK(counts[1][2] == 1);
        CHECK(counts[1][1] == 0);
        CHECK(counts[0][3] == 0);
    }
    SUBCASE("triangle") {
        auto counts = orbit_counts(triangle());
        for (int v = 0; v < 3; ++v) {
            CHECK(counts[v][0] == 2);
            CHECK(counts[v][3] == 1);
            // no induced path: the only 3-subset induces the triangle itself
            CHECK(counts[v][1] == 0);
        }
    }
    SUBCASE("four-clique") {
        LabeledGraph k4({"A", "A", "A", "A"}, {{0, 1, "e"}, {0, 2, "e"}, {0, 3, "e"},
                                               {1, 2, "e"}, {1, 3, "e"}, {2, 3, "e"}});
        auto counts = orbit_counts(k4);
        for (int v = 0; v < 4; ++v) {
            CHECK(counts[v][0] == 3);
            CHECK(counts[v][3] == 3);
            CHECK(counts[v][14] == 1);
            CHECK(counts[v][8] == 0);
        }
    }
    SUBCASE("four-cycle") {
        LabeledGraph c4({"A", "A", "A", "A"},
                        {{0, 1, "e"}, {1, 2, "e"}, {2, 3, "e"}, {0, 3, "e"}});
        auto counts = orbit_counts(c4);
        for (int v = 0; v < 4; ++v) {
            CHECK(counts[v][8] == 1);
            CHECK(counts[v][2] == 1);
            CHECK(counts[v][1] == 2);
        }
    }
}

TEST_CASE("orbit counts agree with subset enumeration") {
    Rng rng(derive_seed(61, "orbit-oracle"));
    for (int t = 0; t < 12; ++t) {
        LabeledGraph g = testsupport::random_connected_graph(rng, 4, 12, 2, 1, 6);
        auto fast = orbit_counts(g);
        auto slow = testsupport::orbit_oracle(g);
        REQUIRE(fast.size() == slow.size());
        for (size_t v = 0; v < fast.size(); ++v)
            for (int o = 0; o < 15; ++o) CHECK(fast[v][o] == slow[v][o]);
    }
}

TEST_CASE("total variation distance") {
    Descriptor a = descriptor(triangle(), DescriptorKind::Degree);
    Descriptor b = descriptor(paw(), DescriptorKind::Degree);
    CHECK(total_variation(a, a) == 0.0);
    CHECK(total_variation(a, b) == doctest::Approx(total_variation(b, a)).epsilon(1e-15));
    // triangle: {2: 1}; paw: {3: 1/4, 2: 1/2, 1: 1/4} -> 0.5 * (1/2 + 1/4 + 1/4) = 0.5
    CHECK(total_variation(a, b) == doctest::Approx(0.5).epsilon(1e-12));

    Descriptor c, d;
    c.mass["x"] = 1.0;
    d.mass["y"] = 1.0;
    CHECK(total_variation(c, d) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("distribution distance is zero on identical samples and symmetric") {
    auto corpus = random_corpus(62, 8, 3, 8);
    for (int k = 0; k < kDescriptorKinds; ++k) {
        auto kind = static_cast<DescriptorKind>(k);
        std::vector<Descriptor> sample;
        for (const auto& g : corpus) sample.push_back(descriptor(g, kind));
        CHECK(mmd(sample, sample) == 0.0);
    }

    auto other = random_corpus(63, 6, 3, 8);
    std::vector<Descriptor> sa, sb;
    for (const auto& g : corpus) sa.push_back(descriptor(g, DescriptorKind::Degree));
    for (const auto& g : other) sb.push_back(descriptor(g, DescriptorKind::Degree));
    double forward = mmd(sa, sb);
    double backward = mmd(sb, sa);
    CHECK(forward == doctest::Approx(backward).epsilon(1e-12));
    CHECK(forward >= 0.0);

    CHECK_THROWS_AS(mmd({}, sb), Error);
    std::vector<Descriptor> wrong{descriptor(corpus[0], DescriptorKind::Clustering)};
    CHECK_THROWS_AS(mmd(sa, wrong), Error);
}

TEST_CASE("two disjoint singletons hit the closed-form distance") {
    Descriptor a, b;
    a.kind = b.kind = DescriptorKind::NodeLabel;
    a.mass["x"] = 1.0;
    b.mass["y"] = 1.0;
    MmdConfig config;
    config.sigma = 1.0;
    double expect = std::sqrt(2.0 - 2.0 * std::exp(-0.5));
    CHECK(mmd({a}, {b}, config) == doctest::Approx(expect).epsilon(1e-12));

    config.sigma = 2.0;
    expect = std::sqrt(2.0 - 2.0 * std::exp(-1.0 / 8.0));
    CHECK(mmd({a}, {b}, config) == doctest::Approx(expect).epsilon(1e-12));

    CHECK(mmd({a}, {a}, config) == 0.0);
}

TEST_CASE("neighborhood-pair kernel normalization and invariance") {
    Rng rng(derive_seed(64, "nspdk"));
    for (int t = 0; t < 6; ++t) {
        LabeledGraph g = testsupport::random_connected_graph(rng, 3, 9, 2, 2, 3);
        CHECK(nspdk_kernel(g, g, 2, 4) == doctest::Approx(1.0).epsilon(1e-12));
        LabeledGraph p = testsupport::permuted_graph(g, rng);
        LabeledGraph h = testsupport::random_connected_graph(rng, 3, 9, 2, 2, 3);
        CHECK(nspdk_kernel(g, h, 2, 4) ==
              doctest::Approx(nspdk_kernel(p, h, 2, 4)).epsilon(1e-12));
        CHECK(nspdk_kernel(g, h, 2, 4) ==
              doctest::Approx(nspdk_kernel(h, g, 2, 4)).epsilon(1e-12));
    }

    LabeledGraph x({"X", "X"}, {{0, 1, "e"}});
    LabeledGraph y({"Y", "Y"}, {{0, 1, "f"}});
    CHECK(nspdk_kernel(x, y, 2, 4) == 0.0);

    auto features = nspdk_features(x, 2, 4);
    CHECK_FALSE(features.empty());
    CHECK(nspdk_kernel_features(features, features) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nspdk_kernel_features({}, {}) == 1.0);
    CHECK(nspdk_kernel_features(features, {}) == 0.0);
}

TEST_CASE("kernel matrices are positive semidefinite") {
    auto corpus = random_corpus(65, 7, 3, 8);
    std::vector<std::map<std::string, double>> feats;
    for (const auto& g : corpus) feats.push_back(nspdk_features(g, 2, 4));
    std::vector<std::vector<double>> gram(corpus.size(), std::vector<double>(corpus.size()));
    for (size_t i = 0; i < corpus.size(); ++i)
        for (size_t j = 0; j < corpus.size(); ++j)
            gram[i][j] = nspdk_kernel_features(feats[i], feats[j]);
    auto eig = testsupport::symmetric_eigenvalues(gram);
    for (double e : eig) CHECK(e > -1e-9);
    for (size_t i = 0; i < corpus.size(); ++i) {
        CHECK(gram[i][i] == doctest::Approx(1.0).epsilon(1e-12));
        for (size_t j = 0; j < corpus.size(); ++j)
            CHECK(gram[i][j] == doctest::Approx(gram[j][i]).epsilon(1e-15));
    }
}

TEST_CASE("evaluating a corpus against itself scores zero everywhere") {
    auto corpus = random_corpus(66, 8, 3, 8);
    EvalProtocol protocol;
    protocol.batch = 4;
    protocol.rounds = 2;
    protocol.seed = 1;
    MetricReport report = evaluate(corpus, corpus, corpus, protocol);

    CHECK(report.batch == 4);
    CHECK(report.rounds == 2);
    for (int k = 0; k < kDescriptorKinds; ++k) {
        REQUIRE(report.mmd_rounds[k].size() == 2);
        CHECK(report.mmd_mean[k] == 0.0);
        for (double v : report.mmd_rounds[k]) CHECK(v == 0.0);
    }
    CHECK(report.nspdk_mean == 0.0);
    CHECK(report.novelty_pct == 0.0); // every certificate appears in training
    CHECK(report.avg_nodes_gen == doctest::Approx(report.avg_nodes_ref).epsilon(1e-12));
    CHECK(report.avg_edges_gen == doctest::Approx(report.avg_edges_ref).epsilon(1e-12));
    CHECK_FALSE(report.validity_pct.has_value());
}

TEST_CASE("novelty and uniqueness count certificates") {
    LabeledGraph a = triangle();
    LabeledGraph b = paw();
    LabeledGraph c({"Q", "Q"}, {{0, 1, "q"}});
    // generated: a, a, c  -- training: a, b
    std::vector<LabeledGraph> generated{a, a, c};
    std::vector<LabeledGraph> reference{b, b, b};
    std::vector<LabeledGraph> training{a, b};
    EvalProtocol protocol;
    protocol.batch = 3;
    protocol.rounds = 1;
    MetricReport report = evaluate(generated, reference, training, protocol);
    CHECK(report.novelty_pct == doctest::Approx(100.0 / 3.0).epsilon(1e-9));
    CHECK(report.uniqueness_pct == doctest::Approx(200.0 / 3.0).epsilon(1e-9));
    CHECK(report.avg_nodes_gen == doctest::Approx((3 + 3 + 2) / 3.0).epsilon(1e-12));
    CHECK(report.avg_edges_ref == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("evaluation demands enough generated graphs") {
    auto corpus = random_corpus(67, 4, 3, 6);
    EvalProtocol protocol;
    protocol.batch = 4;
    protocol.rounds = 2; // needs 8 generated graphs
    CHECK_THROWS_AS(evaluate(corpus, corpus, corpus, protocol), Error);
}

TEST_CASE("unequal corpus sizes fall back to seeded reference batches") {
    auto generated = random_corpus(68, 8, 3, 7);
    auto reference = random_corpus(69, 13, 3, 7);
    EvalProtocol protocol;
    protocol.batch = 4;
    protocol.rounds = 2;
    protocol.seed = 5;
    MetricReport first = evaluate(generated, reference, reference, protocol);
    MetricReport second = evaluate(generated, reference, reference, protocol);
    for (int k = 0; k < kDescriptorKinds; ++k)
        CHECK(first.mmd_mean[k] == second.mmd_mean[k]); // deterministic in the seed
    CHECK(first.nspdk_mean == second.nspdk_mean);
}

TEST_CASE("report files carry every metric as key=value") {
    auto corpus = random_corpus(70, 8, 3, 7);
    EvalProtocol protocol;
    protocol.batch = 4;
    protocol.rounds = 2;
    MetricReport report = evaluate(corpus, corpus, corpus, protocol);
    TempFile file("ggrx-test-report.txt");
    write_report_file(file.path, report);
    auto kv = read_key_values(file.path);
    CHECK(kv.at("batch") == "4");
    CHECK(kv.at("rounds") == "2");
    CHECK(kv.count("mmd_degree") == 1);
    CHECK(kv.count("mmd_degree_round1") == 1);
    CHECK(kv.count("mmd_degree_round2") == 1);
    CHECK(kv.count("mmd_degree_round3") == 0); // rounds are 1-based
    CHECK(kv.count("mmd_label_degree") == 1);
    CHECK(kv.count("nspdk") == 1);
    CHECK(kv.count("nspdk_round2") == 1);
    CHECK(kv.count("novelty_pct") == 1);
    CHECK(kv.count("uniqueness_pct") == 1);
    CHECK(kv.count("avg_nodes_gen") == 1);
    CHECK(kv.count("validity_pct") == 0); // no validator hooked in

    std::string table = format_report_table(report);
    CHECK(table.find("Degree MMD") != std::string::npos);
    CHECK(table.find("Uniqueness") != std::string::npos);
    CHECK(table.find("NSPDK") != std::string::npos);
}

TEST_CASE("external validators read the transaction format") {
    LabeledGraph g = triangle();
    CHECK(run_validator(g, "echo valid"));
    CHECK_FALSE(run_validator(g, "echo invalid"));
    // the command sees the graph itself on standard input
    CHECK(run_validator(g, "{ grep -q '^v 0 A' && echo valid || echo invalid; }"));
    CHECK_FALSE(run_validator(g, "{ grep -q '^v 9 ' && echo valid || echo invalid; }"));
    CHECK_THROWS_AS(run_validator(g, "echo banana"), Error);

    auto corpus = random_corpus(71, 8, 3, 7);
    EvalProtocol protocol;
    protocol.batch = 4;
    protocol.rounds = 2;
    protocol.validator_command = "echo valid";
    MetricReport report = evaluate(corpus, corpus, corpus, protocol);
    REQUIRE(report.validity_pct.has_value());
    CHECK(*report.validity_pct == doctest::Approx(100.0).epsilon(1e-12));
}
