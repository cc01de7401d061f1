// Python bindings for the core operations: graphs and their canonical codes,
// the sequence model, and the evaluation metrics.

#include "ggrx/canonical.hpp"
#include "ggrx/dataset.hpp"
#include "ggrx/error.hpp"
#include "ggrx/graph.hpp"
#include "ggrx/metrics.hpp"
#include "ggrx/model.hpp"
#include "ggrx/rng.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <sstream>

namespace py = pybind11;
using namespace ggrx;

namespace {

// Reduced codes cross the boundary as [(t_u, t_v, (l_u, l_e, l_v)), ...].
using PyEntry = std::tuple<int, int, std::tuple<std::string, std::string, std::string>>;

ReducedCode code_from_py(const std::vector<PyEntry>& entries) {
    ReducedCode code;
    code.reserve(entries.size());
    for (const auto& [tu, tv, token] : entries)
        code.push_back({tu, tv, {std::get<0>(token), std::get<1>(token), std::get<2>(token)}});
    return code;
}

std::vector<PyEntry> code_to_py(const ReducedCode& code) {
    std::vector<PyEntry> entries;
    entries.reserve(code.size());
    for (const auto& t : code)
        entries.push_back({t.t_u, t.t_v, {t.token[0], t.token[1], t.token[2]}});
    return entries;
}

DescriptorKind kind_from_name(const std::string& name) {
    for (int k = 0; k < kDescriptorKinds; ++k) {
        auto kind = static_cast<DescriptorKind>(k);
        if (name == descriptor_kind_name(kind)) return kind;
    }
    throw Error("unknown descriptor kind '" + name +
                "' (expected degree, clustering, orbit, node_label, edge_label, label_degree)");
}

int auto_max_nodes(const std::vector<ReducedCode>& codes, int requested) {
    if (requested > 0) return requested;
    int max_nodes = 2;
    for (const auto& code : codes)
        for (const auto& entry : code)
            max_nodes = std::max({max_nodes, entry.t_u + 1, entry.t_v + 1});
    return max_nodes;
}

// Vocabulary, trained weights and the sampling horizon, mirroring what a
// checkpoint plus its vocabulary file store.
struct PyModel {
    TokenVocabulary vocab;
    ModelParams params;
    long long max_steps = 0;
};

PyModel train_model(const std::vector<std::vector<PyEntry>>& train_codes,
                    const std::vector<std::vector<PyEntry>>& val_codes, int max_nodes, int epochs,
                    int batch_size, double lr, double dropout, int embed, int hidden, int layers,
                    int head_hidden, double stop_loss_fraction, uint64_t seed,
                    std::vector<std::map<std::string, double>>* log_out) {
    std::vector<ReducedCode> codes;
    for (const auto& c : train_codes) codes.push_back(code_from_py(c));
    std::vector<ReducedCode> val;
    for (const auto& c : val_codes) val.push_back(code_from_py(c));

    std::vector<ReducedCode> all = codes;
    all.insert(all.end(), val.begin(), val.end());
    TokenVocabulary vocab = build_vocabulary(all, auto_max_nodes(all, max_nodes));

    std::vector<EncodedSequence> train_set, val_set;
    size_t longest = 1;
    for (const auto& c : codes) {
        longest = std::max(longest, c.size());
        train_set.push_back(encode_sequence(c, vocab));
    }
    for (const auto& c : val) val_set.push_back(encode_sequence(c, vocab));

    ModelConfig mc{embed, hidden, layers, head_hidden, dropout};
    PyModel model{vocab, init_model(mc, vocab.ts_width(), vocab.token_width(), seed),
                  2 * static_cast<long long>(longest)};

    TrainConfig tc;
    tc.epochs = epochs;
    tc.batch_size = batch_size;
    tc.seed = seed;
    tc.lr_base = lr;
    tc.stop_loss_fraction = stop_loss_fraction;
    TrainResult result = train(model.params, train_set, val_set, tc);
    if (log_out)
        for (const auto& e : result.log)
            log_out->push_back({{"epoch", static_cast<double>(e.epoch)},
                                {"lr", e.lr},
                                {"train_loss", e.train_loss},
                                {"val_loss", e.val_loss}});
    return model;
}

} // namespace

PYBIND11_MODULE(_ggrx, m) {
    m.doc() = "labeled-graph generation: canonical DFS codes, sequence model, metrics";

    py::register_exception<Error>(m, "GgrxError");

    py::class_<LabeledGraph>(m, "Graph")
        .def(py::init([](const std::vector<std::string>& node_labels,
                         const std::vector<std::tuple<int, int, std::string>>& edges) {
                 std::vector<Edge> es;
                 es.reserve(edges.size());
                 for (const auto& [u, v, label] : edges) es.push_back({u, v, label});
                 return LabeledGraph(node_labels, std::move(es));
             }),
             py::arg("node_labels"), py::arg("edges"),
             "Undirected graph from node labels and (u, v, label) edges")
        .def_property_readonly("node_count", &LabeledGraph::node_count)
        .def_property_readonly("edge_count", &LabeledGraph::edge_count)
        .def_readwrite("id", &LabeledGraph::id)
        .def("node_labels", [](const LabeledGraph& g) { return g.node_labels(); })
        .def("edges",
             [](const LabeledGraph& g) {
                 std::vector<std::tuple<int, int, std::string>> out;
                 out.reserve(g.edges().size());
                 for (const auto& e : g.edges()) out.push_back({e.u, e.v, e.label});
                 return out;
             })
        .def("degree", &LabeledGraph::degree, py::arg("v"))
        .def("connected", &LabeledGraph::connected)
        .def("__repr__", [](const LabeledGraph& g) {
            std::ostringstream out;
            out << "Graph(" << g.node_count() << " nodes, " << g.edge_count() << " edges)";
            return out.str();
        });

    m.def(
        "parse_graphs",
        [](const std::string& text) {
            std::istringstream in(text);
            return parse_graphs(in, "<string>");
        },
        py::arg("text"), "Parse graphs from transaction-format text");
    m.def(
        "format_graphs",
        [](const std::vector<LabeledGraph>& graphs) {
            std::ostringstream out;
            write_graphs(out, graphs);
            return out.str();
        },
        py::arg("graphs"), "Serialize graphs to transaction-format text");
    m.def("load_graphs", &parse_graph_file, py::arg("path"));
    m.def("save_graphs", &write_graph_file, py::arg("graphs"), py::arg("path"));

    m.def(
        "canonical_code",
        [](const LabeledGraph& g) { return code_to_string(min_dfs_code(g)); }, py::arg("graph"),
        "Minimum DFS code as a quintuple string");
    m.def(
        "reduced_code", [](const LabeledGraph& g) { return code_to_py(reduce(min_dfs_code(g))); },
        py::arg("graph"), "Minimum DFS code reduced to (t_u, t_v, token) entries");
    m.def("certificate", &graph_certificate, py::arg("graph"),
          "Canonical string equal for exactly the isomorphic graphs");
    m.def("is_isomorphic", &is_isomorphic, py::arg("a"), py::arg("b"));
    m.def(
        "graph_from_reduced",
        [](const std::vector<PyEntry>& entries, bool strict) {
            Reconstruction rec = graph_from_reduced(code_from_py(entries), {strict});
            std::vector<std::string> reasons;
            for (const auto& d : rec.report.discarded) reasons.push_back(d.reason);
            return py::make_tuple(rec.graph, rec.report.kept, reasons);
        },
        py::arg("entries"), py::arg("strict") = false,
        "Rebuild (graph, kept_entries, discard_reasons) from reduced-code entries");

    m.def("augment_with_degree", &augment_with_degree, py::arg("graph"),
          "Copy with node labels replaced by label:degree");
    m.def(
        "split_corpus",
        [](size_t count, double val_fraction, double test_fraction, uint64_t seed) {
            SplitSpec spec{val_fraction, test_fraction, seed};
            std::vector<std::string> out;
            for (SplitPart p : split_corpus(count, spec)) out.push_back(split_part_name(p));
            return out;
        },
        py::arg("count"), py::arg("val_fraction") = 0.1, py::arg("test_fraction") = 0.1,
        py::arg("seed") = 0, "Deterministic train/val/test membership per index");
    m.def("sample_subgraphs", &sample_subgraphs, py::arg("graph"), py::arg("count"),
          py::arg("walk_count") = 150, py::arg("restart_p") = 0.15, py::arg("seed") = 0,
          py::arg("walk_length") = 30,
          "Connected subgraphs by random walk with restart from degree-proportional starts");

    py::class_<PyModel>(m, "Model")
        .def_property_readonly("parameter_count",
                               [](const PyModel& m_) { return m_.params.parameter_count(); })
        .def_property_readonly("token_count",
                               [](const PyModel& m_) { return m_.vocab.token_count(); })
        .def_property_readonly("max_steps", [](const PyModel& m_) { return m_.max_steps; })
        .def(
            "sample",
            [](const PyModel& m_, uint64_t seed, bool greedy, int max_steps) {
                int steps = max_steps > 0 ? max_steps : static_cast<int>(m_.max_steps);
                auto [code, report] = sample(m_.params, m_.vocab, steps, seed, greedy);
                return py::make_tuple(code_to_py(code), report.truncated);
            },
            py::arg("seed") = 0, py::arg("greedy") = false, py::arg("max_steps") = 0,
            "Sample one reduced code; returns (entries, truncated)")
        .def(
            "sample_graph",
            [](const PyModel& m_, uint64_t seed, bool greedy, int max_steps) {
                int steps = max_steps > 0 ? max_steps : static_cast<int>(m_.max_steps);
                auto [code, report] = sample(m_.params, m_.vocab, steps, seed, greedy);
                (void)report;
                return graph_from_reduced(code).graph;
            },
            py::arg("seed") = 0, py::arg("greedy") = false, py::arg("max_steps") = 0,
            "Sample one reduced code and rebuild the graph")
        .def(
            "save",
            [](const PyModel& m_, const std::string& checkpoint_path,
               const std::string& vocab_path) {
                save_checkpoint(m_.params, m_.vocab, m_.max_steps, checkpoint_path);
                write_vocabulary_file(vocab_path, m_.vocab);
            },
            py::arg("checkpoint_path"), py::arg("vocab_path"),
            "Write the float32 checkpoint and its vocabulary file");

    m.def(
        "train_model",
        [](const std::vector<std::vector<PyEntry>>& codes,
           const std::vector<std::vector<PyEntry>>& val_codes, int max_nodes, int epochs,
           int batch_size, double lr, double dropout, int embed, int hidden, int layers,
           int head_hidden, double stop_loss_fraction, uint64_t seed) {
            std::vector<std::map<std::string, double>> log;
            PyModel model = train_model(codes, val_codes, max_nodes, epochs, batch_size, lr,
                                        dropout, embed, hidden, layers, head_hidden,
                                        stop_loss_fraction, seed, &log);
            return py::make_tuple(std::move(model), log);
        },
        py::arg("codes"), py::arg("val_codes") = std::vector<std::vector<PyEntry>>{},
        py::arg("max_nodes") = 0, py::arg("epochs") = 0, py::arg("batch_size") = 32,
        py::arg("lr") = 0.003, py::arg("dropout") = 0.2, py::arg("embed") = 64,
        py::arg("hidden") = 128, py::arg("layers") = 4, py::arg("head_hidden") = 128,
        py::arg("stop_loss_fraction") = 0.0, py::arg("seed") = 0,
        "Train on reduced codes; returns (model, per-epoch log dicts)");
    m.def(
        "load_model",
        [](const std::string& checkpoint_path, const std::string& vocab_path) {
            TokenVocabulary vocab = read_vocabulary_file(vocab_path);
            LoadedCheckpoint loaded = load_checkpoint(checkpoint_path, vocab);
            return PyModel{std::move(vocab), std::move(loaded.params), loaded.max_steps};
        },
        py::arg("checkpoint_path"), py::arg("vocab_path"));

    m.def(
        "descriptor",
        [](const LabeledGraph& g, const std::string& kind) {
            return descriptor(g, kind_from_name(kind)).mass;
        },
        py::arg("graph"), py::arg("kind"), "Normalized histogram for one descriptor kind");
    m.def(
        "mmd",
        [](const std::vector<LabeledGraph>& a, const std::vector<LabeledGraph>& b,
           const std::string& kind, double sigma) {
            DescriptorKind k = kind_from_name(kind);
            std::vector<Descriptor> da, db;
            for (const auto& g : a) da.push_back(descriptor(g, k));
            for (const auto& g : b) db.push_back(descriptor(g, k));
            return mmd(da, db, {sigma});
        },
        py::arg("a"), py::arg("b"), py::arg("kind"), py::arg("sigma") = 1.0,
        "MMD between two graph samples under one descriptor kind");
    m.def("nspdk_kernel", &nspdk_kernel, py::arg("a"), py::arg("b"), py::arg("r") = 2,
          py::arg("d") = 4, "Normalized neighborhood-pair kernel in [0, 1]");
    m.def(
        "evaluate",
        [](const std::vector<LabeledGraph>& generated, const std::vector<LabeledGraph>& reference,
           const std::vector<LabeledGraph>& training, int batch, int rounds, uint64_t seed,
           double mmd_sigma, int nspdk_r, int nspdk_d, const std::string& validator) {
            EvalProtocol protocol;
            protocol.batch = batch;
            protocol.rounds = rounds;
            protocol.seed = seed;
            protocol.mmd_sigma = mmd_sigma;
            protocol.nspdk_r = nspdk_r;
            protocol.nspdk_d = nspdk_d;
            protocol.validator_command = validator;
            MetricReport report = evaluate(generated, reference, training, protocol);

            py::dict out;
            for (int k = 0; k < kDescriptorKinds; ++k) {
                std::string name = descriptor_kind_name(static_cast<DescriptorKind>(k));
                out[("mmd_" + name).c_str()] = report.mmd_mean[k];
                out[("mmd_" + name + "_rounds").c_str()] = report.mmd_rounds[k];
            }
            out["nspdk"] = report.nspdk_mean;
            out["nspdk_rounds"] = report.nspdk_rounds;
            out["avg_nodes_gen"] = report.avg_nodes_gen;
            out["avg_nodes_ref"] = report.avg_nodes_ref;
            out["avg_edges_gen"] = report.avg_edges_gen;
            out["avg_edges_ref"] = report.avg_edges_ref;
            out["novelty_pct"] = report.novelty_pct;
            out["uniqueness_pct"] = report.uniqueness_pct;
            if (report.validity_pct) out["validity_pct"] = *report.validity_pct;
            return out;
        },
        py::arg("generated"), py::arg("reference"), py::arg("training"), py::arg("batch") = 256,
        py::arg("rounds") = 10, py::arg("seed") = 0, py::arg("mmd_sigma") = 1.0,
        py::arg("nspdk_r") = 2, py::arg("nspdk_d") = 4, py::arg("validator") = "",
        "Round-based metric report as a dict");
}
