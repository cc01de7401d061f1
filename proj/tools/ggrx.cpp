// Command-line front end for the pipeline: preprocess, split, train,
// generate, evaluate, canon, sample-citation.

#include "ggrx/canonical.hpp"
#include "ggrx/config.hpp"
#include "ggrx/dataset.hpp"
#include "ggrx/error.hpp"
#include "ggrx/graph.hpp"
#include "ggrx/metrics.hpp"
#include "ggrx/model.hpp"
#include "ggrx/rng.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace {

using namespace ggrx;

constexpr int kGraphFormatVersion = 1;
constexpr int kCodeFormatVersion = 1;
constexpr int kVocabularyFormatVersion = 1;
constexpr int kSplitFormatVersion = 1;
constexpr int kConfigFormatVersion = 1;
constexpr int kReportFormatVersion = 1;

// Deterministic parallel map: fixed chunking by index, one future per chunk,
// joined in order. The body must only touch state owned by its index.
template <typename Body>
void parallel_for(size_t count, int workers, Body&& body) {
    if (workers <= 1 || count < 2) {
        for (size_t i = 0; i < count; ++i) body(i);
        return;
    }
    size_t chunks = std::min<size_t>(workers, count);
    size_t per = (count + chunks - 1) / chunks;
    std::vector<std::future<void>> parts;
    for (size_t c = 0; c < chunks; ++c) {
        size_t lo = c * per;
        size_t hi = std::min(count, lo + per);
        if (lo >= hi) break;
        parts.push_back(std::async(std::launch::async, [&body, lo, hi] {
            for (size_t i = lo; i < hi; ++i) body(i);
        }));
    }
    for (auto& p : parts) p.get();
}

RunConfig resolve_config(const std::string& config_path, const std::vector<std::string>& extras) {
    RunConfig config;
    if (!config_path.empty()) config = read_config_file(config_path);
    // CLI11 hands remaining tokens oldest-first
    apply_overrides(config, extras);
    std::istringstream lines(config.serialize());
    std::string line;
    while (std::getline(lines, line)) std::cerr << "config " << line << "\n";
    return config;
}

const std::string& require_path(const RunConfig& config, const std::string& key) {
    static const std::string empty;
    const std::string* value = nullptr;
    if (key == "graphs") value = &config.graphs;
    else if (key == "codes") value = &config.codes;
    else if (key == "vocab") value = &config.vocab;
    else if (key == "splits") value = &config.splits;
    else if (key == "checkpoint") value = &config.checkpoint;
    else if (key == "report") value = &config.report;
    if (!value) throw Error("internal: unknown path key '" + key + "'");
    if (value->empty()) throw Error("this command requires the '" + key + "' path");
    return *value;
}

long long graph_file_id(const LabeledGraph& g, size_t index) {
    return g.id >= 0 ? g.id : static_cast<long long>(index);
}

std::string format_loss(double v) {
    std::ostringstream out;
    out << std::setprecision(8) << v;
    return out.str();
}

int cmd_preprocess(const RunConfig& config, bool augment, int workers) {
    auto graphs = parse_graph_file(require_path(config, "graphs"));
    if (augment)
        for (auto& g : graphs) g = augment_with_degree(g);

    std::vector<CodeRecord> records(graphs.size());
    parallel_for(graphs.size(), workers, [&](size_t i) {
        const LabeledGraph& g = graphs[i];
        records[i].graph_id = graph_file_id(g, i);
        if (g.edge_count() == 0) return; // empty code
        if (!g.connected())
            throw Error("graph " + std::to_string(records[i].graph_id) +
                        " is disconnected; codes are defined for connected graphs");
        records[i].code = reduce(min_dfs_code(g));
    });

    int max_nodes = 2;
    for (const auto& g : graphs) max_nodes = std::max(max_nodes, g.node_count());
    std::vector<ReducedCode> codes;
    codes.reserve(records.size());
    for (const auto& r : records) codes.push_back(r.code);
    TokenVocabulary vocab = build_vocabulary(codes, max_nodes);

    write_code_file(require_path(config, "codes"), records, vocab);
    write_vocabulary_file(require_path(config, "vocab"), vocab);
    std::cout << "preprocessed " << graphs.size() << " graphs: " << vocab.token_count()
              << " tokens, timestamp alphabet " << vocab.max_nodes() << "\n";
    return 0;
}

int cmd_split(const RunConfig& config) {
    auto graphs = parse_graph_file(require_path(config, "graphs"));
    SplitSpec spec;
    spec.seed = config.seed;
    auto parts = split_corpus(graphs.size(), spec);
    std::vector<long long> ids;
    ids.reserve(graphs.size());
    for (size_t i = 0; i < graphs.size(); ++i) ids.push_back(graph_file_id(graphs[i], i));
    write_split_file(require_path(config, "splits"), ids, parts);

    size_t n_train = 0, n_val = 0, n_test = 0;
    for (auto p : parts) {
        if (p == SplitPart::Train) ++n_train;
        else if (p == SplitPart::Val) ++n_val;
        else ++n_test;
    }
    std::cout << "split " << graphs.size() << " graphs: " << n_train << " train, " << n_val
              << " val, " << n_test << " test\n";
    return 0;
}

int cmd_train(const RunConfig& config) {
    TokenVocabulary vocab = read_vocabulary_file(require_path(config, "vocab"));
    auto records = read_code_file(require_path(config, "codes"), vocab);
    auto membership = read_split_file(require_path(config, "splits"));

    std::vector<EncodedSequence> train_set, val_set;
    size_t longest = 1;
    for (const auto& r : records) {
        auto it = membership.find(r.graph_id);
        if (it == membership.end())
            throw Error("graph " + std::to_string(r.graph_id) + " missing from the split file");
        if (it->second == SplitPart::Test) continue;
        EncodedSequence seq = encode_sequence(r.code, vocab);
        if (it->second == SplitPart::Train) {
            longest = std::max(longest, r.code.size());
            train_set.push_back(std::move(seq));
        } else {
            val_set.push_back(std::move(seq));
        }
    }
    if (train_set.empty()) throw Error("no training graphs after the split");

    ModelConfig mc{config.embed, config.hidden, config.layers, config.head_hidden,
                   config.dropout};
    ModelParams params = init_model(mc, vocab.ts_width(), vocab.token_width(), config.seed);
    std::cout << "model parameters: " << params.parameter_count() << "\n";

    TrainConfig tc;
    tc.epochs = config.epochs;
    tc.batch_size = config.batch_size;
    tc.seed = config.seed;
    tc.lr_base = config.lr;
    tc.decay = config.decay;
    tc.milestones = config.milestones;
    tc.on_epoch = [](const EpochLog& log) {
        std::cout << "epoch " << log.epoch << " lr " << format_loss(log.lr) << " train_loss "
                  << format_loss(log.train_loss) << " val_loss " << format_loss(log.val_loss)
                  << "\n";
    };
    TrainResult result = train(params, train_set, val_set, tc);

    long long max_steps =
        config.max_steps > 0 ? config.max_steps : 2 * static_cast<long long>(longest);
    save_checkpoint(params, vocab, max_steps, require_path(config, "checkpoint"));
    if (result.log.empty())
        std::cout << "saved untrained checkpoint to " << config.checkpoint << "\n";
    else
        std::cout << "saved checkpoint to " << config.checkpoint << " (best epoch "
                  << result.best_epoch << ", val_loss " << format_loss(result.best_val_loss)
                  << ")\n";
    return 0;
}

int cmd_generate(const RunConfig& config, bool greedy, int workers) {
    TokenVocabulary vocab = read_vocabulary_file(require_path(config, "vocab"));
    LoadedCheckpoint loaded = load_checkpoint(require_path(config, "checkpoint"), vocab);
    int max_steps = static_cast<int>(config.max_steps > 0 ? config.max_steps : loaded.max_steps);
    int count = config.sample_count;
    if (count < 0) throw Error("sample_count must be non-negative");

    std::vector<LabeledGraph> graphs(count);
    std::vector<GenerationReport> gen_reports(count);
    std::vector<ReconstructionReport> rec_reports(count);
    parallel_for(static_cast<size_t>(count), workers, [&](size_t i) {
        auto [code, gen_report] = sample(loaded.params, vocab, max_steps,
                                         derive_seed(config.seed, "generate", i), greedy);
        Reconstruction rec = graph_from_reduced(code);
        rec.graph.id = static_cast<long long>(i);
        graphs[i] = std::move(rec.graph);
        gen_reports[i] = gen_report;
        rec_reports[i] = std::move(rec.report);
    });
    write_graph_file(graphs, require_path(config, "graphs"));

    size_t nonempty = 0, kept = 0, discarded = 0, truncated = 0, sos_steps = 0;
    std::map<std::string, size_t> reasons;
    for (int i = 0; i < count; ++i) {
        if (graphs[i].node_count() > 0) ++nonempty;
        kept += rec_reports[i].kept;
        discarded += rec_reports[i].discarded.size();
        for (const auto& d : rec_reports[i].discarded) ++reasons[d.reason];
        if (gen_reports[i].truncated) ++truncated;
        sos_steps += gen_reports[i].sos_steps;
    }
    if (!config.report.empty()) {
        std::ofstream out(config.report);
        if (!out) throw Error("cannot open '" + config.report + "' for writing");
        out << "generated=" << count << "\n";
        out << "nonempty=" << nonempty << "\n";
        out << "kept_entries=" << kept << "\n";
        out << "discarded_entries=" << discarded << "\n";
        out << "truncated=" << truncated << "\n";
        out << "sos_steps=" << sos_steps << "\n";
        for (const auto& [reason, n] : reasons) {
            std::string slug = reason;
            for (char& c : slug)
                if (c == ' ' || c == ',' || c == '(' || c == ')') c = '_';
            out << "discard_" << slug << "=" << n << "\n";
        }
    }
    std::cout << "generated " << count << " graphs (" << nonempty << " nonempty) to "
              << config.graphs << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& config, const std::string& generated_path,
                 const std::string& reference_path, const std::string& training_path,
                 const std::string& validator) {
    auto generated = parse_graph_file(generated_path);
    auto reference = parse_graph_file(reference_path);
    auto training = parse_graph_file(training_path);

    EvalProtocol protocol;
    protocol.batch = config.eval_batch;
    protocol.rounds = config.eval_rounds;
    protocol.seed = config.seed;
    protocol.mmd_sigma = config.mmd_sigma;
    protocol.nspdk_r = config.nspdk_r;
    protocol.nspdk_d = config.nspdk_d;
    protocol.validator_command = validator;

    MetricReport report = evaluate(generated, reference, training, protocol);
    if (!config.report.empty()) write_report_file(config.report, report);
    std::cout << format_report_table(report);
    return 0;
}

int cmd_canon(const RunConfig& config, const std::vector<std::string>& check_iso) {
    if (!check_iso.empty()) {
        auto a = parse_graph_file(check_iso[0]);
        auto b = parse_graph_file(check_iso[1]);
        if (a.empty() || b.empty()) throw Error("--check-iso inputs must each hold a graph");
        bool same = graph_certificate(a.front()) == graph_certificate(b.front());
        std::cout << (same ? "isomorphic" : "not isomorphic") << "\n";
        return 0;
    }
    auto graphs = parse_graph_file(require_path(config, "graphs"));
    for (size_t i = 0; i < graphs.size(); ++i) {
        const LabeledGraph& g = graphs[i];
        if (g.edge_count() == 0) {
            std::cout << "\n";
            continue;
        }
        if (!g.connected())
            throw Error("graph " + std::to_string(graph_file_id(g, i)) +
                        " is disconnected; codes are defined for connected graphs");
        std::cout << code_to_string(min_dfs_code(g)) << "\n";
    }
    return 0;
}

int cmd_sample_citation(const RunConfig& config, const std::string& big_path,
                        const std::string& out_path) {
    auto parents = parse_graph_file(big_path);
    if (parents.empty()) throw Error("'" + big_path + "' holds no graph");
    auto samples = sample_subgraphs(parents.front(), config.sample_count, config.walk_count,
                                    config.restart_p, config.seed, config.walk_len);
    for (size_t i = 0; i < samples.size(); ++i) samples[i].id = static_cast<long long>(i);
    write_graph_file(samples, out_path);
    std::cout << "sampled " << samples.size() << " subgraphs to " << out_path << "\n";
    return 0;
}

std::string version_text() {
    std::ostringstream out;
    out << "file format versions:\n";
    out << "  graph transactions " << kGraphFormatVersion << "\n";
    out << "  reduced codes " << kCodeFormatVersion << "\n";
    out << "  vocabulary " << kVocabularyFormatVersion << "\n";
    out << "  splits " << kSplitFormatVersion << "\n";
    out << "  checkpoint " << kCheckpointFormatVersion << "\n";
    out << "  config " << kConfigFormatVersion << "\n";
    out << "  report " << kReportFormatVersion << "\n";
    return out.str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"labeled-graph generation: canonical codes, sequence model, evaluation"};
    app.require_subcommand(0, 1);

    bool version = false;
    app.add_flag("--version", version, "print file format versions and exit");
    int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    app.add_option("--workers", workers, "worker threads for parallel stages");

    struct Sub {
        CLI::App* cmd = nullptr;
        std::string config_path;
    };
    auto add_sub = [&](const std::string& name, const std::string& desc) {
        Sub sub;
        sub.cmd = app.add_subcommand(name, desc);
        sub.cmd->add_option("--config", sub.config_path, "key=value settings file");
        sub.cmd->allow_extras();
        return sub;
    };

    Sub preprocess = add_sub("preprocess", "canonicalize graphs into reduced codes + vocabulary");
    bool augment = false;
    preprocess.cmd->add_flag("--augment-degree", augment,
                             "append :degree to every node label first");

    Sub split = add_sub("split", "write the seeded train/val/test membership file");
    Sub train_cmd = add_sub("train", "train the sequence model and write a checkpoint");

    Sub generate = add_sub("generate", "sample codes from a checkpoint and rebuild graphs");
    bool greedy = false;
    generate.cmd->add_flag("--greedy", greedy, "argmax decoding instead of sampling");

    Sub evaluate_cmd = add_sub("evaluate", "score generated graphs against a reference corpus");
    std::string generated_path, reference_path, training_path, validator;
    evaluate_cmd.cmd->add_option("generated", generated_path, "generated graph file")->required();
    evaluate_cmd.cmd->add_option("reference", reference_path, "reference graph file")->required();
    evaluate_cmd.cmd->add_option("training", training_path, "training graph file (novelty)")
        ->required();
    evaluate_cmd.cmd->add_option("--validator", validator,
                                 "external validity command (graph on stdin, valid/invalid out)");

    Sub canon = add_sub("canon", "print the canonical code of every graph");
    std::vector<std::string> check_iso;
    canon.cmd->add_option("--check-iso", check_iso, "two graph files to compare")->expected(2);

    Sub citation = add_sub("sample-citation", "random-walk subgraph extraction from one parent");
    std::string big_path, out_path;
    citation.cmd->add_option("parent", big_path, "parent graph file")->required();
    citation.cmd->add_option("out", out_path, "output graph file")->required();

    CLI11_PARSE(app, argc, argv);

    if (version) {
        std::cout << version_text();
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 1;
    }

    try {
        CLI::App* active = app.get_subcommands().front();
        Sub* sub = nullptr;
        for (Sub* s : {&preprocess, &split, &train_cmd, &generate, &evaluate_cmd, &canon,
                       &citation})
            if (s->cmd == active) sub = s;
        RunConfig config = resolve_config(sub->config_path, active->remaining());

        if (active == preprocess.cmd) return cmd_preprocess(config, augment, workers);
        if (active == split.cmd) return cmd_split(config);
        if (active == train_cmd.cmd) return cmd_train(config);
        if (active == generate.cmd) return cmd_generate(config, greedy, workers);
        if (active == evaluate_cmd.cmd)
            return cmd_evaluate(config, generated_path, reference_path, training_path, validator);
        if (active == canon.cmd) return cmd_canon(config, check_iso);
        if (active == citation.cmd) return cmd_sample_citation(config, big_path, out_path);
        std::cerr << "error: unknown command\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
