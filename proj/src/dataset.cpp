#include "ggrx/dataset.hpp"

#include "ggrx/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ggrx {

namespace {

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace

TokenVocabulary::TokenVocabulary(std::vector<std::array<std::string, 3>> tokens, int max_nodes)
    : tokens_(std::move(tokens)), max_nodes_(max_nodes) {
    if (max_nodes_ < 2) throw Error("vocabulary: max_nodes must be at least 2");
    for (int i = 0; i < token_count(); ++i) {
        for (const auto& part : tokens_[i])
            if (part.empty()) throw Error("vocabulary: empty token component");
        if (!index_.emplace(tokens_[i], i).second)
            throw Error("vocabulary: duplicate token (" + tokens_[i][0] + ", " + tokens_[i][1] +
                        ", " + tokens_[i][2] + ")");
    }
}

const std::array<std::string, 3>& TokenVocabulary::token(int id) const {
    if (id < 0 || id >= token_count())
        throw Error("vocabulary: token id " + std::to_string(id) + " out of range");
    return tokens_[id];
}

int TokenVocabulary::token_id(const std::array<std::string, 3>& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? -1 : it->second;
}

int TokenVocabulary::encode_token(const std::array<std::string, 3>& token) const {
    int id = token_id(token);
    if (id < 0)
        throw Error("vocabulary: unknown token (" + token[0] + ", " + token[1] + ", " + token[2] +
                    ")");
    return id;
}

int TokenVocabulary::encode_timestamp(int t) const {
    if (t < 0 || t >= max_nodes_)
        throw Error("vocabulary: timestamp " + std::to_string(t) + " outside [0, " +
                    std::to_string(max_nodes_) + ")");
    return t;
}

std::string TokenVocabulary::serialize() const {
    std::ostringstream ss;
    ss << "T " << max_nodes_ << "\n";
    for (int i = 0; i < token_count(); ++i)
        ss << i << " " << tokens_[i][0] << " " << tokens_[i][1] << " " << tokens_[i][2] << "\n";
    return ss.str();
}

uint64_t TokenVocabulary::hash() const {
    return fnv1a64(serialize());
}

TokenVocabulary build_vocabulary(const std::vector<ReducedCode>& codes, int max_nodes) {
    std::set<std::array<std::string, 3>> tokens;
    for (const auto& code : codes) {
        for (const auto& t : code) {
            if (t.t_u >= max_nodes || t.t_v >= max_nodes)
                throw Error("build_vocabulary: code references timestamp " +
                            std::to_string(std::max(t.t_u, t.t_v)) + " but max_nodes is " +
                            std::to_string(max_nodes));
            tokens.insert(t.token);
        }
    }
    return TokenVocabulary(std::vector<std::array<std::string, 3>>(tokens.begin(), tokens.end()),
                           max_nodes);
}

void write_vocabulary_file(const std::string& path, const TokenVocabulary& vocab) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << vocab.serialize();
    out.flush();
    if (!out) throw Error("failed writing vocabulary file '" + path + "'");
}

TokenVocabulary read_vocabulary_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open vocabulary file '" + path + "'");
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& reason) -> void {
        throw Error(path + ":" + std::to_string(line_no) + ": " + reason);
    };

    long long max_nodes = -1;
    std::vector<std::array<std::string, 3>> tokens;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string first;
        if (!(ss >> first)) continue;
        if (first == "T") {
            if (max_nodes >= 0) fail("duplicate T line");
            if (!(ss >> max_nodes) || max_nodes < 2) fail("malformed T line");
        } else {
            long long id = -1;
            bool ok = true;
            try {
                size_t pos = 0;
                id = std::stoll(first, &pos);
                ok = pos == first.size();
            } catch (...) {
                ok = false;
            }
            if (!ok) fail("malformed token id '" + first + "'");
            if (id != static_cast<long long>(tokens.size()))
                fail("token id " + first + " out of order");
            std::array<std::string, 3> tok;
            if (!(ss >> tok[0] >> tok[1] >> tok[2])) fail("malformed token line");
            std::string extra;
            if (ss >> extra) fail("trailing fields on token line");
            tokens.push_back(std::move(tok));
        }
    }
    if (max_nodes < 0) fail("missing T line");
    return TokenVocabulary(std::move(tokens), static_cast<int>(max_nodes));
}

void write_code_file(const std::string& path, const std::vector<CodeRecord>& records,
                     const TokenVocabulary& vocab) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    for (const auto& rec : records) {
        out << "# " << rec.graph_id << "\n";
        for (const auto& t : rec.code) {
            out << vocab.encode_timestamp(t.t_u) << " " << vocab.encode_timestamp(t.t_v) << " "
                << vocab.encode_token(t.token) << "\n";
        }
    }
    out.flush();
    if (!out) throw Error("failed writing code file '" + path + "'");
}

std::vector<CodeRecord> read_code_file(const std::string& path, const TokenVocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open code file '" + path + "'");
    std::vector<CodeRecord> records;
    std::string line;
    int line_no = 0;
    auto fail = [&](const std::string& reason) -> void {
        throw Error(path + ":" + std::to_string(line_no) + ": " + reason);
    };
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        std::string first;
        if (!(ss >> first)) continue;
        if (first == "#") {
            long long gid;
            if (!(ss >> gid)) fail("malformed graph header");
            records.push_back({gid, {}});
        } else {
            if (records.empty()) fail("code entry before any graph header");
            long long t_u, t_v, tok;
            std::istringstream ss2(line);
            if (!(ss2 >> t_u >> t_v >> tok)) fail("malformed code entry '" + line + "'");
            if (t_u < 0 || t_u >= vocab.max_nodes() || t_v < 0 || t_v >= vocab.max_nodes())
                fail("timestamp out of range in '" + line + "'");
            if (tok < 0 || tok >= vocab.token_count())
                fail("token id out of range in '" + line + "'");
            records.back().code.push_back({static_cast<int>(t_u), static_cast<int>(t_v),
                                           vocab.token(static_cast<int>(tok))});
        }
    }
    return records;
}

std::vector<SplitPart> split_corpus(size_t count, const SplitSpec& spec) {
    if (spec.val_fraction < 0 || spec.val_fraction > 1 || spec.test_fraction < 0 ||
        spec.test_fraction > 1)
        throw Error("split_corpus: fractions must lie in [0, 1]");
    // val_fraction applies to what remains after the test cut
    size_t n_test = static_cast<size_t>(std::llround(spec.test_fraction * count));
    size_t n_val = static_cast<size_t>(std::llround(spec.val_fraction * (count - n_test)));
    if (n_test + n_val > count) n_val = count - n_test;

    Rng rng(derive_seed(spec.seed, "split"));
    auto perm = rng.permutation(count);
    std::vector<SplitPart> parts(count, SplitPart::Train);
    for (size_t i = 0; i < n_test; ++i) parts[perm[i]] = SplitPart::Test;
    for (size_t i = 0; i < n_val; ++i) parts[perm[n_test + i]] = SplitPart::Val;
    return parts;
}

const char* split_part_name(SplitPart p) {
    switch (p) {
    case SplitPart::Train: return "train";
    case SplitPart::Val: return "val";
    case SplitPart::Test: return "test";
    }
    return "?";
}

void write_split_file(const std::string& path, const std::vector<long long>& graph_ids,
                      const std::vector<SplitPart>& parts) {
    if (graph_ids.size() != parts.size())
        throw Error("write_split_file: id and part counts differ");
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    for (size_t i = 0; i < graph_ids.size(); ++i)
        out << graph_ids[i] << " " << split_part_name(parts[i]) << "\n";
    out.flush();
    if (!out) throw Error("failed writing split file '" + path + "'");
}

std::map<long long, SplitPart> read_split_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open split file '" + path + "'");
    std::map<long long, SplitPart> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ss(line);
        long long gid;
        std::string part;
        if (!(ss >> gid)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw Error(path + ":" + std::to_string(line_no) + ": malformed split line");
        }
        if (!(ss >> part))
            throw Error(path + ":" + std::to_string(line_no) + ": missing split part");
        SplitPart p;
        if (part == "train") p = SplitPart::Train;
        else if (part == "val") p = SplitPart::Val;
        else if (part == "test") p = SplitPart::Test;
        else throw Error(path + ":" + std::to_string(line_no) + ": unknown split part '" + part + "'");
        if (!out.emplace(gid, p).second)
            throw Error(path + ":" + std::to_string(line_no) + ": duplicate graph id " +
                        std::to_string(gid));
    }
    return out;
}

LabeledGraph augment_with_degree(const LabeledGraph& g) {
    std::vector<std::string> labels;
    labels.reserve(g.node_count());
    for (int v = 0; v < g.node_count(); ++v)
        labels.push_back(g.node_label(v) + ":" + std::to_string(g.degree(v)));
    LabeledGraph out(std::move(labels), g.edges());
    out.id = g.id;
    return out;
}

int degree_proportional_node(const LabeledGraph& g, Rng& rng) {
    if (g.edge_count() == 0) throw Error("degree_proportional_node: graph has no edges");
    // Drawing an edge endpoint uniformly is the degree-proportional draw.
    size_t pick = rng.uniform_index(2 * static_cast<size_t>(g.edge_count()));
    const Edge& e = g.edge(static_cast<int>(pick / 2));
    return pick % 2 == 0 ? e.u : e.v;
}

std::vector<LabeledGraph> sample_subgraphs(const LabeledGraph& g, int count, int walks_per_sample,
                                           double restart_p, uint64_t seed, int walk_length) {
    if (count < 0) throw Error("sample_subgraphs: negative count");
    if (walks_per_sample < 1) throw Error("sample_subgraphs: walks_per_sample must be positive");
    if (walk_length < 1) throw Error("sample_subgraphs: walk_length must be positive");
    if (restart_p < 0.0 || restart_p > 1.0)
        throw Error("sample_subgraphs: restart_p outside [0, 1]");
    if (g.edge_count() == 0) throw Error("sample_subgraphs: graph has no edges");

    std::vector<LabeledGraph> samples;
    samples.reserve(count);
    for (int s = 0; s < count; ++s) {
        Rng rng(derive_seed(seed, "subgraph", static_cast<uint64_t>(s)));
        int start = degree_proportional_node(g, rng);

        std::vector<int> node_of; // sample node -> original node
        std::vector<int> remap(g.node_count(), -1);
        auto touch = [&](int v) {
            if (remap[v] == -1) {
                remap[v] = static_cast<int>(node_of.size());
                node_of.push_back(v);
            }
            return remap[v];
        };
        touch(start);

        std::vector<Edge> edges;
        std::set<std::pair<int, int>> edge_set;
        for (int walk = 0; walk < walks_per_sample; ++walk) {
            int cur = start;
            for (int step = 0; step < walk_length; ++step) {
                const auto& inc = g.incident(cur);
                const auto& [w, ei] = inc[rng.uniform_index(inc.size())];
                int a = touch(cur), b = touch(w);
                auto key = std::minmax(a, b);
                if (edge_set.insert({key.first, key.second}).second)
                    edges.push_back({a, b, g.edge(ei).label});
                cur = w;
                if (rng.uniform() < restart_p) cur = start;
            }
        }

        std::vector<std::string> labels;
        labels.reserve(node_of.size());
        for (int v : node_of) labels.push_back(g.node_label(v));
        LabeledGraph sample(std::move(labels), std::move(edges));
        sample.id = s;
        samples.push_back(std::move(sample));
    }
    return samples;
}

} // namespace ggrx
