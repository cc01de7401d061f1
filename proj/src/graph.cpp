#include "ggrx/graph.hpp"

#include "ggrx/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace ggrx {

LabeledGraph::LabeledGraph(std::vector<std::string> node_labels, std::vector<Edge> edges)
    : node_labels_(std::move(node_labels)), edges_(std::move(edges)) {
    int n = node_count();
    for (int v = 0; v < n; ++v) {
        if (node_labels_[v].empty()) throw Error("graph: empty label on node " + std::to_string(v));
    }
    adj_.assign(n, {});
    std::set<std::pair<int, int>> seen;
    for (int e = 0; e < edge_count(); ++e) {
        Edge& ed = edges_[e];
        if (ed.u < 0 || ed.u >= n || ed.v < 0 || ed.v >= n)
            throw Error("graph: edge endpoint out of range: " + std::to_string(ed.u) + " " +
                        std::to_string(ed.v));
        if (ed.u == ed.v) throw Error("graph: self-loop on node " + std::to_string(ed.u));
        if (ed.label.empty())
            throw Error("graph: empty label on edge " + std::to_string(ed.u) + "-" +
                        std::to_string(ed.v));
        auto key = std::minmax(ed.u, ed.v);
        if (!seen.insert(key).second)
            throw Error("graph: duplicate edge " + std::to_string(ed.u) + "-" +
                        std::to_string(ed.v));
        adj_[ed.u].push_back({ed.v, e});
        adj_[ed.v].push_back({ed.u, e});
    }
}

bool LabeledGraph::has_edge(int u, int v) const {
    return edge_label(u, v) != nullptr;
}

const std::string* LabeledGraph::edge_label(int u, int v) const {
    if (u < 0 || u >= node_count() || v < 0 || v >= node_count()) return nullptr;
    for (const auto& [w, e] : adj_[u]) {
        if (w == v) return &edges_[e].label;
    }
    return nullptr;
}

bool LabeledGraph::connected() const {
    int n = node_count();
    if (n == 0) return true;
    std::vector<char> seen(n, 0);
    std::vector<int> queue{0};
    seen[0] = 1;
    size_t head = 0;
    int reached = 1;
    while (head < queue.size()) {
        int v = queue[head++];
        for (const auto& [w, e] : adj_[v]) {
            (void)e;
            if (!seen[w]) {
                seen[w] = 1;
                ++reached;
                queue.push_back(w);
            }
        }
    }
    return reached == n;
}

std::vector<int> degree_sequence(const LabeledGraph& g) {
    std::vector<int> deg(g.node_count());
    for (int v = 0; v < g.node_count(); ++v) deg[v] = g.degree(v);
    return deg;
}

LabeledGraph induced_subgraph(const LabeledGraph& g, const std::vector<int>& nodes) {
    std::vector<int> remap(g.node_count(), -1);
    std::vector<std::string> labels;
    labels.reserve(nodes.size());
    for (size_t i = 0; i < nodes.size(); ++i) {
        int v = nodes[i];
        if (v < 0 || v >= g.node_count())
            throw Error("induced_subgraph: node " + std::to_string(v) + " out of range");
        if (remap[v] != -1) throw Error("induced_subgraph: duplicate node " + std::to_string(v));
        remap[v] = static_cast<int>(i);
        labels.push_back(g.node_label(v));
    }
    std::vector<Edge> edges;
    for (const auto& e : g.edges()) {
        if (remap[e.u] != -1 && remap[e.v] != -1)
            edges.push_back({remap[e.u], remap[e.v], e.label});
    }
    return LabeledGraph(std::move(labels), std::move(edges));
}

std::vector<std::vector<int>> connected_components(const LabeledGraph& g) {
    std::vector<std::vector<int>> comps;
    std::vector<char> seen(g.node_count(), 0);
    for (int s = 0; s < g.node_count(); ++s) {
        if (seen[s]) continue;
        std::vector<int> comp{s};
        seen[s] = 1;
        size_t head = 0;
        while (head < comp.size()) {
            int v = comp[head++];
            for (const auto& [w, e] : g.incident(v)) {
                (void)e;
                if (!seen[w]) {
                    seen[w] = 1;
                    comp.push_back(w);
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        comps.push_back(std::move(comp));
    }
    return comps;
}

LabelAlphabets collect_alphabets(const std::vector<LabeledGraph>& graphs) {
    std::set<std::string> nodes, edges;
    for (const auto& g : graphs) {
        for (int v = 0; v < g.node_count(); ++v) nodes.insert(g.node_label(v));
        for (const auto& e : g.edges()) edges.insert(e.label);
    }
    LabelAlphabets out;
    out.node_labels.assign(nodes.begin(), nodes.end());
    out.edge_labels.assign(edges.begin(), edges.end());
    return out;
}

namespace {

struct Parser {
    std::istream& in;
    const std::string& source;
    int line_no = 0;

    [[noreturn]] void fail(const std::string& reason) const {
        throw Error(source + ":" + std::to_string(line_no) + ": " + reason);
    }

    bool next_line(std::string& line) {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
        }
        return false;
    }
};

std::vector<std::string> split_fields(const std::string& line) {
    std::istringstream ss(line);
    std::vector<std::string> fields;
    std::string f;
    while (ss >> f) fields.push_back(f);
    return fields;
}

bool parse_int(const std::string& s, long long& out) {
    if (s.empty()) return false;
    size_t pos = 0;
    try {
        out = std::stoll(s, &pos);
    } catch (...) {
        return false;
    }
    return pos == s.size();
}

} // namespace

std::vector<LabeledGraph> parse_graphs(std::istream& in, const std::string& source_name) {
    Parser p{in, source_name};
    std::vector<LabeledGraph> graphs;

    std::string line;
    bool have_line = p.next_line(line);
    while (have_line) {
        auto fields = split_fields(line);
        if (fields[0] != "t") p.fail("expected graph header 't # <id>', got '" + line + "'");
        long long gid = 0;
        if (fields.size() != 3 || fields[1] != "#" || !parse_int(fields[2], gid))
            p.fail("malformed graph header '" + line + "'");

        std::vector<std::string> node_labels;
        std::vector<Edge> edges;
        bool edges_started = false;

        while ((have_line = p.next_line(line))) {
            fields = split_fields(line);
            if (fields[0] == "t") break;
            if (fields[0] == "v") {
                if (edges_started) p.fail("node declared after edges");
                long long idx = 0;
                if (fields.size() != 3 || !parse_int(fields[1], idx))
                    p.fail("malformed node line '" + line + "'");
                if (idx != static_cast<long long>(node_labels.size()))
                    p.fail("node index " + fields[1] + " out of order (expected " +
                           std::to_string(node_labels.size()) + ")");
                node_labels.push_back(fields[2]);
            } else if (fields[0] == "e") {
                edges_started = true;
                long long u = 0, v = 0;
                if (fields.size() != 4 || !parse_int(fields[1], u) || !parse_int(fields[2], v))
                    p.fail("malformed edge line '" + line + "'");
                long long n = static_cast<long long>(node_labels.size());
                if (u < 0 || u >= n || v < 0 || v >= n)
                    p.fail("edge endpoint out of range in '" + line + "'");
                if (u == v) p.fail("self-loop on node " + fields[1]);
                for (const auto& prev : edges) {
                    if ((prev.u == u && prev.v == v) || (prev.u == v && prev.v == u))
                        p.fail("duplicate edge " + fields[1] + "-" + fields[2]);
                }
                edges.push_back({static_cast<int>(u), static_cast<int>(v), fields[3]});
            } else {
                p.fail("unrecognized line '" + line + "'");
            }
        }

        LabeledGraph g(std::move(node_labels), std::move(edges));
        g.id = gid;
        graphs.push_back(std::move(g));
    }
    return graphs;
}

std::vector<LabeledGraph> parse_graph_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open graph file '" + path + "'");
    return parse_graphs(in, path);
}

namespace {

void require_writable_label(const std::string& label) {
    for (unsigned char c : label) {
        if (std::isspace(c))
            throw Error("write_graphs: labels must be whitespace-free, got '" + label + "'");
    }
}

} // namespace

void write_graphs(std::ostream& out, const std::vector<LabeledGraph>& graphs) {
    for (size_t i = 0; i < graphs.size(); ++i) {
        const LabeledGraph& g = graphs[i];
        for (int v = 0; v < g.node_count(); ++v) require_writable_label(g.node_label(v));
        for (const auto& e : g.edges()) require_writable_label(e.label);
        long long gid = g.id >= 0 ? g.id : static_cast<long long>(i);
        out << "t # " << gid << "\n";
        for (int v = 0; v < g.node_count(); ++v)
            out << "v " << v << " " << g.node_label(v) << "\n";
        for (const auto& e : g.edges())
            out << "e " << e.u << " " << e.v << " " << e.label << "\n";
    }
}

void write_graph_file(const std::vector<LabeledGraph>& graphs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_graphs(out, graphs);
    out.flush();
    if (!out) throw Error("failed writing graph file '" + path + "'");
}

} // namespace ggrx
