#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace ggrx {

struct Edge {
    int u = 0;
    int v = 0;
    std::string label;
};

// Undirected graph with string labels on nodes and edges. Node ids are
// contiguous 0..n-1. Self-loops and parallel edges are rejected at
// construction, so every instance satisfies the structural invariants.
class LabeledGraph {
public:
    LabeledGraph() = default;
    LabeledGraph(std::vector<std::string> node_labels, std::vector<Edge> edges);

    int node_count() const { return static_cast<int>(node_labels_.size()); }
    int edge_count() const { return static_cast<int>(edges_.size()); }

    const std::string& node_label(int v) const { return node_labels_[v]; }
    const std::vector<std::string>& node_labels() const { return node_labels_; }
    const Edge& edge(int e) const { return edges_[e]; }
    const std::vector<Edge>& edges() const { return edges_; }

    // Incident edges of v as (neighbor, edge index) pairs, in insertion order.
    const std::vector<std::pair<int, int>>& incident(int v) const { return adj_[v]; }

    int degree(int v) const { return static_cast<int>(adj_[v].size()); }

    bool has_edge(int u, int v) const;
    // Edge label of {u, v}, or nullptr when the edge is absent.
    const std::string* edge_label(int u, int v) const;

    bool connected() const;

    // Identifier carried through graph files; -1 when unset.
    long long id = -1;

private:
    std::vector<std::string> node_labels_;
    std::vector<Edge> edges_;
    std::vector<std::vector<std::pair<int, int>>> adj_;
};

// Degree of each node, in node order.
std::vector<int> degree_sequence(const LabeledGraph& g);

// Subgraph induced by `nodes` (need not be sorted; duplicates rejected).
// Node i of the result corresponds to nodes[i].
LabeledGraph induced_subgraph(const LabeledGraph& g, const std::vector<int>& nodes);

// Connected components as node id lists, each sorted, ordered by smallest id.
std::vector<std::vector<int>> connected_components(const LabeledGraph& g);

// Distinct node / edge labels over a corpus, sorted bytewise.
struct LabelAlphabets {
    std::vector<std::string> node_labels;
    std::vector<std::string> edge_labels;
};
LabelAlphabets collect_alphabets(const std::vector<LabeledGraph>& graphs);

// Transaction format, one block per graph:
//   t # <id>
//   v <index> <label>
//   e <u> <v> <label>
// Malformed input raises Error with "<source>:<line>: <reason>".
std::vector<LabeledGraph> parse_graphs(std::istream& in, const std::string& source_name);
std::vector<LabeledGraph> parse_graph_file(const std::string& path);
void write_graphs(std::ostream& out, const std::vector<LabeledGraph>& graphs);
void write_graph_file(const std::vector<LabeledGraph>& graphs, const std::string& path);

} // namespace ggrx
