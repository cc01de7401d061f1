#pragma once

#include "ggrx/graph.hpp"

#include <array>
#include <string>
#include <vector>

namespace ggrx {

// One DFS-code entry: edge between discovery timestamps t_u and t_v with the
// labels of both endpoints and of the edge itself. Forward edges discover
// t_v == t_u + ... (t_u < t_v), backward edges close a cycle to an ancestor
// (t_u > t_v).
struct Quintuple {
    int t_u = 0;
    int t_v = 0;
    std::string l_u;
    std::string l_e;
    std::string l_v;

    bool forward() const { return t_u < t_v; }
};

bool operator==(const Quintuple& a, const Quintuple& b);

// Total order on code entries. Structure first (the gSpan edge order over the
// timestamp pairs), labels second, bytewise on (l_u, l_e, l_v):
//   forward  vs forward  : j1 < j2, tie broken by i1 > i2
//   backward vs backward : i1 < i2, tie broken by j1 < j2
//   backward vs forward  : i1 < j2
//   forward  vs backward : j1 <= i2
// Returns <0, 0, >0.
int compare(const Quintuple& a, const Quintuple& b);
bool operator<(const Quintuple& a, const Quintuple& b);

using DfsCode = std::vector<Quintuple>;

int compare(const DfsCode& a, const DfsCode& b);

// Reduced entry: the redundant timestamp-derivable label fields of a minimum
// DFS code are folded into a single token (l_u, l_e, l_v).
struct Triplet {
    int t_u = 0;
    int t_v = 0;
    std::array<std::string, 3> token; // (l_u, l_e, l_v)
};

bool operator==(const Triplet& a, const Triplet& b);
int compare(const Triplet& a, const Triplet& b);

using ReducedCode = std::vector<Triplet>;

int compare(const ReducedCode& a, const ReducedCode& b);

// Neighbor choice when a DFS visit has several forward extensions.
enum class NeighborOrder {
    MinLabel,  // smallest (edge label, node label), node index breaks ties
    NodeIndex, // smallest node index
};

// Code of one concrete DFS visit from `start`. Backward edges are emitted as
// soon as their source is discovered, in ascending target timestamp; forward
// extensions always continue from the deepest stack vertex that still has
// unvisited neighbors. Requires a connected graph with at least one edge.
DfsCode enumerate_dfs_code(const LabeledGraph& g, int start,
                           NeighborOrder order = NeighborOrder::MinLabel);

// Lexicographically smallest DFS code over all visits: branch-and-bound in
// lockstep over partial visits, keeping after every emitted entry only the
// embeddings that realized the minimal extension. Requires a connected graph
// with at least one edge.
DfsCode min_dfs_code(const LabeledGraph& g);

ReducedCode reduce(const DfsCode& code);

// Display form "(t_u,t_v,l_u,l_e,l_v)(...)".
std::string code_to_string(const DfsCode& code);
std::string code_to_string(const ReducedCode& code);

// Injective serialization of a code, usable as a canonical-form map key.
std::string code_key(const DfsCode& code);
std::string code_key(const ReducedCode& code);

struct ReconstructionPolicy {
    // Reject the whole code on the first invalid entry instead of skipping it.
    bool strict = false;
};

struct DiscardedEntry {
    size_t position = 0;
    Triplet entry;
    std::string reason;
};

struct ReconstructionReport {
    size_t kept = 0;
    std::vector<DiscardedEntry> discarded;
};

// Rebuild a graph from a reduced code, tolerating model output that is not a
// valid code. The first entry must be (0, 1, token) and creates both
// endpoints; a later entry is applied as a forward edge when t_u is an
// existing timestamp and t_v is the next fresh one (t_v node created with the
// token's l_v), as a backward edge when both timestamps exist, the edge is new
// and the endpoint labels match the token; anything else is discarded and
// reported. An invalid first entry yields the empty graph.
struct Reconstruction {
    LabeledGraph graph;
    ReconstructionReport report;
};
Reconstruction graph_from_reduced(const ReducedCode& code, const ReconstructionPolicy& policy = {});

// Label-respecting graph isomorphism, decided by comparing minimum DFS codes.
// Inputs must be connected; graphs without edges are compared by their node
// label multisets.
bool is_isomorphic(const LabeledGraph& a, const LabeledGraph& b);

// Canonical certificate usable as a hash/map key: the reduced minimum DFS
// code for edge-bearing graphs, the sorted node label multiset otherwise.
std::string graph_certificate(const LabeledGraph& g);

} // namespace ggrx
