#include "ggrx/canonical.hpp"

#include "ggrx/error.hpp"

#include <algorithm>
#include <climits>
#include <map>
#include <set>
#include <sstream>

namespace ggrx {

bool operator==(const Quintuple& a, const Quintuple& b) {
    return a.t_u == b.t_u && a.t_v == b.t_v && a.l_u == b.l_u && a.l_e == b.l_e && a.l_v == b.l_v;
}

namespace {

int cmp3(const std::string& a, const std::string& b) {
    return a.compare(b);
}

// Structural (timestamp-pair) part of the code entry order.
int compare_structure(int i1, int j1, int i2, int j2) {
    bool fwd1 = i1 < j1, fwd2 = i2 < j2;
    if (fwd1 && fwd2) {
        if (j1 != j2) return j1 < j2 ? -1 : 1;
        if (i1 != i2) return i1 > i2 ? -1 : 1;
        return 0;
    }
    if (!fwd1 && !fwd2) {
        if (i1 != i2) return i1 < i2 ? -1 : 1;
        if (j1 != j2) return j1 < j2 ? -1 : 1;
        return 0;
    }
    if (!fwd1) return i1 < j2 ? -1 : 1;  // backward vs forward
    return j1 <= i2 ? -1 : 1;            // forward vs backward
}

} // namespace

int compare(const Quintuple& a, const Quintuple& b) {
    int s = compare_structure(a.t_u, a.t_v, b.t_u, b.t_v);
    if (s != 0) return s;
    if (int c = cmp3(a.l_u, b.l_u)) return c;
    if (int c = cmp3(a.l_e, b.l_e)) return c;
    return cmp3(a.l_v, b.l_v);
}

bool operator<(const Quintuple& a, const Quintuple& b) {
    return compare(a, b) < 0;
}

int compare(const DfsCode& a, const DfsCode& b) {
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) {
        if (int c = compare(a[i], b[i])) return c;
    }
    if (a.size() == b.size()) return 0;
    return a.size() < b.size() ? -1 : 1;
}

bool operator==(const Triplet& a, const Triplet& b) {
    return a.t_u == b.t_u && a.t_v == b.t_v && a.token == b.token;
}

int compare(const Triplet& a, const Triplet& b) {
    int s = compare_structure(a.t_u, a.t_v, b.t_u, b.t_v);
    if (s != 0) return s;
    for (int k = 0; k < 3; ++k) {
        if (int c = cmp3(a.token[k], b.token[k])) return c;
    }
    return 0;
}

int compare(const ReducedCode& a, const ReducedCode& b) {
    size_t n = std::min(a.size(), b.size());
    for (size_t i = 0; i < n; ++i) {
        if (int c = compare(a[i], b[i])) return c;
    }
    if (a.size() == b.size()) return 0;
    return a.size() < b.size() ? -1 : 1;
}

namespace {

// One partial DFS visit. The stack is kept lazily: it always holds the tree
// path from the root to the most recently discovered vertex, and vertices are
// popped only when a forward extension continues from an ancestor. That is
// sound because a vertex below the forward source can never grow again: it
// would have been popped in the real DFS the moment it ran out of unvisited
// neighbors, and unvisited sets only shrink.
struct Visit {
    std::vector<int> ts;     // node -> discovery timestamp, -1 unvisited
    std::vector<char> used;  // edge -> already emitted
    std::vector<int> stack;  // tree path, root at front
    int n_visited = 0;

    static Visit start_at(const LabeledGraph& g, int u, int v, int edge_idx) {
        Visit s;
        s.ts.assign(g.node_count(), -1);
        s.used.assign(g.edge_count(), 0);
        s.ts[u] = 0;
        s.ts[v] = 1;
        s.used[edge_idx] = 1;
        s.stack = {u, v};
        s.n_visited = 2;
        return s;
    }
};

struct Extension {
    Quintuple q;
    bool backward = false;
    int stack_pos = 0; // forward only: index of the source on the stack
    int target = 0;    // node id
    int edge_idx = 0;
};

// Candidate next entries of a partial visit. A pending backward edge from the
// current vertex is forced (it precedes any forward in the code order and
// becomes unreachable once the visit moves on), and only the one with the
// smallest target can start the ascending backward run. Otherwise all forward
// extensions from the deepest stack vertex with unvisited neighbors compete.
std::vector<Extension> candidate_extensions(const LabeledGraph& g, const Visit& s) {
    std::vector<Extension> out;
    int top = s.stack.back();

    int best_ts = INT_MAX, best_edge = -1, best_node = -1;
    for (const auto& [w, e] : g.incident(top)) {
        if (!s.used[e] && s.ts[w] >= 0 && s.ts[w] < best_ts) {
            best_ts = s.ts[w];
            best_edge = e;
            best_node = w;
        }
    }
    if (best_edge >= 0) {
        out.push_back({{s.ts[top], best_ts, g.node_label(top), g.edge(best_edge).label,
                        g.node_label(best_node)},
                       true, 0, best_node, best_edge});
        return out;
    }

    for (int k = static_cast<int>(s.stack.size()) - 1; k >= 0; --k) {
        int v = s.stack[k];
        bool any = false;
        for (const auto& [w, e] : g.incident(v)) {
            if (s.ts[w] < 0) {
                any = true;
                out.push_back({{s.ts[v], s.n_visited, g.node_label(v), g.edge(e).label,
                                g.node_label(w)},
                               false, k, w, e});
            }
        }
        if (any) break;
    }
    return out;
}

Visit apply_extension(const Visit& s, const Extension& ext) {
    Visit ns = s;
    ns.used[ext.edge_idx] = 1;
    if (!ext.backward) {
        ns.stack.resize(ext.stack_pos + 1);
        ns.stack.push_back(ext.target);
        ns.ts[ext.target] = ns.n_visited;
        ++ns.n_visited;
    }
    return ns;
}

void require_canonicalizable(const LabeledGraph& g, const char* who) {
    if (g.node_count() == 0) throw Error(std::string(who) + ": empty graph");
    if (g.edge_count() == 0) throw Error(std::string(who) + ": graph has no edges");
    if (!g.connected()) throw Error(std::string(who) + ": graph is disconnected");
}

} // namespace

DfsCode enumerate_dfs_code(const LabeledGraph& g, int start, NeighborOrder order) {
    require_canonicalizable(g, "enumerate_dfs_code");
    if (start < 0 || start >= g.node_count())
        throw Error("enumerate_dfs_code: start node " + std::to_string(start) + " out of range");

    Visit s;
    s.ts.assign(g.node_count(), -1);
    s.used.assign(g.edge_count(), 0);
    s.ts[start] = 0;
    s.stack = {start};
    s.n_visited = 1;

    DfsCode code;
    code.reserve(g.edge_count());
    while (static_cast<int>(code.size()) < g.edge_count()) {
        auto exts = candidate_extensions(g, s);
        if (exts.empty()) throw Error("enumerate_dfs_code: internal stall");
        const Extension* pick = &exts.front();
        if (!pick->backward && exts.size() > 1) {
            for (const auto& e : exts) {
                if (order == NeighborOrder::NodeIndex) {
                    if (e.target < pick->target) pick = &e;
                } else {
                    int c = cmp3(e.q.l_e, pick->q.l_e);
                    if (c == 0) c = cmp3(e.q.l_v, pick->q.l_v);
                    if (c < 0 || (c == 0 && e.target < pick->target)) pick = &e;
                }
            }
        }
        code.push_back(pick->q);
        s = apply_extension(s, *pick);
    }
    return code;
}

DfsCode min_dfs_code(const LabeledGraph& g) {
    require_canonicalizable(g, "min_dfs_code");

    // Seed with every directed edge that realizes the smallest first entry.
    Quintuple first;
    bool have = false;
    for (const auto& e : g.edges()) {
        for (int dir = 0; dir < 2; ++dir) {
            int u = dir ? e.v : e.u;
            int v = dir ? e.u : e.v;
            Quintuple q{0, 1, g.node_label(u), e.label, g.node_label(v)};
            if (!have || compare(q, first) < 0) {
                first = q;
                have = true;
            }
        }
    }

    std::vector<Visit> states;
    for (int ei = 0; ei < g.edge_count(); ++ei) {
        const Edge& e = g.edge(ei);
        for (int dir = 0; dir < 2; ++dir) {
            int u = dir ? e.v : e.u;
            int v = dir ? e.u : e.v;
            Quintuple q{0, 1, g.node_label(u), e.label, g.node_label(v)};
            if (compare(q, first) == 0) states.push_back(Visit::start_at(g, u, v, ei));
        }
    }

    DfsCode code{first};
    code.reserve(g.edge_count());

    // Lockstep branch and bound: every state realizes the current code
    // prefix; after each emitted entry only the states achieving the minimal
    // extension survive. Exact because every partial visit completes to a
    // full code and discarded candidates can only yield greater codes.
    while (static_cast<int>(code.size()) < g.edge_count()) {
        Quintuple best;
        bool step_have = false;
        std::vector<std::pair<size_t, Extension>> winners;
        for (size_t i = 0; i < states.size(); ++i) {
            for (const auto& ext : candidate_extensions(g, states[i])) {
                int c = step_have ? compare(ext.q, best) : -1;
                if (c < 0) {
                    best = ext.q;
                    step_have = true;
                    winners.clear();
                }
                if (c <= 0) winners.push_back({i, ext});
            }
        }
        if (!step_have) throw Error("min_dfs_code: internal stall");
        code.push_back(best);

        std::vector<Visit> next;
        std::set<std::pair<std::vector<int>, std::vector<char>>> seen;
        for (const auto& [i, ext] : winners) {
            Visit ns = apply_extension(states[i], ext);
            if (seen.insert({ns.ts, ns.used}).second) next.push_back(std::move(ns));
        }
        states = std::move(next);
    }
    return code;
}

ReducedCode reduce(const DfsCode& code) {
    ReducedCode out;
    out.reserve(code.size());
    for (const auto& q : code) out.push_back({q.t_u, q.t_v, {q.l_u, q.l_e, q.l_v}});
    return out;
}

namespace {

void entry_to_stream(std::ostringstream& ss, int t_u, int t_v, const std::string& a,
                     const std::string& b, const std::string& c) {
    ss << '(' << t_u << ',' << t_v << ',' << a << ',' << b << ',' << c << ')';
}

void entry_to_key(std::string& out, int t_u, int t_v, const std::string& a, const std::string& b,
                  const std::string& c) {
    out += std::to_string(t_u);
    out += ',';
    out += std::to_string(t_v);
    for (const std::string* s : {&a, &b, &c}) {
        out += ',';
        out += std::to_string(s->size());
        out += ':';
        out += *s;
    }
    out += ';';
}

} // namespace

std::string code_to_string(const DfsCode& code) {
    std::ostringstream ss;
    for (const auto& q : code) entry_to_stream(ss, q.t_u, q.t_v, q.l_u, q.l_e, q.l_v);
    return ss.str();
}

std::string code_to_string(const ReducedCode& code) {
    std::ostringstream ss;
    for (const auto& t : code) entry_to_stream(ss, t.t_u, t.t_v, t.token[0], t.token[1], t.token[2]);
    return ss.str();
}

std::string code_key(const DfsCode& code) {
    std::string out;
    for (const auto& q : code) entry_to_key(out, q.t_u, q.t_v, q.l_u, q.l_e, q.l_v);
    return out;
}

std::string code_key(const ReducedCode& code) {
    std::string out;
    for (const auto& t : code) entry_to_key(out, t.t_u, t.t_v, t.token[0], t.token[1], t.token[2]);
    return out;
}

Reconstruction graph_from_reduced(const ReducedCode& code, const ReconstructionPolicy& policy) {
    Reconstruction res;
    std::vector<std::string> node_labels;
    std::vector<Edge> edges;
    std::set<std::pair<int, int>> edge_set;

    auto discard = [&](size_t pos, const Triplet& t, const std::string& reason) {
        if (policy.strict)
            throw Error("graph_from_reduced: entry " + std::to_string(pos) + ": " + reason);
        res.report.discarded.push_back({pos, t, reason});
    };

    size_t i = 0;
    if (!code.empty()) {
        const Triplet& t0 = code[0];
        if (t0.t_u == 0 && t0.t_v == 1) {
            node_labels.push_back(t0.token[0]);
            node_labels.push_back(t0.token[2]);
            edges.push_back({0, 1, t0.token[1]});
            edge_set.insert({0, 1});
            ++res.report.kept;
            i = 1;
        } else {
            discard(0, t0, "first entry must be (0, 1, token)");
            for (size_t j = 1; j < code.size(); ++j)
                discard(j, code[j], "abandoned after invalid first entry");
            i = code.size();
        }
    }

    for (; i < code.size(); ++i) {
        const Triplet& t = code[i];
        int n = static_cast<int>(node_labels.size());
        if (t.t_u < 0 || t.t_u >= n) {
            discard(i, t, "source timestamp does not exist");
            continue;
        }
        if (t.token[0] != node_labels[t.t_u]) {
            discard(i, t, "source label conflicts with node " + std::to_string(t.t_u));
            continue;
        }
        if (t.t_v == n) {
            // forward edge, creates the next node
            node_labels.push_back(t.token[2]);
            edges.push_back({t.t_u, t.t_v, t.token[1]});
            edge_set.insert({std::min(t.t_u, t.t_v), std::max(t.t_u, t.t_v)});
            ++res.report.kept;
        } else if (t.t_v >= 0 && t.t_v < n) {
            // both timestamps exist: backward edge
            if (t.t_v == t.t_u) {
                discard(i, t, "self-loop");
                continue;
            }
            if (t.token[2] != node_labels[t.t_v]) {
                discard(i, t, "target label conflicts with node " + std::to_string(t.t_v));
                continue;
            }
            auto key = std::minmax(t.t_u, t.t_v);
            if (edge_set.count({key.first, key.second})) {
                discard(i, t, "edge already present");
                continue;
            }
            edges.push_back({t.t_u, t.t_v, t.token[1]});
            edge_set.insert({key.first, key.second});
            ++res.report.kept;
        } else {
            discard(i, t, "gap in timestamps");
        }
    }

    res.graph = LabeledGraph(std::move(node_labels), std::move(edges));
    return res;
}

bool is_isomorphic(const LabeledGraph& a, const LabeledGraph& b) {
    if (!a.connected() || !b.connected()) throw Error("is_isomorphic: inputs must be connected");
    if (a.node_count() != b.node_count() || a.edge_count() != b.edge_count()) return false;
    if (a.edge_count() == 0) {
        auto la = a.node_labels();
        auto lb = b.node_labels();
        std::sort(la.begin(), la.end());
        std::sort(lb.begin(), lb.end());
        return la == lb;
    }
    return compare(min_dfs_code(a), min_dfs_code(b)) == 0;
}

std::string graph_certificate(const LabeledGraph& g) {
    if (g.node_count() == 0) return "empty";
    if (g.edge_count() == 0 && g.node_count() > 1) {
        // No DFS code exists; fall back to per-component certificates.
        auto labels = g.node_labels();
        std::sort(labels.begin(), labels.end());
        std::string out = "nodes:";
        for (const auto& l : labels) {
            out += std::to_string(l.size());
            out += ':';
            out += l;
        }
        return out;
    }
    if (!g.connected()) {
        std::vector<std::string> parts;
        for (const auto& comp : connected_components(g))
            parts.push_back(graph_certificate(induced_subgraph(g, comp)));
        std::sort(parts.begin(), parts.end());
        std::string out = "parts:";
        for (const auto& p : parts) {
            out += std::to_string(p.size());
            out += ':';
            out += p;
        }
        return out;
    }
    if (g.edge_count() == 0) return "nodes:" + std::to_string(g.node_label(0).size()) + ':' + g.node_label(0);
    return "code:" + code_key(min_dfs_code(g));
}

} // namespace ggrx
