// Shared test helpers: seeded random-graph generators, independent oracles
// (exhaustive DFS-code search, bijection isomorphism, subset orbit counting),
// a finite-difference gradient checker, and a dense symmetric eigensolver.
#pragma once

#include "ggrx/autodiff.hpp"
#include "ggrx/canonical.hpp"
#include "ggrx/graph.hpp"
#include "ggrx/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace ggrx::testsupport {

// Connected labeled graph: random spanning tree plus a few extra edges.
inline LabeledGraph random_connected_graph(Rng& rng, int min_nodes, int max_nodes,
                                           int node_alphabet, int edge_alphabet,
                                           int extra_edges = 2) {
    int n = min_nodes + static_cast<int>(rng.uniform_index(max_nodes - min_nodes + 1));
    std::vector<std::string> labels;
    for (int v = 0; v < n; ++v)
        labels.push_back(std::string(1, static_cast<char>('A' + rng.uniform_index(node_alphabet))));
    auto edge_label = [&] {
        return std::string(1, static_cast<char>('a' + rng.uniform_index(edge_alphabet)));
    };
    std::set<std::pair<int, int>> used;
    std::vector<Edge> edges;
    for (int v = 1; v < n; ++v) {
        int u = static_cast<int>(rng.uniform_index(v));
        used.insert({u, v});
        edges.push_back({u, v, edge_label()});
    }
    for (int k = 0; k < extra_edges && n >= 2; ++k) {
        int u = static_cast<int>(rng.uniform_index(n));
        int v = static_cast<int>(rng.uniform_index(n));
        if (u == v) continue;
        auto key = std::minmax(u, v);
        if (used.count({key.first, key.second})) continue;
        used.insert({key.first, key.second});
        edges.push_back({key.first, key.second, edge_label()});
    }
    return LabeledGraph(std::move(labels), std::move(edges));
}

// Copy of g with node ids renamed by a random permutation.
inline LabeledGraph permuted_graph(const LabeledGraph& g, Rng& rng) {
    auto perm = rng.permutation(g.node_count());
    std::vector<std::string> labels(g.node_count());
    for (int v = 0; v < g.node_count(); ++v) labels[perm[v]] = g.node_label(v);
    std::vector<Edge> edges;
    for (const auto& e : g.edges())
        edges.push_back({static_cast<int>(perm[e.u]), static_cast<int>(perm[e.v]), e.label});
    return LabeledGraph(std::move(labels), std::move(edges));
}

// Exhaustive minimum-code oracle: runs every possible DFS visit (all start
// nodes, all neighbor orders) and keeps the smallest code. Exponential — for
// small graphs only. Backward edges of a fresh vertex are emitted in
// ascending target timestamp, matching the code definition.
namespace oracle_detail {

struct VisitState {
    std::vector<int> ts;  // node -> timestamp or -1
    std::vector<int> order; // timestamp -> node
    std::vector<char> edge_used;
    DfsCode code;
};

inline void all_visits(const LabeledGraph& g, VisitState& st, std::vector<int>& stack,
                       DfsCode& best, bool& have_best) {
    // prune: a partial code lexicographically above the best cannot win
    if (have_best) {
        size_t k = std::min(best.size(), st.code.size());
        for (size_t i = 0; i < k; ++i) {
            int c = compare(st.code[i], best[i]);
            if (c < 0) break;
            if (c > 0) return;
        }
    }
    if (st.code.size() == g.edges().size()) {
        if (!have_best || compare(st.code, best) < 0) {
            best = st.code;
            have_best = true;
        }
        return;
    }
    // forward extensions from the deepest stack vertex with an unvisited
    // neighbor; deeper vertices are popped lazily
    while (!stack.empty()) {
        int u = stack.back();
        bool any = false;
        for (auto [w, e] : g.incident(u))
            if (st.ts[w] < 0) any = true;
        if (any) break;
        stack.pop_back();
    }
    if (stack.empty()) return; // disconnected remainder (cannot happen when connected)
    int u = stack.back();
    for (auto [w, fe] : g.incident(u)) {
        if (st.ts[w] >= 0) continue;
        // visit w: forward edge, then all backward edges of w in ascending
        // target timestamp (forced order)
        VisitState saved = st;
        std::vector<int> saved_stack = stack;

        int tw = static_cast<int>(st.order.size());
        st.code.push_back({st.ts[u], tw, g.node_label(u), g.edge(fe).label, g.node_label(w)});
        st.edge_used[fe] = 1;
        st.ts[w] = tw;
        st.order.push_back(w);
        std::vector<std::pair<int, int>> backs; // (target ts, edge)
        for (auto [x, e] : g.incident(w))
            if (!st.edge_used[e] && st.ts[x] >= 0 && x != u) backs.push_back({st.ts[x], e});
        std::sort(backs.begin(), backs.end());
        for (auto [tx, e] : backs) {
            st.code.push_back({tw, tx, g.node_label(w), g.edge(e).label, g.node_label(st.order[tx])});
            st.edge_used[e] = 1;
        }
        stack.push_back(w);
        all_visits(g, st, stack, best, have_best);
        st = saved;
        stack = saved_stack;
    }
}

} // namespace oracle_detail

inline DfsCode min_code_oracle(const LabeledGraph& g) {
    DfsCode best;
    bool have_best = false;
    for (int s = 0; s < g.node_count(); ++s) {
        oracle_detail::VisitState st;
        st.ts.assign(g.node_count(), -1);
        st.edge_used.assign(g.edge_count(), 0);
        st.ts[s] = 0;
        st.order.push_back(s);
        std::vector<int> stack{s};
        oracle_detail::all_visits(g, st, stack, best, have_best);
    }
    return best;
}

// Bijection isomorphism oracle: tries every node permutation. Factorial.
inline bool isomorphic_oracle(const LabeledGraph& a, const LabeledGraph& b) {
    if (a.node_count() != b.node_count() || a.edge_count() != b.edge_count()) return false;
    int n = a.node_count();
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        bool ok = true;
        for (int v = 0; v < n && ok; ++v)
            if (a.node_label(v) != b.node_label(perm[v])) ok = false;
        for (const auto& e : a.edges()) {
            if (!ok) break;
            const std::string* lab = b.edge_label(perm[e.u], perm[e.v]);
            if (!lab || *lab != e.label) ok = false;
        }
        if (ok) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

// Orbit oracle: enumerate every node subset of size 2..4, keep the connected
// ones, classify by edge count and degree multiset.
inline std::vector<std::array<long long, 15>> orbit_oracle(const LabeledGraph& g) {
    std::vector<std::array<long long, 15>> counts(g.node_count());
    int n = g.node_count();
    auto classify = [&](const std::vector<int>& sub) {
        int k = static_cast<int>(sub.size());
        std::vector<int> deg(k, 0);
        int e = 0;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j)
                if (g.has_edge(sub[i], sub[j])) {
                    ++e;
                    ++deg[i];
                    ++deg[j];
                }
        // connectivity of the induced subgraph
        std::vector<char> seen(k, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int reached = 1;
        while (!stack.empty()) {
            int i = stack.back();
            stack.pop_back();
            for (int j = 0; j < k; ++j)
                if (!seen[j] && g.has_edge(sub[i], sub[j])) {
                    seen[j] = 1;
                    ++reached;
                    stack.push_back(j);
                }
        }
        if (reached != k) return;
        int max_deg = *std::max_element(deg.begin(), deg.end());
        for (int i = 0; i < k; ++i) {
            int orbit = -1;
            if (k == 2) orbit = 0;
            else if (k == 3) orbit = e == 3 ? 3 : (deg[i] == 2 ? 2 : 1);
            else if (e == 3) orbit = max_deg == 3 ? (deg[i] == 3 ? 7 : 6) : (deg[i] == 2 ? 5 : 4);
            else if (e == 4) orbit = max_deg == 3 ? (deg[i] == 3 ? 11 : (deg[i] == 2 ? 10 : 9)) : 8;
            else if (e == 5) orbit = deg[i] == 3 ? 13 : 12;
            else orbit = 14;
            ++counts[sub[i]][orbit];
        }
    };
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            classify({a, b});
            for (int c = b + 1; c < n; ++c) {
                classify({a, b, c});
                for (int d = c + 1; d < n; ++d) classify({a, b, c, d});
            }
        }
    return counts;
}

// Central finite-difference check of d(loss)/d(param) for every tracked
// parameter entry. build() must construct the loss from the current
// parameter values. Returns the worst relative error.
//
// A central difference cannot resolve gradients below the evaluation
// roundoff ~ eps * |loss| / h (for a loss of 30 and h = 1e-5 that is already
// ~1e-9), so differences inside that budget count as exact agreement;
// otherwise near-zero true gradients report pure floating-point noise.
//
// A relu kink inside [x-h, x+h] makes the central difference average two
// unrelated one-sided slopes while the analytic gradient is a legitimate
// one-sided derivative. Each entry is therefore probed at three step sizes
// (h, h/3, h/9): if the forward and backward slopes disagree at ANY level, a
// kink sits inside the probed neighborhood and the entry is skipped — a kink
// near the base point contaminates every level's central difference, merely
// diluted below any single-level threshold at the finer ones. The straddle
// test uses only loss evaluations, never the analytic value, so a wrong
// gradient cannot hide behind it; on kink-free entries a wrong gradient
// shows its full deviation at every step size.
inline double gradient_check(std::vector<Var>& params, const std::function<Var()>& build,
                             double h = 1e-5) {
    Var loss = build();
    zero_grad(params);
    backward(loss);
    std::vector<Tensor> grads;
    for (const auto& p : params) grads.push_back(p.grad());

    double base = loss.value().at(0, 0);
    const double steps[] = {h, h / 3.0, h / 9.0};
    double worst = 0.0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& value = params[pi].value();
        for (size_t k = 0; k < value.size(); ++k) {
            double keep = value.v[k];
            double analytic = grads[pi].v[k];
            double best = std::numeric_limits<double>::infinity();
            bool straddled = false;
            for (double hi : steps) {
                value.v[k] = keep + hi;
                double up = build().value().at(0, 0);
                value.v[k] = keep - hi;
                double down = build().value().at(0, 0);
                value.v[k] = keep;
                double fwd = (up - base) / hi;
                double bwd = (base - down) / hi;
                if (std::abs(fwd - bwd) > 0.05 * (std::abs(fwd) + std::abs(bwd) + 1e-3)) {
                    straddled = true;
                    break;
                }
                double numeric = (up - down) / (2.0 * hi);
                double noise =
                    50.0 * std::numeric_limits<double>::epsilon() * std::abs(base) / hi;
                double diff = std::abs(numeric - analytic);
                diff = diff > noise ? diff - noise : 0.0;
                double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
                best = std::min(best, diff / scale);
            }
            if (!straddled && std::isfinite(best)) worst = std::max(worst, best);
        }
    }
    return worst;
}

// Eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations.
inline std::vector<double> symmetric_eigenvalues(std::vector<std::vector<double>> m) {
    int n = static_cast<int>(m.size());
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += m[i][j] * m[i][j];
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(m[p][q]) < 1e-18) continue;
                double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double mkp = m[k][p], mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for (int k = 0; k < n; ++k) {
                    double mpk = m[p][k], mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
    }
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = m[i][i];
    std::sort(eig.begin(), eig.end());
    return eig;
}

} // namespace ggrx::testsupport
