#include "ggrx/metrics.hpp"

#include "ggrx/canonical.hpp"
#include "ggrx/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>

#include <unistd.h>

namespace ggrx {

const char* descriptor_kind_name(DescriptorKind kind) {
    switch (kind) {
    case DescriptorKind::Degree: return "degree";
    case DescriptorKind::Clustering: return "clustering";
    case DescriptorKind::Orbit: return "orbit";
    case DescriptorKind::NodeLabel: return "node_label";
    case DescriptorKind::EdgeLabel: return "edge_label";
    case DescriptorKind::LabelDegree: return "label_degree";
    }
    throw Error("unknown descriptor kind");
}

std::vector<double> clustering_coefficients(const LabeledGraph& g) {
    std::vector<double> out(g.node_count(), 0.0);
    for (int v = 0; v < g.node_count(); ++v) {
        int d = g.degree(v);
        if (d < 2) continue;
        long long links = 0;
        const auto& inc = g.incident(v);
        for (size_t i = 0; i < inc.size(); ++i)
            for (size_t j = i + 1; j < inc.size(); ++j)
                if (g.has_edge(inc[i].first, inc[j].first)) ++links;
        out[v] = 2.0 * static_cast<double>(links) / (static_cast<double>(d) * (d - 1));
    }
    return out;
}

namespace {

// Orbit of each member of a connected induced subgraph on 2..4 nodes, from
// the subgraph's edge count and the member's within-subgraph degree.
void add_orbits(const LabeledGraph& g, const std::vector<int>& sub,
                std::vector<std::array<long long, 15>>& counts) {
    int k = static_cast<int>(sub.size());
    int e = 0;
    std::array<int, 4> deg{};
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j)
            if (g.has_edge(sub[i], sub[j])) {
                ++e;
                ++deg[i];
                ++deg[j];
            }
    int max_deg = *std::max_element(deg.begin(), deg.begin() + k);
    for (int i = 0; i < k; ++i) {
        int orbit;
        if (k == 2) {
            orbit = 0;
        } else if (k == 3) {
            orbit = e == 3 ? 3 : (deg[i] == 2 ? 2 : 1);
        } else if (e == 3) {
            if (max_deg == 3) orbit = deg[i] == 3 ? 7 : 6; // claw
            else orbit = deg[i] == 2 ? 5 : 4;              // path
        } else if (e == 4) {
            if (max_deg == 3) orbit = deg[i] == 3 ? 11 : (deg[i] == 2 ? 10 : 9); // paw
            else orbit = 8;                                                      // cycle
        } else if (e == 5) {
            orbit = deg[i] == 3 ? 13 : 12; // diamond
        } else {
            orbit = 14; // clique
        }
        ++counts[sub[i]][orbit];
    }
}

// Connected-subgraph enumeration: grow from each root using only
// higher-indexed nodes outside the already-reachable frontier, so every
// connected induced subgraph on 2..4 nodes is visited exactly once.
void extend_subgraph(const LabeledGraph& g, int root, std::vector<int>& sub,
                     const std::vector<int>& ext, std::vector<char>& frontier,
                     std::vector<std::array<long long, 15>>& counts) {
    if (sub.size() >= 2) add_orbits(g, sub, counts);
    if (sub.size() == 4) return;
    std::vector<int> rest = ext;
    while (!rest.empty()) {
        int w = rest.back();
        rest.pop_back();
        std::vector<int> added;
        for (auto [u, e] : g.incident(w)) {
            (void)e;
            if (u > root && !frontier[u]) {
                frontier[u] = 1;
                added.push_back(u);
            }
        }
        std::vector<int> next = rest;
        next.insert(next.end(), added.begin(), added.end());
        sub.push_back(w);
        extend_subgraph(g, root, sub, next, frontier, counts);
        sub.pop_back();
        for (int u : added) frontier[u] = 0;
    }
}

} // namespace

std::vector<std::array<long long, 15>> orbit_counts(const LabeledGraph& g) {
    std::vector<std::array<long long, 15>> counts(g.node_count());
    std::vector<char> frontier(g.node_count(), 0);
    for (int v = 0; v < g.node_count(); ++v) {
        std::vector<int> sub{v};
        std::vector<int> ext;
        frontier[v] = 1;
        for (auto [u, e] : g.incident(v)) {
            (void)e;
            if (u > v) {
                frontier[u] = 1;
                ext.push_back(u);
            }
        }
        extend_subgraph(g, v, sub, ext, frontier, counts);
        frontier[v] = 0;
        for (auto [u, e] : g.incident(v)) {
            (void)e;
            if (u > v) frontier[u] = 0;
        }
    }
    return counts;
}

Descriptor descriptor(const LabeledGraph& g, DescriptorKind kind) {
    Descriptor d;
    d.kind = kind;
    int n = g.node_count();
    switch (kind) {
    case DescriptorKind::Degree:
        for (int v = 0; v < n; ++v) d.mass[std::to_string(g.degree(v))] += 1.0 / n;
        break;
    case DescriptorKind::Clustering: {
        auto coeffs = clustering_coefficients(g);
        for (double c : coeffs) {
            int bin = std::min(99, static_cast<int>(c * 100.0));
            d.mass[std::to_string(bin)] += 1.0 / n;
        }
        break;
    }
    case DescriptorKind::Orbit: {
        auto counts = orbit_counts(g);
        std::array<double, 15> mean{};
        for (const auto& c : counts)
            for (int o = 0; o < 15; ++o) mean[o] += static_cast<double>(c[o]);
        double total = 0.0;
        for (double m : mean) total += m;
        if (total > 0.0)
            for (int o = 0; o < 15; ++o)
                if (mean[o] > 0.0) d.mass[std::to_string(o)] = mean[o] / total;
        break;
    }
    case DescriptorKind::NodeLabel:
        for (int v = 0; v < n; ++v) d.mass[g.node_label(v)] += 1.0 / n;
        break;
    case DescriptorKind::EdgeLabel:
        for (const auto& e : g.edges()) d.mass[e.label] += 1.0 / g.edge_count();
        break;
    case DescriptorKind::LabelDegree:
        for (int v = 0; v < n; ++v)
            d.mass[g.node_label(v) + ":" + std::to_string(g.degree(v))] += 1.0 / n;
        break;
    }
    d.empty = d.mass.empty();
    return d;
}

double total_variation(const Descriptor& a, const Descriptor& b) {
    double sum = 0.0;
    auto ia = a.mass.begin();
    auto ib = b.mass.begin();
    while (ia != a.mass.end() || ib != b.mass.end()) {
        if (ib == b.mass.end() || (ia != a.mass.end() && ia->first < ib->first)) {
            sum += std::abs(ia->second);
            ++ia;
        } else if (ia == a.mass.end() || ib->first < ia->first) {
            sum += std::abs(ib->second);
            ++ib;
        } else {
            sum += std::abs(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return 0.5 * sum;
}

namespace {

// Unbiased-estimator MMD from a kernel, clipped at 0 before the square root.
// A singleton on either side falls back to the biased estimator (the
// unbiased one is undefined at n < 2).
double mmd_from_kernel(const std::function<double(int, int)>& kaa,
                       const std::function<double(int, int)>& kbb,
                       const std::function<double(int, int)>& kab, int m, int n) {
    double aa = 0.0, bb = 0.0, ab = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) aa += kaa(i, j);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) bb += kbb(i, j);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) ab += kab(i, j);

    double sq;
    if (m < 2 || n < 2) {
        double daa = 0.0, dbb = 0.0;
        for (int i = 0; i < m; ++i) daa += kaa(i, i);
        for (int i = 0; i < n; ++i) dbb += kbb(i, i);
        sq = (2.0 * aa + daa) / (static_cast<double>(m) * m) +
             (2.0 * bb + dbb) / (static_cast<double>(n) * n) -
             2.0 * ab / (static_cast<double>(m) * n);
    } else {
        sq = 2.0 * aa / (static_cast<double>(m) * (m - 1)) +
             2.0 * bb / (static_cast<double>(n) * (n - 1)) -
             2.0 * ab / (static_cast<double>(m) * n);
    }
    return std::sqrt(std::max(0.0, sq));
}

} // namespace

double mmd(const std::vector<Descriptor>& sample_a, const std::vector<Descriptor>& sample_b,
           const MmdConfig& config) {
    if (sample_a.empty() || sample_b.empty()) throw Error("mmd: empty sample");
    DescriptorKind kind = sample_a.front().kind;
    for (const auto& d : sample_a)
        if (d.kind != kind) throw Error("mmd: descriptor kind mismatch");
    for (const auto& d : sample_b)
        if (d.kind != kind) throw Error("mmd: descriptor kind mismatch");

    double inv = 1.0 / (2.0 * config.sigma * config.sigma);
    auto kernel = [&](const Descriptor& x, const Descriptor& y) {
        double tv = total_variation(x, y);
        return std::exp(-tv * tv * inv);
    };
    return mmd_from_kernel(
        [&](int i, int j) { return kernel(sample_a[i], sample_a[j]); },
        [&](int i, int j) { return kernel(sample_b[i], sample_b[j]); },
        [&](int i, int j) { return kernel(sample_a[i], sample_b[j]); },
        static_cast<int>(sample_a.size()), static_cast<int>(sample_b.size()));
}

std::map<std::string, double> nspdk_features(const LabeledGraph& g, int r_max, int d_max) {
    if (r_max < 0 || d_max < 0) throw Error("nspdk: radius and distance must be non-negative");
    std::map<std::string, double> features;
    int n = g.node_count();
    if (n == 0) return features;
    int horizon = std::max(r_max, d_max);

    // BFS distances up to the horizon, per root.
    std::vector<std::vector<int>> dist(n, std::vector<int>(n, -1));
    for (int s = 0; s < n; ++s) {
        std::deque<int> queue{s};
        dist[s][s] = 0;
        while (!queue.empty()) {
            int v = queue.front();
            queue.pop_front();
            if (dist[s][v] == horizon) continue;
            for (auto [u, e] : g.incident(v)) {
                (void)e;
                if (dist[s][u] < 0) {
                    dist[s][u] = dist[s][v] + 1;
                    queue.push_back(u);
                }
            }
        }
    }

    // Ball certificate: induced subgraph on the radius-r ball around the
    // root, every node label prefixed by its distance to the root. The
    // prefix pins the root, so isomorphic rooted balls share a certificate.
    std::vector<std::vector<std::string>> cert(n, std::vector<std::string>(r_max + 1));
    for (int s = 0; s < n; ++s) {
        for (int r = 0; r <= r_max; ++r) {
            std::vector<int> members;
            for (int v = 0; v < n; ++v)
                if (dist[s][v] >= 0 && dist[s][v] <= r) members.push_back(v);
            LabeledGraph ball = induced_subgraph(g, members);
            std::vector<std::string> labels;
            labels.reserve(members.size());
            for (size_t i = 0; i < members.size(); ++i)
                labels.push_back(std::to_string(dist[s][members[i]]) + ":" +
                                 ball.node_label(static_cast<int>(i)));
            cert[s][r] = graph_certificate(LabeledGraph(std::move(labels), ball.edges()));
        }
    }

    for (int u = 0; u < n; ++u) {
        for (int v = u; v < n; ++v) {
            int d = dist[u][v];
            if (d < 0 || d > d_max) continue;
            for (int r = 0; r <= r_max; ++r) {
                const std::string& a = std::min(cert[u][r], cert[v][r]);
                const std::string& b = std::max(cert[u][r], cert[v][r]);
                std::string key = std::to_string(r) + ";" + std::to_string(d) + ";" +
                                  std::to_string(a.size()) + ":" + a + ";" + b;
                features[key] += 1.0;
            }
        }
    }
    return features;
}

double nspdk_kernel_features(const std::map<std::string, double>& a,
                             const std::map<std::string, double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [k, x] : a) na += x * x;
    for (const auto& [k, x] : b) nb += x * x;
    if (na == 0.0 || nb == 0.0) return (a == b) ? 1.0 : 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->first < ib->first) ++ia;
        else if (ib->first < ia->first) ++ib;
        else {
            dot += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return dot / std::sqrt(na * nb);
}

double nspdk_kernel(const LabeledGraph& a, const LabeledGraph& b, int r_max, int d_max) {
    return nspdk_kernel_features(nspdk_features(a, r_max, d_max),
                                 nspdk_features(b, r_max, d_max));
}

namespace {

struct GraphFeatures {
    std::array<Descriptor, kDescriptorKinds> descriptors;
    std::map<std::string, double> nspdk;
};

GraphFeatures extract_features(const LabeledGraph& g, const EvalProtocol& protocol) {
    GraphFeatures f;
    for (int k = 0; k < kDescriptorKinds; ++k)
        f.descriptors[k] = descriptor(g, static_cast<DescriptorKind>(k));
    f.nspdk = nspdk_features(g, protocol.nspdk_r, protocol.nspdk_d);
    return f;
}

} // namespace

MetricReport evaluate(const std::vector<LabeledGraph>& generated,
                      const std::vector<LabeledGraph>& reference,
                      const std::vector<LabeledGraph>& training, const EvalProtocol& protocol) {
    if (protocol.batch < 1 || protocol.rounds < 1)
        throw Error("evaluate: batch and rounds must be positive");
    size_t needed = static_cast<size_t>(protocol.batch) * protocol.rounds;
    if (generated.size() < needed)
        throw Error("evaluate: insufficient sample: need " + std::to_string(needed) +
                    " generated graphs, have " + std::to_string(generated.size()));
    if (reference.empty()) throw Error("evaluate: empty reference corpus");

    MetricReport report;
    report.batch = protocol.batch;
    report.rounds = protocol.rounds;

    // Features of every graph a round can touch, computed once.
    std::vector<GraphFeatures> gen_features(needed);
    for (size_t i = 0; i < needed; ++i) gen_features[i] = extract_features(generated[i], protocol);
    std::vector<GraphFeatures> ref_features(reference.size());
    for (size_t i = 0; i < reference.size(); ++i)
        ref_features[i] = extract_features(reference[i], protocol);

    bool aligned = reference.size() == generated.size();
    MmdConfig mmd_config{protocol.mmd_sigma};

    for (int round = 0; round < protocol.rounds; ++round) {
        size_t base = static_cast<size_t>(round) * protocol.batch;
        std::vector<size_t> ref_idx;
        if (aligned) {
            for (int i = 0; i < protocol.batch; ++i) ref_idx.push_back(base + i);
        } else {
            Rng rng(derive_seed(protocol.seed, "eval-reference", static_cast<uint64_t>(round)));
            size_t take = std::min(static_cast<size_t>(protocol.batch), reference.size());
            ref_idx = rng.sample_without_replacement(reference.size(), take);
        }

        for (int k = 0; k < kDescriptorKinds; ++k) {
            std::vector<Descriptor> da, db;
            for (int i = 0; i < protocol.batch; ++i)
                da.push_back(gen_features[base + i].descriptors[k]);
            for (size_t i : ref_idx) db.push_back(ref_features[i].descriptors[k]);
            report.mmd_rounds[k].push_back(mmd(da, db, mmd_config));
        }

        auto kernel = [&](const std::map<std::string, double>& x,
                          const std::map<std::string, double>& y) {
            return nspdk_kernel_features(x, y);
        };
        report.nspdk_rounds.push_back(mmd_from_kernel(
            [&](int i, int j) {
                return kernel(gen_features[base + i].nspdk, gen_features[base + j].nspdk);
            },
            [&](int i, int j) {
                return kernel(ref_features[ref_idx[i]].nspdk, ref_features[ref_idx[j]].nspdk);
            },
            [&](int i, int j) {
                return kernel(gen_features[base + i].nspdk, ref_features[ref_idx[j]].nspdk);
            },
            protocol.batch, static_cast<int>(ref_idx.size())));
    }

    for (int k = 0; k < kDescriptorKinds; ++k) {
        double sum = 0.0;
        for (double v : report.mmd_rounds[k]) sum += v;
        report.mmd_mean[k] = sum / protocol.rounds;
    }
    double nsum = 0.0;
    for (double v : report.nspdk_rounds) nsum += v;
    report.nspdk_mean = nsum / protocol.rounds;

    for (const auto& g : generated) {
        report.avg_nodes_gen += g.node_count();
        report.avg_edges_gen += g.edge_count();
    }
    report.avg_nodes_gen /= static_cast<double>(generated.size());
    report.avg_edges_gen /= static_cast<double>(generated.size());
    for (const auto& g : reference) {
        report.avg_nodes_ref += g.node_count();
        report.avg_edges_ref += g.edge_count();
    }
    report.avg_nodes_ref /= static_cast<double>(reference.size());
    report.avg_edges_ref /= static_cast<double>(reference.size());

    std::set<std::string> training_certs;
    for (const auto& g : training) training_certs.insert(graph_certificate(g));
    std::set<std::string> distinct;
    size_t novel = 0;
    for (const auto& g : generated) {
        std::string cert = graph_certificate(g);
        if (!training_certs.count(cert)) ++novel;
        distinct.insert(cert);
    }
    report.novelty_pct = 100.0 * static_cast<double>(novel) / generated.size();
    report.uniqueness_pct = 100.0 * static_cast<double>(distinct.size()) / generated.size();

    if (!protocol.validator_command.empty()) {
        size_t valid = 0;
        for (const auto& g : generated)
            if (run_validator(g, protocol.validator_command)) ++valid;
        report.validity_pct = 100.0 * static_cast<double>(valid) / generated.size();
    }
    return report;
}

namespace {

std::string format_number(double v) {
    std::ostringstream out;
    out << std::setprecision(12) << v;
    return out.str();
}

} // namespace

void write_report_file(const std::string& path, const MetricReport& report) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "batch=" << report.batch << "\n";
    out << "rounds=" << report.rounds << "\n";
    for (int k = 0; k < kDescriptorKinds; ++k) {
        std::string name = descriptor_kind_name(static_cast<DescriptorKind>(k));
        out << "mmd_" << name << "=" << format_number(report.mmd_mean[k]) << "\n";
        for (size_t r = 0; r < report.mmd_rounds[k].size(); ++r)
            out << "mmd_" << name << "_round" << r + 1 << "="
                << format_number(report.mmd_rounds[k][r]) << "\n";
    }
    out << "nspdk=" << format_number(report.nspdk_mean) << "\n";
    for (size_t r = 0; r < report.nspdk_rounds.size(); ++r)
        out << "nspdk_round" << r + 1 << "=" << format_number(report.nspdk_rounds[r]) << "\n";
    out << "avg_nodes_gen=" << format_number(report.avg_nodes_gen) << "\n";
    out << "avg_nodes_ref=" << format_number(report.avg_nodes_ref) << "\n";
    out << "avg_edges_gen=" << format_number(report.avg_edges_gen) << "\n";
    out << "avg_edges_ref=" << format_number(report.avg_edges_ref) << "\n";
    out << "novelty_pct=" << format_number(report.novelty_pct) << "\n";
    out << "uniqueness_pct=" << format_number(report.uniqueness_pct) << "\n";
    if (report.validity_pct) out << "validity_pct=" << format_number(*report.validity_pct) << "\n";
    out.flush();
    if (!out) throw Error("failed writing report '" + path + "'");
}

std::string format_report_table(const MetricReport& report) {
    std::ostringstream out;
    out << std::left;
    auto row = [&](const std::string& name, const std::string& value) {
        out << "  " << std::setw(18) << name << value << "\n";
    };
    out << "metric              value\n";
    const char* pretty[kDescriptorKinds] = {"Degree MMD",     "Clustering MMD", "Orbit MMD",
                                            "Node label MMD", "Edge label MMD", "Label-degree MMD"};
    for (int k = 0; k < kDescriptorKinds; ++k) {
        std::ostringstream v;
        v << std::setprecision(6) << report.mmd_mean[k];
        row(pretty[k], v.str());
    }
    {
        std::ostringstream v;
        v << std::setprecision(6) << report.nspdk_mean;
        row("NSPDK MMD", v.str());
    }
    {
        std::ostringstream v;
        v << std::setprecision(4) << report.avg_nodes_gen << "/" << report.avg_nodes_ref;
        row("Avg nodes", v.str());
    }
    {
        std::ostringstream v;
        v << std::setprecision(4) << report.avg_edges_gen << "/" << report.avg_edges_ref;
        row("Avg edges", v.str());
    }
    {
        std::ostringstream v;
        v << std::setprecision(4) << report.novelty_pct << "%";
        row("Novelty", v.str());
    }
    {
        std::ostringstream v;
        v << std::setprecision(4) << report.uniqueness_pct << "%";
        row("Uniqueness", v.str());
    }
    if (report.validity_pct) {
        std::ostringstream v;
        v << std::setprecision(4) << *report.validity_pct << "%";
        row("Validity", v.str());
    }
    return out.str();
}

bool run_validator(const LabeledGraph& g, const std::string& command) {
    namespace fs = std::filesystem;
    static int counter = 0;
    fs::path tmp = fs::temp_directory_path() /
                   ("ggrx-validate-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter++) + ".txt");
    {
        std::ofstream out(tmp);
        if (!out) throw Error("validator: cannot write temporary file " + tmp.string());
        write_graphs(out, {g});
    }
    std::string full = command + " < " + tmp.string();
    FILE* pipe = popen(full.c_str(), "r");
    if (!pipe) {
        fs::remove(tmp);
        throw Error("validator: cannot run '" + command + "'");
    }
    std::string output;
    char buf[256];
    while (fgets(buf, sizeof buf, pipe)) output += buf;
    int status = pclose(pipe);
    fs::remove(tmp);
    if (status != 0) throw Error("validator: '" + command + "' exited with a failure status");
    std::istringstream in(output);
    std::string verdict;
    in >> verdict;
    if (verdict == "valid") return true;
    if (verdict == "invalid") return false;
    throw Error("validator: expected 'valid' or 'invalid', got '" + verdict + "'");
}

} // namespace ggrx
