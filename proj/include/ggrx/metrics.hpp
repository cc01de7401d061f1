#pragma once

#include "ggrx/graph.hpp"
#include "ggrx/rng.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ggrx {

enum class DescriptorKind {
    Degree,
    Clustering,
    Orbit,
    NodeLabel,
    EdgeLabel,
    LabelDegree,
};

constexpr int kDescriptorKinds = 6;

const char* descriptor_kind_name(DescriptorKind kind);

// Normalized histogram over string-keyed bins. A graph that contributes no
// mass for a kind (no edges for edge_label, no orbits, no nodes) yields the
// flagged all-zero descriptor.
struct Descriptor {
    DescriptorKind kind = DescriptorKind::Degree;
    std::map<std::string, double> mass;
    bool empty = false;
};

// degree      histogram of node degrees
// clustering  local clustering coefficients over 100 uniform bins on [0, 1]
//             (nodes of degree < 2 count as coefficient 0)
// orbit       mean per-node counts of the 15 orbits of connected graphlets
//             on 2..4 nodes, normalized to unit mass
// node_label  node label frequencies
// edge_label  edge label frequencies
// label_degree joint "<label>:<degree>" frequencies
Descriptor descriptor(const LabeledGraph& g, DescriptorKind kind);

// Local clustering coefficient per node; degree < 2 yields 0.
std::vector<double> clustering_coefficients(const LabeledGraph& g);

// Per-node counts of the 15 connected-graphlet orbits (2..4 nodes), in the
// standard orbit-counting order: 0 edge; 1-2 path ends/middle; 3 triangle;
// 4-5 four-path ends/middle; 6-7 claw leaves/center; 8 four-cycle; 9-11
// paw pendant/rim/junction; 12-13 diamond rim/hub; 14 four-clique.
std::vector<std::array<long long, 15>> orbit_counts(const LabeledGraph& g);

// Half the L1 distance between the two histograms (union of keys).
double total_variation(const Descriptor& a, const Descriptor& b);

struct MmdConfig {
    double sigma = 1.0; // bandwidth of exp(-tv^2 / (2 sigma^2))
};

// Unbiased-estimator MMD between descriptor samples of one kind under the
// Gaussian total-variation kernel, clipped at 0 and square-rooted. With a
// singleton on either side the biased estimator stands in. Throws on a kind
// mismatch or an empty sample.
double mmd(const std::vector<Descriptor>& sample_a, const std::vector<Descriptor>& sample_b,
           const MmdConfig& config = {});

// Sparse feature map of (radius, distance, root-pair certificate) counts:
// one feature per node pair at shortest-path distance d <= d_max and radius
// r <= r_max, the pair named by the canonical certificates of the two
// radius-r balls with every node label prefixed by its distance to the root.
std::map<std::string, double> nspdk_features(const LabeledGraph& g, int r_max, int d_max);

// Normalized feature dot product in [0, 1]; k(g, g) = 1.
double nspdk_kernel(const LabeledGraph& a, const LabeledGraph& b, int r_max, int d_max);
double nspdk_kernel_features(const std::map<std::string, double>& a,
                             const std::map<std::string, double>& b);

struct EvalProtocol {
    int batch = 256;
    int rounds = 10;
    uint64_t seed = 0;
    double mmd_sigma = 1.0;
    int nspdk_r = 2;
    int nspdk_d = 4;
    std::string validator_command; // empty: skip the validity column
};

struct MetricReport {
    int batch = 0;
    int rounds = 0;
    // index: DescriptorKind order; one value per round, plus the mean
    std::array<std::vector<double>, kDescriptorKinds> mmd_rounds;
    std::array<double, kDescriptorKinds> mmd_mean{};
    std::vector<double> nspdk_rounds;
    double nspdk_mean = 0.0;
    double avg_nodes_gen = 0.0, avg_nodes_ref = 0.0;
    double avg_edges_gen = 0.0, avg_edges_ref = 0.0;
    double novelty_pct = 0.0;
    double uniqueness_pct = 0.0;
    std::optional<double> validity_pct;
};

// Round-based comparison: round i scores generated[i*batch, (i+1)*batch)
// against the aligned reference slice when the two corpora have equal size,
// otherwise against a seeded random reference subset. Novelty counts
// generated graphs whose certificate never occurs in `training`; uniqueness
// counts distinct certificates within `generated`.
MetricReport evaluate(const std::vector<LabeledGraph>& generated,
                      const std::vector<LabeledGraph>& reference,
                      const std::vector<LabeledGraph>& training, const EvalProtocol& protocol);

// Flat key=value report file (per-round values and means).
void write_report_file(const std::string& path, const MetricReport& report);

// Human-readable table of the means.
std::string format_report_table(const MetricReport& report);

// External validity hook: feeds the graph in transaction format to the
// command's standard input and reads `valid` or `invalid` from its output.
bool run_validator(const LabeledGraph& g, const std::string& command);

} // namespace ggrx
