#pragma once

#include "ggrx/canonical.hpp"
#include "ggrx/graph.hpp"
#include "ggrx/rng.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ggrx {

// Token table shared by the encoder, the model and every file that stores
// token ids. Tokens are the distinct (l_u, l_e, l_v) triples of a corpus,
// sorted bytewise, so ids are stable across runs. max_nodes bounds the
// timestamp alphabet. EOS and SOS extend each alphabet by two ids.
class TokenVocabulary {
public:
    TokenVocabulary() = default;
    TokenVocabulary(std::vector<std::array<std::string, 3>> tokens, int max_nodes);

    int token_count() const { return static_cast<int>(tokens_.size()); }
    int max_nodes() const { return max_nodes_; }

    int token_eos() const { return token_count(); }
    int token_sos() const { return token_count() + 1; }
    int token_width() const { return token_count() + 2; }

    int ts_eos() const { return max_nodes_; }
    int ts_sos() const { return max_nodes_ + 1; }
    int ts_width() const { return max_nodes_ + 2; }

    const std::array<std::string, 3>& token(int id) const;
    int token_id(const std::array<std::string, 3>& token) const; // -1 when unknown
    int encode_token(const std::array<std::string, 3>& token) const; // throws when unknown
    int encode_timestamp(int t) const;                               // throws out of range

    std::string serialize() const;
    uint64_t hash() const;

private:
    std::vector<std::array<std::string, 3>> tokens_;
    std::map<std::array<std::string, 3>, int> index_;
    int max_nodes_ = 0;
};

// Vocabulary from the reduced codes of a corpus: the distinct tokens in
// byte-lexicographic order, with timestamp alphabet size max_nodes. A code
// referencing a timestamp >= max_nodes is an error.
TokenVocabulary build_vocabulary(const std::vector<ReducedCode>& codes, int max_nodes);

// Vocabulary file:
//   T <max_nodes>
//   <id> <l_u> <l_e> <l_v>        (ids consecutive from 0)
void write_vocabulary_file(const std::string& path, const TokenVocabulary& vocab);
TokenVocabulary read_vocabulary_file(const std::string& path);

// Reduced-code file, one block per graph:
//   # <graph_id>
//   <t_u> <t_v> <token_id>
struct CodeRecord {
    long long graph_id = -1;
    ReducedCode code;
};
void write_code_file(const std::string& path, const std::vector<CodeRecord>& records,
                     const TokenVocabulary& vocab);
std::vector<CodeRecord> read_code_file(const std::string& path, const TokenVocabulary& vocab);

// Deterministic corpus split. Test and validation sizes are the rounded
// fractions; every index lands in exactly one part.
enum class SplitPart { Train, Val, Test };

struct SplitSpec {
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    uint64_t seed = 0;
};

std::vector<SplitPart> split_corpus(size_t count, const SplitSpec& spec);

const char* split_part_name(SplitPart p);

// Split file: "<graph_id> <train|val|test>" per line.
void write_split_file(const std::string& path, const std::vector<long long>& graph_ids,
                      const std::vector<SplitPart>& parts);
std::map<long long, SplitPart> read_split_file(const std::string& path);

// Copy of g with every node label replaced by "<label>:<degree>".
LabeledGraph augment_with_degree(const LabeledGraph& g);

// Node drawn with probability proportional to its degree.
int degree_proportional_node(const LabeledGraph& g, Rng& rng);

// Connected subgraphs sampled by random walk with restart. Each sample picks
// a degree-proportional start node and runs walks_per_sample walks from it;
// a walk takes walk_length steps, where a step traverses (and records) a
// uniform incident edge and then teleports back to the start with probability
// restart_p. The sample is the graph of all recorded edges, nodes renumbered
// in order of first visit.
std::vector<LabeledGraph> sample_subgraphs(const LabeledGraph& g, int count, int walks_per_sample,
                                           double restart_p, uint64_t seed, int walk_length = 30);

} // namespace ggrx
