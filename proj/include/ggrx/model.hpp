#pragma once

#include "ggrx/autodiff.hpp"
#include "ggrx/canonical.hpp"
#include "ggrx/dataset.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace ggrx {

// One target step of an encoded code: ids into the three alphabets. The
// terminal step carries EOS in all three segments.
struct EncodedStep {
    int t_u = 0;
    int t_v = 0;
    int token = 0;
};

struct EncodedSequence {
    std::vector<EncodedStep> targets; // |code| + 1 steps, EOS last
};

// Step targets are the code triplets followed by the EOS step; the input fed
// at step i is the previous target (SOS at step 0).
EncodedSequence encode_sequence(const ReducedCode& code, const TokenVocabulary& vocab);
ReducedCode decode_sequence(const EncodedSequence& seq, const TokenVocabulary& vocab);

struct ModelConfig {
    int embed = 64;
    int hidden = 128;
    int layers = 4;
    int head_hidden = 128;
    double dropout = 0.2;
};

// Embedding, stacked LSTM, and the three softmax heads over the timestamp and
// token alphabets. All tensors are autodiff parameters.
struct ModelParams {
    ModelConfig config;
    int ts_width = 0;    // timestamp alphabet including EOS and SOS
    int token_width = 0; // token alphabet including EOS and SOS

    Var emb_w, emb_b;
    struct LstmLayer {
        Var w; // input weights, 4*hidden x in
        Var u; // recurrent weights, 4*hidden x hidden
        Var b; // 4*hidden, gate order (input, forget, candidate, output)
    };
    std::vector<LstmLayer> lstm;
    struct Head {
        Var w1, b1, w2, b2;
    };
    Head head_tu, head_tv, head_tau;

    int input_width() const { return 2 * ts_width + token_width; }
    std::vector<Var> parameters() const;
    std::vector<std::pair<std::string, Var>> named_parameters() const;
    size_t parameter_count() const;
};

ModelParams init_model(const ModelConfig& config, int ts_width, int token_width, uint64_t seed);

struct StepOutput {
    std::vector<double> o_tu;
    std::vector<double> o_tv;
    std::vector<double> o_tau;
    std::vector<double> concatenated() const;
};

// Teacher-forced forward pass of one sequence without dropout: per-step head
// distributions and the summed BCE loss against the one-hot targets.
std::pair<std::vector<StepOutput>, double> forward_teacher_forced(const ModelParams& params,
                                                                  const EncodedSequence& seq);

// Batched training loss (summed per sequence, averaged over the batch) as an
// autodiff value. dropout_rng enables training-mode dropout when non-null.
Var training_loss(const ModelParams& params, const std::vector<const EncodedSequence*>& batch,
                  Rng* dropout_rng);

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

// Called after each epoch when set (streaming progress).
using EpochCallback = std::function<void(const EpochLog&)>;

struct TrainConfig {
    int epochs = 0;
    int batch_size = 32;
    uint64_t seed = 0;
    double lr_base = 0.003;
    double decay = 0.3;
    std::vector<int> milestones{100, 200, 400, 800};
    // Stop once train loss < stop_loss_fraction * first-epoch train loss
    // (0 disables early stopping).
    double stop_loss_fraction = 0.0;
    EpochCallback on_epoch;
};

struct TrainResult {
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_val_loss = 0.0;
};

// Minibatch training with the milestone-annealed Adam schedule. params end up
// at the best-validation-loss epoch (with an empty validation set the
// training loss stands in, so the log format stays uniform).
TrainResult train(ModelParams& params, const std::vector<EncodedSequence>& train_set,
                  const std::vector<EncodedSequence>& val_set, const TrainConfig& config);

struct GenerationReport {
    int steps_sampled = 0; // triplets emitted
    int sos_steps = 0;     // sampled SOS ids, fed back but not decodable
    bool truncated = false;
};

// Autoregressive sampling from SOS: each step draws the three head ids
// independently, re-encodes them as the next input, and stops at the first
// EOS in any segment or after max_steps (truncation reported). greedy takes
// the argmax instead of sampling.
std::pair<ReducedCode, GenerationReport> sample(const ModelParams& params,
                                                const TokenVocabulary& vocab, int max_steps,
                                                uint64_t seed, bool greedy = false);

// Checkpoint container: magic "GGRX", version, vocabulary hash, and named
// float32 tensors (model weights plus shape/config metadata).
constexpr uint32_t kCheckpointFormatVersion = 1;

void save_checkpoint(const ModelParams& params, const TokenVocabulary& vocab, long long max_steps,
                     const std::string& path);

struct LoadedCheckpoint {
    ModelParams params;
    long long max_steps = 0;
};

// Rejects files whose vocabulary hash does not match vocab.
LoadedCheckpoint load_checkpoint(const std::string& path, const TokenVocabulary& vocab);

} // namespace ggrx
