#include "ggrx/model.hpp"

#include "ggrx/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

namespace ggrx {

EncodedSequence encode_sequence(const ReducedCode& code, const TokenVocabulary& vocab) {
    EncodedSequence seq;
    seq.targets.reserve(code.size() + 1);
    for (const auto& t : code) {
        seq.targets.push_back({vocab.encode_timestamp(t.t_u), vocab.encode_timestamp(t.t_v),
                               vocab.encode_token(t.token)});
    }
    seq.targets.push_back({vocab.ts_eos(), vocab.ts_eos(), vocab.token_eos()});
    return seq;
}

ReducedCode decode_sequence(const EncodedSequence& seq, const TokenVocabulary& vocab) {
    ReducedCode code;
    if (seq.targets.empty()) throw Error("decode_sequence: sequence has no steps");
    for (size_t i = 0; i + 1 < seq.targets.size(); ++i) {
        const EncodedStep& s = seq.targets[i];
        if (s.t_u >= vocab.max_nodes() || s.t_v >= vocab.max_nodes() ||
            s.token >= vocab.token_count())
            throw Error("decode_sequence: non-terminal step " + std::to_string(i) +
                        " carries a special id");
        code.push_back({s.t_u, s.t_v, vocab.token(s.token)});
    }
    const EncodedStep& last = seq.targets.back();
    if (last.t_u != vocab.ts_eos() || last.t_v != vocab.ts_eos() ||
        last.token != vocab.token_eos())
        throw Error("decode_sequence: final step is not the EOS step");
    return code;
}

std::vector<Var> ModelParams::parameters() const {
    std::vector<Var> out;
    for (const auto& [name, v] : named_parameters()) {
        (void)name;
        out.push_back(v);
    }
    return out;
}

std::vector<std::pair<std::string, Var>> ModelParams::named_parameters() const {
    std::vector<std::pair<std::string, Var>> out;
    out.push_back({"emb.w", emb_w});
    out.push_back({"emb.b", emb_b});
    for (size_t l = 0; l < lstm.size(); ++l) {
        std::string p = "lstm" + std::to_string(l) + ".";
        out.push_back({p + "w", lstm[l].w});
        out.push_back({p + "u", lstm[l].u});
        out.push_back({p + "b", lstm[l].b});
    }
    auto add_head = [&](const char* name, const Head& h) {
        std::string p = name;
        out.push_back({p + ".w1", h.w1});
        out.push_back({p + ".b1", h.b1});
        out.push_back({p + ".w2", h.w2});
        out.push_back({p + ".b2", h.b2});
    };
    add_head("head_tu", head_tu);
    add_head("head_tv", head_tv);
    add_head("head_tau", head_tau);
    return out;
}

size_t ModelParams::parameter_count() const {
    size_t n = 0;
    for (const auto& v : parameters()) n += v.value().size();
    return n;
}

namespace {

Tensor uniform_init(int rows, int cols, int fan_in, Rng& rng) {
    Tensor t(rows, cols);
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : t.v) x = (rng.uniform() * 2.0 - 1.0) * bound;
    return t;
}

} // namespace

ModelParams init_model(const ModelConfig& config, int ts_width, int token_width, uint64_t seed) {
    if (config.embed < 1 || config.hidden < 1 || config.layers < 1 || config.head_hidden < 1)
        throw Error("init_model: dimensions must be positive");
    if (ts_width < 3 || token_width < 3)
        throw Error("init_model: alphabets must hold at least one id plus EOS and SOS");
    ModelParams p;
    p.config = config;
    p.ts_width = ts_width;
    p.token_width = token_width;

    Rng rng(derive_seed(seed, "model-init"));
    int in = p.input_width();
    int h = config.hidden;

    p.emb_w = Var::parameter(uniform_init(config.embed, in, in, rng));
    p.emb_b = Var::parameter(Tensor::zeros(config.embed));

    for (int l = 0; l < config.layers; ++l) {
        int lin = l == 0 ? config.embed : h;
        ModelParams::LstmLayer layer;
        layer.w = Var::parameter(uniform_init(4 * h, lin, lin, rng));
        layer.u = Var::parameter(uniform_init(4 * h, h, h, rng));
        Tensor b = Tensor::zeros(4 * h);
        for (int i = h; i < 2 * h; ++i) b.at(i, 0) = 1.0; // forget gate bias
        layer.b = Var::parameter(std::move(b));
        p.lstm.push_back(std::move(layer));
    }

    auto make_head = [&](int out_width) {
        ModelParams::Head head;
        head.w1 = Var::parameter(uniform_init(config.head_hidden, h, h, rng));
        head.b1 = Var::parameter(Tensor::zeros(config.head_hidden));
        head.w2 = Var::parameter(uniform_init(out_width, config.head_hidden, config.head_hidden, rng));
        head.b2 = Var::parameter(Tensor::zeros(out_width));
        return head;
    };
    p.head_tu = make_head(ts_width);
    p.head_tv = make_head(ts_width);
    p.head_tau = make_head(token_width);
    return p;
}

namespace {

struct LstmStates {
    std::vector<Var> h, c;
};

LstmStates zero_states(const ModelParams& p, int batch) {
    LstmStates s;
    for (int l = 0; l < p.config.layers; ++l) {
        s.h.push_back(Var::constant(Tensor::zeros(p.config.hidden, batch)));
        s.c.push_back(Var::constant(Tensor::zeros(p.config.hidden, batch)));
    }
    return s;
}

std::vector<int> input_hot_cols(const ModelParams& p, const EncodedStep& s) {
    return {s.t_u, p.ts_width + s.t_v, 2 * p.ts_width + s.token};
}

EncodedStep sos_step(const TokenVocabulary& v) {
    return {v.ts_sos(), v.ts_sos(), v.token_sos()};
}

// One time step for a batch: embeds the (multi-hot) inputs, advances the
// LSTM stack, and returns the three head distributions.
std::array<Var, 3> model_step(const ModelParams& p, const std::vector<std::vector<int>>& hots,
                              LstmStates& st, Rng* dropout_rng) {
    Var x = add_col(select_sum_cols(p.emb_w, hots), p.emb_b);
    int h = p.config.hidden;
    for (int l = 0; l < p.config.layers; ++l) {
        const auto& layer = p.lstm[l];
        Var z = add_col(add(matmul(layer.w, x), matmul(layer.u, st.h[l])), layer.b);
        Var gi = sigmoid(slice_rows(z, 0, h));
        Var gf = sigmoid(slice_rows(z, h, h));
        Var gc = tanh_op(slice_rows(z, 2 * h, h));
        Var go = sigmoid(slice_rows(z, 3 * h, h));
        Var c = add(mul(gf, st.c[l]), mul(gi, gc));
        Var hv = mul(go, tanh_op(c));
        st.c[l] = c;
        st.h[l] = hv;
        x = hv;
        if (dropout_rng && l + 1 < p.config.layers && p.config.dropout > 0.0)
            x = dropout(x, p.config.dropout, *dropout_rng);
    }
    auto head = [&](const ModelParams::Head& hd) {
        return softmax_cols(linear(hd.w2, hd.b2, relu(linear(hd.w1, hd.b1, x))));
    };
    return {head(p.head_tu), head(p.head_tv), head(p.head_tau)};
}

Var batch_loss(const ModelParams& p, const std::vector<const EncodedSequence*>& batch,
               Rng* dropout_rng, std::vector<StepOutput>* outputs_of_first) {
    if (batch.empty()) throw Error("training_loss: empty batch");
    int bsz = static_cast<int>(batch.size());
    size_t max_len = 0;
    for (const auto* s : batch) {
        if (s->targets.empty()) throw Error("training_loss: sequence with no steps");
        max_len = std::max(max_len, s->targets.size());
    }

    int sos_tu = p.ts_width - 1, sos_tok = p.token_width - 1;
    LstmStates st = zero_states(p, bsz);
    Var total;
    for (size_t t = 0; t < max_len; ++t) {
        std::vector<std::vector<int>> hots(bsz);
        Tensor target(p.input_width(), bsz);
        std::vector<double> weight(bsz, 0.0);
        for (int b = 0; b < bsz; ++b) {
            const auto& tg = batch[b]->targets;
            if (t >= tg.size()) continue; // padded: zero input, zero weight
            EncodedStep in = t == 0 ? EncodedStep{sos_tu, sos_tu, sos_tok} : tg[t - 1];
            hots[b] = input_hot_cols(p, in);
            target.at(tg[t].t_u, b) = 1.0;
            target.at(p.ts_width + tg[t].t_v, b) = 1.0;
            target.at(2 * p.ts_width + tg[t].token, b) = 1.0;
            weight[b] = 1.0;
        }
        auto probs = model_step(p, hots, st, dropout_rng);
        if (outputs_of_first && t < batch[0]->targets.size()) {
            StepOutput so;
            const Tensor& a = probs[0].value();
            const Tensor& bv = probs[1].value();
            const Tensor& c = probs[2].value();
            for (int i = 0; i < a.rows; ++i) so.o_tu.push_back(a.at(i, 0));
            for (int i = 0; i < bv.rows; ++i) so.o_tv.push_back(bv.at(i, 0));
            for (int i = 0; i < c.rows; ++i) so.o_tau.push_back(c.at(i, 0));
            outputs_of_first->push_back(std::move(so));
        }
        Var step_loss = bce_loss(concat_rows({probs[0], probs[1], probs[2]}), target, weight);
        total = total.defined() ? add(total, step_loss) : step_loss;
    }
    return scale(total, 1.0 / bsz);
}

} // namespace

std::vector<double> StepOutput::concatenated() const {
    std::vector<double> out;
    out.reserve(o_tu.size() + o_tv.size() + o_tau.size());
    out.insert(out.end(), o_tu.begin(), o_tu.end());
    out.insert(out.end(), o_tv.begin(), o_tv.end());
    out.insert(out.end(), o_tau.begin(), o_tau.end());
    return out;
}

std::pair<std::vector<StepOutput>, double> forward_teacher_forced(const ModelParams& params,
                                                                  const EncodedSequence& seq) {
    std::vector<StepOutput> outputs;
    std::vector<const EncodedSequence*> batch{&seq};
    Var loss = batch_loss(params, batch, nullptr, &outputs);
    return {std::move(outputs), loss.value().at(0, 0)};
}

Var training_loss(const ModelParams& params, const std::vector<const EncodedSequence*>& batch,
                  Rng* dropout_rng) {
    return batch_loss(params, batch, dropout_rng, nullptr);
}

namespace {

double dataset_loss(const ModelParams& params, const std::vector<EncodedSequence>& set,
                    int batch_size) {
    double total = 0.0;
    size_t at = 0;
    while (at < set.size()) {
        size_t n = std::min(static_cast<size_t>(batch_size), set.size() - at);
        std::vector<const EncodedSequence*> batch;
        for (size_t i = 0; i < n; ++i) batch.push_back(&set[at + i]);
        total += training_loss(params, batch, nullptr).value().at(0, 0) * static_cast<double>(n);
        at += n;
    }
    return total / static_cast<double>(set.size());
}

std::vector<Tensor> snapshot(const std::vector<Var>& params) {
    std::vector<Tensor> out;
    for (const auto& p : params) out.push_back(p.value());
    return out;
}

void restore(std::vector<Var>& params, const std::vector<Tensor>& snap) {
    for (size_t i = 0; i < params.size(); ++i) params[i].value() = snap[i];
}

} // namespace

TrainResult train(ModelParams& params, const std::vector<EncodedSequence>& train_set,
                  const std::vector<EncodedSequence>& val_set, const TrainConfig& config) {
    if (train_set.empty()) throw Error("train: empty training corpus");
    if (config.batch_size < 1) throw Error("train: batch_size must be positive");

    AdamState opt;
    opt.lr_base = config.lr_base;
    opt.decay = config.decay;
    opt.milestones = config.milestones;

    std::vector<Var> vars = params.parameters();
    TrainResult result;
    result.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<Tensor> best = snapshot(vars);
    double first_loss = 0.0;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        double lr = opt.lr_for_epoch(epoch);
        Rng shuffle_rng(derive_seed(config.seed, "train-shuffle", static_cast<uint64_t>(epoch)));
        Rng dropout_rng(derive_seed(config.seed, "train-dropout", static_cast<uint64_t>(epoch)));
        auto order = shuffle_rng.permutation(train_set.size());

        double epoch_loss = 0.0;
        size_t at = 0;
        while (at < order.size()) {
            size_t n = std::min(static_cast<size_t>(config.batch_size), order.size() - at);
            std::vector<const EncodedSequence*> batch;
            for (size_t i = 0; i < n; ++i) batch.push_back(&train_set[order[at + i]]);
            at += n;

            Var loss = training_loss(params, batch, &dropout_rng);
            epoch_loss += loss.value().at(0, 0) * static_cast<double>(n);
            zero_grad(vars);
            backward(loss);
            adam_step(vars, opt, lr);
        }
        epoch_loss /= static_cast<double>(train_set.size());

        double val_loss =
            val_set.empty() ? epoch_loss : dataset_loss(params, val_set, config.batch_size);
        result.log.push_back({epoch, lr, epoch_loss, val_loss});
        if (config.on_epoch) config.on_epoch(result.log.back());
        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            best = snapshot(vars);
        }
        if (epoch == 1) first_loss = epoch_loss;
        if (config.stop_loss_fraction > 0.0 && epoch_loss < config.stop_loss_fraction * first_loss)
            break;
    }

    if (!result.log.empty()) restore(vars, best);
    return result;
}

std::pair<ReducedCode, GenerationReport> sample(const ModelParams& params,
                                                const TokenVocabulary& vocab, int max_steps,
                                                uint64_t seed, bool greedy) {
    if (params.ts_width != vocab.ts_width() || params.token_width != vocab.token_width())
        throw Error("sample: model alphabets do not match the vocabulary");
    Rng rng(derive_seed(seed, "sample"));
    LstmStates st = zero_states(params, 1);

    ReducedCode code;
    GenerationReport report;
    EncodedStep prev = sos_step(vocab);
    for (int step = 0; step < max_steps; ++step) {
        std::vector<std::vector<int>> hots{input_hot_cols(params, prev)};
        auto probs = model_step(params, hots, st, nullptr);

        auto draw = [&](const Var& p) {
            const Tensor& t = p.value();
            if (greedy) {
                int arg = 0;
                for (int i = 1; i < t.rows; ++i)
                    if (t.at(i, 0) > t.at(arg, 0)) arg = i;
                return arg;
            }
            std::vector<double> w(t.rows);
            for (int i = 0; i < t.rows; ++i) w[i] = t.at(i, 0);
            return static_cast<int>(rng.weighted_index(w));
        };
        int tu = draw(probs[0]);
        int tv = draw(probs[1]);
        int tok = draw(probs[2]);

        if (tu == vocab.ts_eos() || tv == vocab.ts_eos() || tok == vocab.token_eos())
            return {std::move(code), report};

        if (tu == vocab.ts_sos() || tv == vocab.ts_sos() || tok == vocab.token_sos()) {
            // not representable as a triplet; feed it back and move on
            ++report.sos_steps;
        } else {
            code.push_back({tu, tv, vocab.token(tok)});
            ++report.steps_sampled;
        }
        prev = {tu, tv, tok};
    }
    report.truncated = true;
    return {std::move(code), report};
}

namespace {

void put_u32(std::ofstream& out, uint32_t x) {
    unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                          static_cast<unsigned char>(x >> 16), static_cast<unsigned char>(x >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, uint64_t x) {
    put_u32(out, static_cast<uint32_t>(x));
    put_u32(out, static_cast<uint32_t>(x >> 32));
}

uint32_t get_u32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw Error("checkpoint '" + path + "': truncated file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t get_u64(std::ifstream& in, const std::string& path) {
    uint64_t lo = get_u32(in, path);
    uint64_t hi = get_u32(in, path);
    return lo | (hi << 32);
}

void put_f32(std::ofstream& out, float f) {
    uint32_t x;
    std::memcpy(&x, &f, 4);
    put_u32(out, x);
}

float get_f32(std::ifstream& in, const std::string& path) {
    uint32_t x = get_u32(in, path);
    float f;
    std::memcpy(&f, &x, 4);
    return f;
}

constexpr uint32_t kCheckpointVersion = kCheckpointFormatVersion;

void put_tensor(std::ofstream& out, const std::string& name, const Tensor& t) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u32(out, 2);
    put_u32(out, static_cast<uint32_t>(t.rows));
    put_u32(out, static_cast<uint32_t>(t.cols));
    for (double x : t.v) put_f32(out, static_cast<float>(x));
}

} // namespace

void save_checkpoint(const ModelParams& params, const TokenVocabulary& vocab, long long max_steps,
                     const std::string& path) {
    if (params.ts_width != vocab.ts_width() || params.token_width != vocab.token_width())
        throw Error("save_checkpoint: model alphabets do not match the vocabulary");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write("GGRX", 4);
    put_u32(out, kCheckpointVersion);
    put_u64(out, vocab.hash());

    auto named = params.named_parameters();
    put_u32(out, static_cast<uint32_t>(named.size() + 2));
    Tensor meta(6, 1);
    meta.at(0, 0) = params.config.embed;
    meta.at(1, 0) = params.config.hidden;
    meta.at(2, 0) = params.config.layers;
    meta.at(3, 0) = params.config.head_hidden;
    meta.at(4, 0) = params.ts_width;
    meta.at(5, 0) = params.token_width;
    put_tensor(out, "meta.shape", meta);
    Tensor extra(2, 1);
    extra.at(0, 0) = params.config.dropout;
    extra.at(1, 0) = static_cast<double>(max_steps);
    put_tensor(out, "meta.run", extra);
    for (const auto& [name, v] : named) put_tensor(out, name, v.value());
    out.flush();
    if (!out) throw Error("failed writing checkpoint '" + path + "'");
}

LoadedCheckpoint load_checkpoint(const std::string& path, const TokenVocabulary& vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint '" + path + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "GGRX", 4) != 0)
        throw Error("checkpoint '" + path + "': bad magic bytes");
    uint32_t version = get_u32(in, path);
    if (version != kCheckpointVersion)
        throw Error("checkpoint '" + path + "': unsupported version " + std::to_string(version));
    uint64_t hash = get_u64(in, path);
    if (hash != vocab.hash())
        throw Error("checkpoint '" + path + "': vocabulary hash mismatch (file " +
                    std::to_string(hash) + ", vocabulary " + std::to_string(vocab.hash()) + ")");

    uint32_t count = get_u32(in, path);
    std::map<std::string, Tensor> tensors;
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = get_u32(in, path);
        if (name_len > 4096) throw Error("checkpoint '" + path + "': unreasonable tensor name");
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len))
            throw Error("checkpoint '" + path + "': truncated file");
        uint32_t rank = get_u32(in, path);
        if (rank != 2) throw Error("checkpoint '" + path + "': expected rank-2 tensor, got rank " +
                                   std::to_string(rank));
        int rows = static_cast<int>(get_u32(in, path));
        int cols = static_cast<int>(get_u32(in, path));
        Tensor t(rows, cols);
        for (double& x : t.v) x = static_cast<double>(get_f32(in, path));
        tensors.emplace(std::move(name), std::move(t));
    }

    auto need = [&](const std::string& name) -> const Tensor& {
        auto it = tensors.find(name);
        if (it == tensors.end())
            throw Error("checkpoint '" + path + "': missing tensor '" + name + "'");
        return it->second;
    };

    const Tensor& meta = need("meta.shape");
    if (meta.size() != 6) throw Error("checkpoint '" + path + "': malformed meta.shape");
    const Tensor& extra = need("meta.run");
    if (extra.size() != 2) throw Error("checkpoint '" + path + "': malformed meta.run");

    ModelConfig config;
    config.embed = static_cast<int>(meta.at(0, 0));
    config.hidden = static_cast<int>(meta.at(1, 0));
    config.layers = static_cast<int>(meta.at(2, 0));
    config.head_hidden = static_cast<int>(meta.at(3, 0));
    config.dropout = extra.at(0, 0);
    int ts_width = static_cast<int>(meta.at(4, 0));
    int token_width = static_cast<int>(meta.at(5, 0));
    if (ts_width != vocab.ts_width() || token_width != vocab.token_width())
        throw Error("checkpoint '" + path + "': alphabet sizes do not match the vocabulary");

    LoadedCheckpoint loaded;
    loaded.params = init_model(config, ts_width, token_width, 0);
    loaded.max_steps = static_cast<long long>(extra.at(1, 0));
    for (auto& [name, v] : loaded.params.named_parameters()) {
        const Tensor& t = need(name);
        if (!t.same_shape(v.value()))
            throw Error("checkpoint '" + path + "': tensor '" + name + "' has shape " +
                        std::to_string(t.rows) + "x" + std::to_string(t.cols) + ", expected " +
                        std::to_string(v.value().rows) + "x" + std::to_string(v.value().cols));
        v.value() = t;
    }
    return loaded;
}

} // namespace ggrx
