#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ggrx {

// Flat key=value run settings shared by every command. The key set is
// closed: unknown keys are rejected both in config files and as flag
// overrides. Defaults are the reference hyperparameters.
struct RunConfig {
    // paths
    std::string graphs;
    std::string codes;
    std::string vocab;
    std::string splits;
    std::string checkpoint;
    std::string report;

    uint64_t seed = 0;
    int epochs = 0;
    int batch_size = 32;
    double lr = 0.003;
    std::vector<int> milestones{100, 200, 400, 800};
    double decay = 0.3;
    double dropout = 0.2;
    int embed = 64;
    int hidden = 128;
    int layers = 4;
    int head_hidden = 128;
    int sample_count = 2560;
    int eval_batch = 256;
    int eval_rounds = 10;
    int walk_count = 150;
    double restart_p = 0.15;
    int walk_len = 30;
    int nspdk_r = 2;
    int nspdk_d = 4;
    double mmd_sigma = 1.0;
    long long max_steps = 0; // 0: twice the longest training code

    // Throws on an unknown key or an unparseable value.
    void set(const std::string& key, const std::string& value);
    std::string get(const std::string& key) const;

    static const std::vector<std::string>& keys();

    // Every key in canonical order, one "key=value" line each.
    std::string serialize() const;
};

// Flat key=value lines; blank lines and '#' comments ignored.
RunConfig read_config_file(const std::string& path);

// Apply "--key value" pairs (e.g. leftover command-line tokens) on top of
// file-loaded settings.
void apply_overrides(RunConfig& config, const std::vector<std::string>& args);

} // namespace ggrx
