#include "ggrx/config.hpp"

#include "ggrx/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace ggrx {

namespace {

long long parse_integer(const std::string& key, const std::string& value) {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw Error("config key '" + key + "': expected an integer, got '" + value + "'");
    return out;
}

int parse_int(const std::string& key, const std::string& value) {
    long long v = parse_integer(key, value);
    if (v < -2147483648LL || v > 2147483647LL)
        throw Error("config key '" + key + "': value out of range");
    return static_cast<int>(v);
}

uint64_t parse_u64(const std::string& key, const std::string& value) {
    uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw Error("config key '" + key + "': expected a non-negative integer, got '" + value +
                    "'");
    return out;
}

double parse_real(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        double out = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return out;
    } catch (const std::exception&) {
        throw Error("config key '" + key + "': expected a number, got '" + value + "'");
    }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    if (value.empty()) return out;
    std::istringstream in(value);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_int(key, item));
    return out;
}

std::string format_real(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

} // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    if (key == "graphs") graphs = value;
    else if (key == "codes") codes = value;
    else if (key == "vocab") vocab = value;
    else if (key == "splits") splits = value;
    else if (key == "checkpoint") checkpoint = value;
    else if (key == "report") report = value;
    else if (key == "seed") seed = parse_u64(key, value);
    else if (key == "epochs") epochs = parse_int(key, value);
    else if (key == "batch_size") batch_size = parse_int(key, value);
    else if (key == "lr") lr = parse_real(key, value);
    else if (key == "milestones") milestones = parse_int_list(key, value);
    else if (key == "decay") decay = parse_real(key, value);
    else if (key == "dropout") dropout = parse_real(key, value);
    else if (key == "embed") embed = parse_int(key, value);
    else if (key == "hidden") hidden = parse_int(key, value);
    else if (key == "layers") layers = parse_int(key, value);
    else if (key == "head_hidden") head_hidden = parse_int(key, value);
    else if (key == "sample_count") sample_count = parse_int(key, value);
    else if (key == "eval_batch") eval_batch = parse_int(key, value);
    else if (key == "eval_rounds") eval_rounds = parse_int(key, value);
    else if (key == "walk_count") walk_count = parse_int(key, value);
    else if (key == "restart_p") restart_p = parse_real(key, value);
    else if (key == "walk_len") walk_len = parse_int(key, value);
    else if (key == "nspdk_r") nspdk_r = parse_int(key, value);
    else if (key == "nspdk_d") nspdk_d = parse_int(key, value);
    else if (key == "mmd_sigma") mmd_sigma = parse_real(key, value);
    else if (key == "max_steps") max_steps = parse_integer(key, value);
    else throw Error("unknown config key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const {
    if (key == "graphs") return graphs;
    if (key == "codes") return codes;
    if (key == "vocab") return vocab;
    if (key == "splits") return splits;
    if (key == "checkpoint") return checkpoint;
    if (key == "report") return report;
    if (key == "seed") return std::to_string(seed);
    if (key == "epochs") return std::to_string(epochs);
    if (key == "batch_size") return std::to_string(batch_size);
    if (key == "lr") return format_real(lr);
    if (key == "milestones") {
        std::string out;
        for (size_t i = 0; i < milestones.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(milestones[i]);
        }
        return out;
    }
    if (key == "decay") return format_real(decay);
    if (key == "dropout") return format_real(dropout);
    if (key == "embed") return std::to_string(embed);
    if (key == "hidden") return std::to_string(hidden);
    if (key == "layers") return std::to_string(layers);
    if (key == "head_hidden") return std::to_string(head_hidden);
    if (key == "sample_count") return std::to_string(sample_count);
    if (key == "eval_batch") return std::to_string(eval_batch);
    if (key == "eval_rounds") return std::to_string(eval_rounds);
    if (key == "walk_count") return std::to_string(walk_count);
    if (key == "restart_p") return format_real(restart_p);
    if (key == "walk_len") return std::to_string(walk_len);
    if (key == "nspdk_r") return std::to_string(nspdk_r);
    if (key == "nspdk_d") return std::to_string(nspdk_d);
    if (key == "mmd_sigma") return format_real(mmd_sigma);
    if (key == "max_steps") return std::to_string(max_steps);
    throw Error("unknown config key '" + key + "'");
}

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> all{
        "graphs",      "codes",     "vocab",       "splits",    "checkpoint", "report",
        "seed",        "epochs",    "batch_size",  "lr",        "milestones", "decay",
        "dropout",     "embed",     "hidden",      "layers",    "head_hidden",
        "sample_count", "eval_batch", "eval_rounds", "walk_count", "restart_p", "walk_len",
        "nspdk_r",     "nspdk_d",   "mmd_sigma",   "max_steps"};
    return all;
}

std::string RunConfig::serialize() const {
    std::string out;
    for (const auto& key : keys()) {
        out += key;
        out += "=";
        out += get(key);
        out += "\n";
    }
    return out;
}

RunConfig read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file '" + path + "'");
    RunConfig config;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(path + ":" + std::to_string(line_no) + ": expected key=value");
        std::string key = line.substr(start, eq - start);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        std::string value = line.substr(eq + 1);
        size_t vstart = value.find_first_not_of(" \t");
        value = vstart == std::string::npos ? "" : value.substr(vstart);
        while (!value.empty() && (value.back() == ' ' || value.back() == '\t' ||
                                  value.back() == '\r'))
            value.pop_back();
        try {
            config.set(key, value);
        } catch (const Error& e) {
            throw Error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return config;
}

void apply_overrides(RunConfig& config, const std::vector<std::string>& args) {
    size_t i = 0;
    while (i < args.size()) {
        const std::string& flag = args[i];
        if (flag.size() < 3 || flag.substr(0, 2) != "--")
            throw Error("expected a --key flag, got '" + flag + "'");
        std::string key = flag.substr(2);
        std::string value;
        size_t eq = key.find('=');
        if (eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
            ++i;
        } else {
            if (i + 1 >= args.size()) throw Error("flag '" + flag + "' is missing its value");
            value = args[i + 1];
            i += 2;
        }
        config.set(key, value);
    }
}

} // namespace ggrx
