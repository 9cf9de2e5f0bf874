#include "earsift/config.hpp"

#include "earsift/errors.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace earsift {

const char* gate_mode_name(GateMode m) {
    return m == GateMode::reference ? "reference" : "global";
}

GateMode parse_gate_mode(const std::string& name) {
    if (name == "reference")
        return GateMode::reference;
    if (name == "global")
        return GateMode::global;
    raise_usage("invalid-parameter", "unknown gate_mode '" + name + "'");
}

const char* segmentation_mode_name(SegmentationMode m) {
    return m == SegmentationMode::prior ? "prior" : "after";
}

SegmentationMode parse_segmentation_mode(const std::string& name) {
    if (name == "prior")
        return SegmentationMode::prior;
    if (name == "after")
        return SegmentationMode::after;
    raise_usage("invalid-parameter", "unknown segmentation mode '" + name + "'");
}

void Config::validate() const {
    if (k < 1 || k > 32)
        raise_usage("invalid-parameter", "k must lie in [1,32]");
    if (!(tau_kl > 0.0))
        raise_usage("invalid-parameter", "tau_kl must be positive");
    if (w_min < 0.0 || w_min >= 1.0)
        raise_usage("invalid-parameter", "w_min must lie in [0,1)");
    if (!(match.ratio > 0.0 && match.ratio < 1.0))
        raise_usage("invalid-parameter", "match.ratio must lie in (0,1)");
    if (!(match.d_abs > 0.0))
        raise_usage("invalid-parameter", "match.d_abs must be positive");
    if (match.psi < 0.0 || match.psi > 1.0)
        raise_usage("invalid-parameter", "match.psi must lie in [0,1]");
    sift.validate();
}

namespace {

std::string format_double(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size())
            throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        raise_data("config-parse", "bad numeric value for " + key + ": '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size())
            throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        raise_data("config-parse", "bad integer value for " + key + ": '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1")
        return true;
    if (value == "false" || value == "0")
        return false;
    raise_data("config-parse", "bad boolean value for " + key + ": '" + value + "'");
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos)
        return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

} // namespace

std::string Config::dump() const {
    std::map<std::string, std::string> kv;
    kv["k"] = std::to_string(k);
    kv["tau_kl"] = format_double(tau_kl);
    kv["w_min"] = format_double(w_min);
    kv["seed"] = std::to_string(seed);
    kv["gate_mode"] = gate_mode_name(gate_mode);
    kv["gate.global_model"] = global_model_path;
    kv["sift.octaves"] = std::to_string(sift.octaves);
    kv["sift.scales_per_octave"] = std::to_string(sift.scales_per_octave);
    kv["sift.sigma0"] = format_double(sift.base_sigma);
    kv["sift.initial_upsample"] = sift.initial_upsample ? "true" : "false";
    kv["sift.contrast_threshold"] = format_double(sift.contrast_threshold);
    kv["sift.edge_ratio"] = format_double(sift.edge_ratio);
    kv["sift.orientation_bins"] = std::to_string(sift.orientation_bins);
    kv["sift.peak_ratio"] = format_double(sift.peak_ratio);
    kv["sift.descriptor_clamp"] = format_double(sift.descriptor_clamp);
    kv["match.strategy"] = strategy_name(match.strategy);
    kv["match.ratio"] = format_double(match.ratio);
    kv["match.d_abs"] = format_double(match.d_abs);
    kv["match.psi"] = format_double(match.psi);

    std::ostringstream out;
    for (const auto& [key, value] : kv)
        out << key << " = " << value << "\n";
    return out.str();
}

Config Config::parse(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            raise_data("config-parse",
                       "line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "k")
            cfg.k = static_cast<int>(parse_int(key, value));
        else if (key == "tau_kl")
            cfg.tau_kl = parse_double(key, value);
        else if (key == "w_min")
            cfg.w_min = parse_double(key, value);
        else if (key == "seed")
            cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
        else if (key == "gate_mode")
            cfg.gate_mode = parse_gate_mode(value);
        else if (key == "gate.global_model")
            cfg.global_model_path = value;
        else if (key == "sift.octaves")
            cfg.sift.octaves = static_cast<int>(parse_int(key, value));
        else if (key == "sift.scales_per_octave")
            cfg.sift.scales_per_octave = static_cast<int>(parse_int(key, value));
        else if (key == "sift.sigma0")
            cfg.sift.base_sigma = parse_double(key, value);
        else if (key == "sift.initial_upsample")
            cfg.sift.initial_upsample = parse_bool(key, value);
        else if (key == "sift.contrast_threshold")
            cfg.sift.contrast_threshold = parse_double(key, value);
        else if (key == "sift.edge_ratio")
            cfg.sift.edge_ratio = parse_double(key, value);
        else if (key == "sift.orientation_bins")
            cfg.sift.orientation_bins = static_cast<int>(parse_int(key, value));
        else if (key == "sift.peak_ratio")
            cfg.sift.peak_ratio = parse_double(key, value);
        else if (key == "sift.descriptor_clamp")
            cfg.sift.descriptor_clamp = parse_double(key, value);
        else if (key == "match.strategy")
            cfg.match.strategy = parse_strategy(value);
        else if (key == "match.ratio")
            cfg.match.ratio = parse_double(key, value);
        else if (key == "match.d_abs")
            cfg.match.d_abs = parse_double(key, value);
        else if (key == "match.psi")
            cfg.match.psi = parse_double(key, value);
        else
            raise_data("config-parse", "unknown config key '" + key + "'");
    }
    cfg.validate();
    return cfg;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        raise_io("file-not-found", "cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string Config::fingerprint() const {
    const std::string canonical = dump();
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, hash);
    return buf;
}

} // namespace earsift
