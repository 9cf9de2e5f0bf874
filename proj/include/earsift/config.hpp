#ifndef EARSIFT_CONFIG_HPP
#define EARSIFT_CONFIG_HPP

#include "earsift/matching.hpp"
#include "earsift/sift.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace earsift {

enum class GateMode { reference, global };
enum class SegmentationMode { prior, after };

const char* gate_mode_name(GateMode m);
GateMode parse_gate_mode(const std::string& name);
const char* segmentation_mode_name(SegmentationMode m);
SegmentationMode parse_segmentation_mode(const std::string& name);

struct MatchParams {
    Strategy strategy = Strategy::nn;
    double ratio = 0.8;  // nearest/second-nearest acceptance for NN
    double d_abs = 0.35; // absolute descriptor distance cap for ED
    double psi = 0.25;   // decision threshold; calibrate suggests a value
};

struct Config {
    int k = 5;             // mixture components per image
    double tau_kl = 2.0;   // consistency gate threshold
    double w_min = 0.05;   // minimum region pixel fraction
    std::uint64_t seed = 1;
    GateMode gate_mode = GateMode::reference;
    std::string global_model_path; // template or model file for gate_mode=global
    SiftParams sift;
    MatchParams match;

    void validate() const;

    // FNV-1a over the canonical key=value dump; changes iff a field changes.
    std::string fingerprint() const;

    // Flat "section.key = value" text. Unknown keys are rejected.
    static Config load(const std::filesystem::path& path);
    static Config parse(const std::string& text);
    std::string dump() const;
};

} // namespace earsift

#endif
