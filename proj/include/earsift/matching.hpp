#ifndef EARSIFT_MATCHING_HPP
#define EARSIFT_MATCHING_HPP

#include "earsift/mixture.hpp"
#include "earsift/sift.hpp"

#include <string>
#include <vector>

namespace earsift {

enum class Strategy { nn, ed };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

// Augmented keypoint set: per-region keypoints concatenated in region-index
// order, with the fitted color model they came from.
struct Template {
    std::string subject_id;
    std::vector<Keypoint> keypoints;      // DS
    std::vector<int> region_provenance;   // region index per keypoint
    MixtureModel source_model;
    int k_count = 0;                      // number of kept regions

    std::size_t size() const { return keypoints.size(); }
};

struct MatchPair {
    int probe_index = 0;
    int ref_index = 0;
    double distance = 0.0;
};

struct MatchResult {
    Strategy strategy = Strategy::nn;
    std::vector<MatchPair> pairs; // one-to-one
    int match_count = 0;
    double d_final = 0.0;         // sqrt of summed squared pair distances
    double normalized_score = 0.0; // match_count / min(|probe|, |ref|)
};

struct Decision {
    bool accept = false;
    double psi = 0.0;
    std::string score_used = "normalized_score";
};

// Concatenation fusion of the kept regions' keypoints.
// Errors: empty-template.
Template fuse_template(const std::vector<RegionKeypoints>& kept_regions,
                       const std::string& subject_id, const MixtureModel& model);

// Lowe ratio test against nearest/second-nearest reference descriptors,
// then greedy ascending-distance one-to-one selection.
MatchResult match_nn(const Template& probe, const Template& ref, double ratio);

// Mutual nearest neighbors with an absolute descriptor-distance cap.
MatchResult match_ed(const Template& probe, const Template& ref, double d_abs);

// accept iff normalized_score >= psi
Decision decide(const MatchResult& result, double psi);

double descriptor_distance(const Keypoint& a, const Keypoint& b);

} // namespace earsift

#endif
