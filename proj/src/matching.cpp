#include "earsift/matching.hpp"

#include "earsift/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace earsift {

const char* strategy_name(Strategy s) {
    return s == Strategy::nn ? "nn" : "ed";
}

Strategy parse_strategy(const std::string& name) {
    if (name == "nn" || name == "NN")
        return Strategy::nn;
    if (name == "ed" || name == "ED")
        return Strategy::ed;
    raise_usage("invalid-parameter", "unknown strategy '" + name + "' (expected nn or ed)");
}

double descriptor_distance(const Keypoint& a, const Keypoint& b) {
    double sq = 0.0;
    for (int i = 0; i < SiftParams::descriptor_size; ++i) {
        const double d = a.descriptor[i] - b.descriptor[i];
        sq += d * d;
    }
    return std::sqrt(sq);
}

Template fuse_template(const std::vector<RegionKeypoints>& kept_regions,
                       const std::string& subject_id, const MixtureModel& model) {
    if (kept_regions.empty())
        raise_data("empty-template", "no kept regions to fuse");

    std::vector<const RegionKeypoints*> ordered;
    ordered.reserve(kept_regions.size());
    for (const RegionKeypoints& r : kept_regions)
        ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const RegionKeypoints* a, const RegionKeypoints* b) {
                         return a->region_index < b->region_index;
                     });

    Template t;
    t.subject_id = subject_id;
    t.source_model = model;
    t.k_count = static_cast<int>(kept_regions.size());
    for (const RegionKeypoints* r : ordered) {
        for (const Keypoint& kp : r->keypoints) {
            t.keypoints.push_back(kp);
            t.region_provenance.push_back(r->region_index);
        }
    }
    if (t.keypoints.empty())
        raise_data("empty-template", "kept regions contain no keypoints");
    return t;
}

namespace {

void finalize(MatchResult& result, std::size_t probe_size, std::size_t ref_size) {
    std::sort(result.pairs.begin(), result.pairs.end(), [](const MatchPair& a, const MatchPair& b) {
        return a.probe_index < b.probe_index;
    });
    result.match_count = static_cast<int>(result.pairs.size());
    double sq = 0.0;
    for (const MatchPair& p : result.pairs)
        sq += p.distance * p.distance;
    result.d_final = std::sqrt(sq);
    const double denom = static_cast<double>(std::min(probe_size, ref_size));
    result.normalized_score = result.pairs.empty() ? 0.0 : result.match_count / denom;
}

void require_nonempty(const Template& probe, const Template& ref) {
    if (probe.keypoints.empty() || ref.keypoints.empty())
        raise_data("empty-template", "matching requires non-empty templates");
}

} // namespace

MatchResult match_nn(const Template& probe, const Template& ref, double ratio) {
    require_nonempty(probe, ref);
    if (!(ratio > 0.0 && ratio < 1.0))
        raise_usage("invalid-parameter", "nn ratio must lie in (0,1)");

    struct Candidate {
        double distance;
        int probe_index;
        int ref_index;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(probe.size());

    for (int i = 0; i < static_cast<int>(probe.size()); ++i) {
        int best_j = -1;
        double best = std::numeric_limits<double>::infinity();
        double second = std::numeric_limits<double>::infinity();
        for (int j = 0; j < static_cast<int>(ref.size()); ++j) {
            const double dist = descriptor_distance(probe.keypoints[i], ref.keypoints[j]);
            if (dist < best) {
                second = best;
                best = dist;
                best_j = j;
            } else if (dist < second) {
                second = dist;
            }
        }
        // multiplicative form: exact duplicates (best = second = 0) pass
        const bool passes = ref.size() == 1 // no second neighbor to compare against
                            || best <= ratio * second;
        if (passes)
            candidates.push_back({best, i, best_j});
    }

    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return std::tie(a.distance, a.probe_index, a.ref_index) <
               std::tie(b.distance, b.probe_index, b.ref_index);
    });

    MatchResult result;
    result.strategy = Strategy::nn;
    std::vector<bool> probe_used(probe.size(), false), ref_used(ref.size(), false);
    for (const Candidate& c : candidates) {
        if (probe_used[c.probe_index] || ref_used[c.ref_index])
            continue;
        probe_used[c.probe_index] = true;
        ref_used[c.ref_index] = true;
        result.pairs.push_back({c.probe_index, c.ref_index, c.distance});
    }
    finalize(result, probe.size(), ref.size());
    return result;
}

MatchResult match_ed(const Template& probe, const Template& ref, double d_abs) {
    require_nonempty(probe, ref);
    if (!(d_abs > 0.0))
        raise_usage("invalid-parameter", "ed distance threshold must be positive");

    const int np = static_cast<int>(probe.size());
    const int nr = static_cast<int>(ref.size());

    // nearest reference per probe and nearest probe per reference
    // (ties resolved toward the lower index)
    std::vector<int> nearest_ref(np, -1);
    std::vector<double> nearest_ref_dist(np, std::numeric_limits<double>::infinity());
    std::vector<int> nearest_probe(nr, -1);
    std::vector<double> nearest_probe_dist(nr, std::numeric_limits<double>::infinity());

    for (int i = 0; i < np; ++i) {
        for (int j = 0; j < nr; ++j) {
            const double dist = descriptor_distance(probe.keypoints[i], ref.keypoints[j]);
            if (dist < nearest_ref_dist[i]) {
                nearest_ref_dist[i] = dist;
                nearest_ref[i] = j;
            }
            if (dist < nearest_probe_dist[j]) {
                nearest_probe_dist[j] = dist;
                nearest_probe[j] = i;
            }
        }
    }

    MatchResult result;
    result.strategy = Strategy::ed;
    for (int i = 0; i < np; ++i) {
        const int j = nearest_ref[i];
        if (j >= 0 && nearest_probe[j] == i && nearest_ref_dist[i] <= d_abs)
            result.pairs.push_back({i, j, nearest_ref_dist[i]});
    }
    finalize(result, probe.size(), ref.size());
    return result;
}

Decision decide(const MatchResult& result, double psi) {
    if (psi < 0.0 || psi > 1.0)
        raise_usage("invalid-parameter", "psi must lie in [0,1]");
    Decision d;
    d.psi = psi;
    d.accept = result.normalized_score >= psi;
    return d;
}

} // namespace earsift
