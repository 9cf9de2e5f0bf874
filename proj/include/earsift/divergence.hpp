#ifndef EARSIFT_DIVERGENCE_HPP
#define EARSIFT_DIVERGENCE_HPP

#include "earsift/mixture.hpp"

#include <utility>
#include <vector>

namespace earsift {

// Raw divergence value. The mixture approximation can dip microscopically
// negative through its log-weight term; reported values clamp at zero while
// the raw value stays available for ordering comparisons.
struct KlValue {
    double value = 0.0;
    double clamped() const { return value < 0.0 ? 0.0 : value; }
};

struct ComponentPair {
    int p_index = 0;
    int q_index = 0;           // argmin over q components (ties: lowest index)
    double kl = 0.0;           // gaussian_kl of the matched pair
    double log_weight_term = 0.0; // log(P_i / Q_j*)
};

struct ComponentMatch {
    std::vector<ComponentPair> pairs; // one per component of p
};

// Closed form for two multivariate normals (weights ignored):
//   1/2 [ tr(Sb^-1 Sa) + (mb-ma)^T Sb^-1 (mb-ma) - p + ln(|Sb|/|Sa|) ]
// Errors: singular-covariance.
KlValue gaussian_kl(const GaussianComponent& a, const GaussianComponent& b);

// Matching-based approximation between mixtures:
//   KL(P||Q) ~= sum_i P_i [ min_j KL(p_i || q_j) + log(P_i / Q_j*) ]
std::pair<KlValue, ComponentMatch> mixture_kl(const MixtureModel& p, const MixtureModel& q);

// min_j gaussian_kl(region, q_j)
double min_component_kl(const GaussianComponent& region, const MixtureModel& q);

// Color-consistency gate: true iff the region's component sits within
// tau_kl of some component of q.
bool consistency_gate(const GaussianComponent& region, const MixtureModel& q, double tau_kl);

} // namespace earsift

#endif
