#ifndef EARSIFT_MIXTURE_HPP
#define EARSIFT_MIXTURE_HPP

#include "earsift/image.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace earsift {

// Unconditional ridge added to every covariance estimate. Cropped ear crops
// contain near-constant skin patches whose scatter would otherwise collapse.
inline constexpr double kCovarianceRidge = 1e-6;

// Weight below which a component is dropped and the rest renormalized.
inline constexpr double kComponentRemovalThreshold = 1e-4;

struct GaussianComponent {
    double weight = 1.0;          // prior probability of the cluster
    Eigen::Vector3d mean{0, 0, 0};
    Eigen::Matrix3d covariance = Eigen::Matrix3d::Identity();
};

struct MixtureModel {
    static constexpr int dim = 3;
    std::vector<GaussianComponent> components;

    int size() const { return static_cast<int>(components.size()); }
};

struct Codebook {
    std::vector<Eigen::Vector3d> centroids;
    std::vector<int> assignment; // centroid index per input sample
    std::vector<double> quantization_error_history;
};

struct FitDiagnostics {
    int iterations = 0;
    std::vector<double> log_likelihood; // value after each EM iteration
    int removed_components = 0;
};

// Lloyd iteration from seeded farthest-point initialization until the
// assignment stops changing (or 100 iterations). Empty clusters are repaired
// by splitting the largest cluster at its farthest member.
// Errors: too-few-samples.
Codebook vq_codebook(const PixelSet& pixels, int k, std::uint64_t seed);

// EM fit initialized from vq_codebook. Stops when the relative
// log-likelihood improvement drops below 1e-6 or after 200 iterations.
// Requires at least 10*k samples. Components whose weight falls below the
// removal threshold are dropped mid-fit and the rest renormalized.
MixtureModel fit_gmm(const PixelSet& pixels, int k, std::uint64_t seed,
                     FitDiagnostics* diagnostics = nullptr);

// Multivariate normal density, p = 3.
// Errors: singular-covariance (internal invariant breach).
double component_density(const GaussianComponent& c, const Eigen::Vector3d& d);
double component_log_density(const GaussianComponent& c, const Eigen::Vector3d& d);

// Factors the covariance once for repeated density evaluations.
class ComponentDensity {
public:
    explicit ComponentDensity(const GaussianComponent& c);
    double log_density(const Eigen::Vector3d& d) const;

private:
    Eigen::Matrix3d inverse_cholesky_; // L^-1 with covariance = L L^T
    Eigen::Vector3d mean_;
    double log_norm_ = 0.0;
};

// f(D) = sum_i P_i f(D|i)
double mixture_density(const MixtureModel& m, const Eigen::Vector3d& d);

// Throws on violated invariants (weights sum, positive definiteness, N range).
void validate_model(const MixtureModel& m);

} // namespace earsift

#endif
