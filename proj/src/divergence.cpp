#include "earsift/divergence.hpp"

#include "earsift/errors.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>

namespace earsift {

namespace {

double log_det_spd(const Eigen::Matrix3d& m, const char* what) {
    Eigen::LLT<Eigen::Matrix3d> llt(m);
    if (llt.info() != Eigen::Success)
        raise_internal("singular-covariance", what);
    const Eigen::Matrix3d& l = llt.matrixLLT();
    return 2.0 * (std::log(l(0, 0)) + std::log(l(1, 1)) + std::log(l(2, 2)));
}

} // namespace

KlValue gaussian_kl(const GaussianComponent& a, const GaussianComponent& b) {
    // coincident densities: exactly zero, no rounding residue
    if (a.mean == b.mean && a.covariance == b.covariance)
        return KlValue{0.0};

    Eigen::LLT<Eigen::Matrix3d> llt_b(b.covariance);
    if (llt_b.info() != Eigen::Success)
        raise_internal("singular-covariance", "second argument of gaussian_kl");

    const double log_det_a = log_det_spd(a.covariance, "first argument of gaussian_kl");
    const Eigen::Matrix3d& lb = llt_b.matrixLLT();
    const double log_det_b = 2.0 * (std::log(lb(0, 0)) + std::log(lb(1, 1)) + std::log(lb(2, 2)));

    const Eigen::Matrix3d sb_inv_sa = llt_b.solve(a.covariance);
    const Eigen::Vector3d dm = b.mean - a.mean;
    const double mahal = dm.dot(llt_b.solve(dm));

    const double value =
        0.5 * (sb_inv_sa.trace() + mahal - MixtureModel::dim + log_det_b - log_det_a);
    return KlValue{value};
}

std::pair<KlValue, ComponentMatch> mixture_kl(const MixtureModel& p, const MixtureModel& q) {
    ComponentMatch match;
    match.pairs.reserve(p.components.size());
    double total = 0.0;
    for (int i = 0; i < p.size(); ++i) {
        const GaussianComponent& pi = p.components[i];
        int best_j = 0;
        double best_kl = std::numeric_limits<double>::infinity();
        for (int j = 0; j < q.size(); ++j) {
            const double kl = gaussian_kl(pi, q.components[j]).value;
            if (kl < best_kl) {
                best_kl = kl;
                best_j = j;
            }
        }
        const double log_term = std::log(pi.weight / q.components[best_j].weight);
        match.pairs.push_back({i, best_j, best_kl, log_term});
        total += pi.weight * (best_kl + log_term);
    }
    return {KlValue{total}, match};
}

double min_component_kl(const GaussianComponent& region, const MixtureModel& q) {
    double best = std::numeric_limits<double>::infinity();
    for (const GaussianComponent& c : q.components)
        best = std::min(best, gaussian_kl(region, c).value);
    return best;
}

bool consistency_gate(const GaussianComponent& region, const MixtureModel& q, double tau_kl) {
    return min_component_kl(region, q) <= tau_kl;
}

} // namespace earsift
