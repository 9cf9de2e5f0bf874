#include "earsift/mixture.hpp"

#include "earsift/errors.hpp"
#include "earsift/random.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace earsift {

namespace {

constexpr int kMaxLloydIterations = 100;
constexpr int kMaxEmIterations = 200;
constexpr double kEmRelativeTolerance = 1e-6;

double squared_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
    return (a - b).squaredNorm();
}

// index of the nearest centroid, ties to the lowest index
int nearest_centroid(const Eigen::Vector3d& p, const std::vector<Eigen::Vector3d>& centroids) {
    int best = 0;
    double best_d = squared_distance(p, centroids[0]);
    for (int j = 1; j < static_cast<int>(centroids.size()); ++j) {
        const double d = squared_distance(p, centroids[j]);
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

} // namespace

ComponentDensity::ComponentDensity(const GaussianComponent& c) : mean_(c.mean) {
    Eigen::LLT<Eigen::Matrix3d> llt(c.covariance);
    if (llt.info() != Eigen::Success)
        raise_internal("singular-covariance", "component covariance is not positive definite");
    const Eigen::Matrix3d l = llt.matrixL();
    inverse_cholesky_ = l.triangularView<Eigen::Lower>().solve(Eigen::Matrix3d::Identity());
    const double log_det = 2.0 * (std::log(l(0, 0)) + std::log(l(1, 1)) + std::log(l(2, 2)));
    log_norm_ = -0.5 * (MixtureModel::dim * std::log(2.0 * M_PI) + log_det);
}

double ComponentDensity::log_density(const Eigen::Vector3d& d) const {
    const Eigen::Vector3d z = inverse_cholesky_ * (d - mean_);
    return log_norm_ - 0.5 * z.squaredNorm();
}

Codebook vq_codebook(const PixelSet& pixels, int k, std::uint64_t seed) {
    const int n = static_cast<int>(pixels.size());
    if (k < 1)
        raise_usage("invalid-parameter", "k must be >= 1");
    if (n < k)
        raise_data("too-few-samples", "need at least k samples for k clusters");

    std::vector<Eigen::Vector3d> points(n);
    for (int i = 0; i < n; ++i)
        points[i] = pixels.samples[i].color;

    Codebook cb;
    cb.centroids.reserve(k);

    // Farthest-point seeding: random first centroid, then repeatedly the
    // sample farthest from its nearest chosen centroid (ties: lowest index).
    Rng rng(seed);
    cb.centroids.push_back(points[rng.next_below(static_cast<std::uint64_t>(n))]);
    std::vector<double> dist_to_set(n);
    for (int i = 0; i < n; ++i)
        dist_to_set[i] = squared_distance(points[i], cb.centroids[0]);
    while (static_cast<int>(cb.centroids.size()) < k) {
        int far_idx = 0;
        for (int i = 1; i < n; ++i)
            if (dist_to_set[i] > dist_to_set[far_idx])
                far_idx = i;
        cb.centroids.push_back(points[far_idx]);
        for (int i = 0; i < n; ++i)
            dist_to_set[i] = std::min(dist_to_set[i], squared_distance(points[i], cb.centroids.back()));
    }

    cb.assignment.assign(n, -1);
    std::vector<int> counts(k, 0);

    for (int iter = 0; iter < kMaxLloydIterations; ++iter) {
        bool changed = false;
        std::fill(counts.begin(), counts.end(), 0);
        for (int i = 0; i < n; ++i) {
            const int j = nearest_centroid(points[i], cb.centroids);
            if (j != cb.assignment[i]) {
                changed = true;
                cb.assignment[i] = j;
            }
            counts[j]++;
        }

        // Repair empty clusters: re-seed them at the farthest member of the
        // largest cluster, splitting it.
        for (int j = 0; j < k; ++j) {
            while (counts[j] == 0) {
                const int big = static_cast<int>(std::max_element(counts.begin(), counts.end()) -
                                                 counts.begin());
                int far_idx = -1;
                double far_d = -1.0;
                for (int i = 0; i < n; ++i) {
                    if (cb.assignment[i] != big)
                        continue;
                    const double d = squared_distance(points[i], cb.centroids[big]);
                    if (d > far_d) {
                        far_d = d;
                        far_idx = i;
                    }
                }
                cb.centroids[j] = points[far_idx];
                cb.assignment[far_idx] = j;
                counts[big]--;
                counts[j]++;
                changed = true;
            }
        }

        // Update step: every centroid becomes the mean of its members.
        std::vector<Eigen::Vector3d> sums(k, Eigen::Vector3d::Zero());
        for (int i = 0; i < n; ++i)
            sums[cb.assignment[i]] += points[i];
        for (int j = 0; j < k; ++j)
            cb.centroids[j] = sums[j] / counts[j];

        double err = 0.0;
        for (int i = 0; i < n; ++i)
            err += squared_distance(points[i], cb.centroids[cb.assignment[i]]);
        cb.quantization_error_history.push_back(err);

        if (!changed)
            break;
    }
    // Post-update, every centroid is the mean of its members and repair
    // guarantees each owns at least one sample.
    return cb;
}

MixtureModel fit_gmm(const PixelSet& pixels, int k, std::uint64_t seed, FitDiagnostics* diagnostics) {
    const int n = static_cast<int>(pixels.size());
    if (k < 1 || k > 32)
        raise_usage("invalid-parameter", "k must be in [1,32]");
    if (n < 10 * k)
        raise_data("too-few-samples", "need at least 10*k samples to fit " + std::to_string(k) +
                                          " components");

    const Codebook cb = vq_codebook(pixels, k, seed);

    MixtureModel model;
    model.components.resize(k);
    {
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i)
            counts[cb.assignment[i]]++;
        for (int j = 0; j < k; ++j) {
            GaussianComponent& c = model.components[j];
            c.weight = static_cast<double>(counts[j]) / n;
            c.mean = cb.centroids[j];
            Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
            for (int i = 0; i < n; ++i) {
                if (cb.assignment[i] != j)
                    continue;
                const Eigen::Vector3d d = pixels.samples[i].color - c.mean;
                scatter += d * d.transpose();
            }
            c.covariance = scatter / counts[j] + kCovarianceRidge * Eigen::Matrix3d::Identity();
        }
    }

    FitDiagnostics local;
    FitDiagnostics& diag = diagnostics ? *diagnostics : local;
    diag = FitDiagnostics{};

    std::vector<double> resp; // n x N responsibilities, row-major
    double prev_ll = -std::numeric_limits<double>::infinity();
    bool prev_ll_valid = false;
    std::vector<GaussianComponent> prev_components;

    for (int iter = 0; iter < kMaxEmIterations; ++iter) {
        const int N = model.size();
        std::vector<ComponentDensity> solvers;
        solvers.reserve(N);
        std::vector<double> log_weights(N);
        for (int j = 0; j < N; ++j) {
            solvers.emplace_back(model.components[j]);
            log_weights[j] = std::log(model.components[j].weight);
        }

        // E step with log-sum-exp
        resp.assign(static_cast<std::size_t>(n) * N, 0.0);
        double ll = 0.0;
        std::vector<double> lp(N);
        for (int i = 0; i < n; ++i) {
            const Eigen::Vector3d& x = pixels.samples[i].color;
            double lmax = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < N; ++j) {
                lp[j] = log_weights[j] + solvers[j].log_density(x);
                lmax = std::max(lmax, lp[j]);
            }
            double sum = 0.0;
            for (int j = 0; j < N; ++j)
                sum += std::exp(lp[j] - lmax);
            const double lse = lmax + std::log(sum);
            ll += lse;
            for (int j = 0; j < N; ++j)
                resp[static_cast<std::size_t>(i) * N + j] = std::exp(lp[j] - lse);
        }

        // The ridge keeps the M step off the exact Q maximizer, so a step
        // can lower the objective once the fit has plateaued. Keep the
        // previous (better) parameters in that case and stop.
        if (prev_ll_valid && ll < prev_ll) {
            model.components = prev_components;
            break;
        }

        diag.log_likelihood.push_back(ll);
        diag.iterations = iter + 1;

        // M step
        std::vector<double> nk(N, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < N; ++j)
                nk[j] += resp[static_cast<std::size_t>(i) * N + j];

        std::vector<GaussianComponent> updated(N);
        for (int j = 0; j < N; ++j) {
            GaussianComponent& c = updated[j];
            c.weight = nk[j] / n;
            c.mean.setZero();
            for (int i = 0; i < n; ++i)
                c.mean += resp[static_cast<std::size_t>(i) * N + j] * pixels.samples[i].color;
            c.mean /= std::max(nk[j], 1e-300);
            Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
            for (int i = 0; i < n; ++i) {
                const Eigen::Vector3d d = pixels.samples[i].color - c.mean;
                scatter += resp[static_cast<std::size_t>(i) * N + j] * (d * d.transpose());
            }
            c.covariance = scatter / std::max(nk[j], 1e-300) +
                           kCovarianceRidge * Eigen::Matrix3d::Identity();
        }

        // Degenerate-component removal: drop starved components and
        // renormalize. N shrinking is legal; the fit continues.
        std::vector<GaussianComponent> kept;
        kept.reserve(N);
        for (const GaussianComponent& c : updated)
            if (c.weight >= kComponentRemovalThreshold)
                kept.push_back(c);
        const bool removed = static_cast<int>(kept.size()) != N;
        if (kept.empty())
            raise_internal("degenerate-model", "all components starved during EM");
        if (removed) {
            diag.removed_components += N - static_cast<int>(kept.size());
            double wsum = 0.0;
            for (const GaussianComponent& c : kept)
                wsum += c.weight;
            for (GaussianComponent& c : kept)
                c.weight /= wsum;
            model.components = std::move(kept);
            prev_ll_valid = false; // likelihood baseline no longer comparable
            continue;
        }

        {
            double wsum = 0.0;
            for (const GaussianComponent& c : kept)
                wsum += c.weight;
            for (GaussianComponent& c : kept)
                c.weight /= wsum;
        }
        prev_components = std::move(model.components);
        model.components = std::move(kept);

        if (prev_ll_valid) {
            const double rel = (ll - prev_ll) / std::max(std::abs(prev_ll), 1e-12);
            if (rel < kEmRelativeTolerance)
                break;
        }
        prev_ll = ll;
        prev_ll_valid = true;
    }

    validate_model(model);
    return model;
}

double component_log_density(const GaussianComponent& c, const Eigen::Vector3d& d) {
    return ComponentDensity(c).log_density(d);
}

double component_density(const GaussianComponent& c, const Eigen::Vector3d& d) {
    return std::exp(component_log_density(c, d));
}

double mixture_density(const MixtureModel& m, const Eigen::Vector3d& d) {
    double sum = 0.0;
    for (const GaussianComponent& c : m.components)
        sum += c.weight * component_density(c, d);
    return sum;
}

void validate_model(const MixtureModel& m) {
    if (m.size() < 1 || m.size() > 32)
        raise_internal("invalid-model", "component count out of [1,32]");
    double wsum = 0.0;
    for (const GaussianComponent& c : m.components) {
        if (!(c.weight > 0.0) || c.weight > 1.0 + 1e-12)
            raise_internal("invalid-model", "component weight outside (0,1]");
        if ((c.covariance - c.covariance.transpose()).cwiseAbs().maxCoeff() > 1e-9)
            raise_internal("invalid-model", "covariance not symmetric");
        Eigen::LLT<Eigen::Matrix3d> llt(c.covariance);
        if (llt.info() != Eigen::Success)
            raise_internal("invalid-model", "covariance not positive definite");
        wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-9)
        raise_internal("invalid-model", "weights do not sum to 1");
}

} // namespace earsift
