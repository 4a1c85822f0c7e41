#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mpls/model.hpp"

namespace mpls {

/// Synthetic ground truth: a bell, a square and a point source.
///
/// With 1-based index j:
///   beta_j = exp(-0.015 (j - 50)^2)   for 30 < j < 70
///   beta_j = 1                        for 95 < j < 105 and j = 150
///   beta_j = 0                        otherwise
struct SimTruth {
    Vector beta_true;
    std::vector<bool> support;
};

inline SimTruth make_truth(Eigen::Index p)
{
    detail::require(p >= 151, "the default truth needs p >= 151 (point source at j = 150)");
    SimTruth t;
    t.beta_true = Vector::Zero(p);
    for (Eigen::Index j = 1; j <= p; ++j) {
        double v = 0.0;
        if (j > 30 && j < 70) {
            const double d = static_cast<double>(j - 50);
            v = std::exp(-0.015 * d * d);
        } else if ((j > 95 && j < 105) || j == 150) {
            v = 1.0;
        }
        t.beta_true[j - 1] = v;
    }
    t.support.resize(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) t.support[static_cast<std::size_t>(j)] = t.beta_true[j] != 0.0;
    return t;
}

struct SimConfig {
    Eigen::Index p = 200;
    Eigen::Index n = 100;
    std::uint64_t seed = 1;
    double noise_sigma = 1.0;

    void validate() const
    {
        detail::require(n >= 1, "n must be >= 1");
        detail::require(p >= 1, "p must be >= 1");
        detail::require(std::isfinite(noise_sigma) && noise_sigma >= 0.0, "noise_sigma must be finite and >= 0");
    }
};

struct SimSample {
    Problem problem;
    SimTruth truth;
};

/// Draws X (n x p, i.i.d. N(0,1)) and noise (N(0, sigma^2)), then y = X beta + noise.
///
/// Stream: std::mt19937_64 seeded through std::seed_seq{seed low/high words, n};
/// X is filled row by row, the noise drawn afterwards. Normal deviates come
/// from std::normal_distribution, whose algorithm is library-defined; the
/// reference build pins GCC's libstdc++.
inline SimSample generate(const SimConfig& config, const SimTruth& truth)
{
    config.validate();
    detail::require(truth.beta_true.size() == config.p, "truth length must equal p");
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed & 0xffffffffu), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(config.n)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);

    Matrix X(config.n, config.p);
    for (Eigen::Index i = 0; i < config.n; ++i) {
        for (Eigen::Index j = 0; j < config.p; ++j) X(i, j) = normal(rng);
    }
    Vector noise(config.n);
    for (Eigen::Index i = 0; i < config.n; ++i) noise[i] = config.noise_sigma * normal(rng);
    Vector y = X * truth.beta_true + noise;
    return {Problem(std::move(X), std::move(y)), truth};
}

/// 10 log10(||beta||^2 / sigma^2): Var(x^T beta) = ||beta||^2 for standard-normal rows.
inline double theoretical_snr(const SimTruth& truth, double noise_sigma)
{
    detail::require(noise_sigma > 0.0, "noise_sigma must be > 0");
    return 10.0 * std::log10(truth.beta_true.squaredNorm() / (noise_sigma * noise_sigma));
}

/// 10 log10(||X beta||^2 / ||y - X beta||^2) for a generated sample.
inline double empirical_snr(const SimSample& sample)
{
    const Vector signal = sample.problem.X() * sample.truth.beta_true;
    const double noise = (sample.problem.y() - signal).squaredNorm();
    detail::require(noise > 0.0, "empirical SNR is undefined without noise");
    return 10.0 * std::log10(signal.squaredNorm() / noise);
}

}  // namespace mpls
