#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "latenteval/generator.hpp"
#include "latenteval/metrics.hpp"

namespace latenteval {

enum class EstimatorKind { direct, isotropic, counting, combined };

/// An unnormalized log marginal likelihood together with the evidence that
/// produced it. All logs are natural; the additive constant depending only on
/// p(z) is omitted throughout, so values are comparable across samples of one
/// generator but carry no absolute meaning.
///
/// log_unnormalized recomputes exactly from the evidence fields:
///   direct:              ln(hits / n_used)
///   counting, combined:  ln(hits / n_used) + dim * ln(sigma_used)
///   isotropic:           dim * ln(sigma_used)   (hits is set to n_used)
/// hits == 0 is reported as a -inf sentinel.
struct LikelihoodEstimate {
    double log_unnormalized = 0.0;
    double sigma_used = 0.0;  // 0 for the direct estimator
    std::size_t n_used = 0;
    std::size_t hits = 0;
    EstimatorKind estimator = EstimatorKind::direct;
    bool saturated = false;  // the schedule ran into the top of the grid
};

/// Geometric grid lo, lo*ratio, lo*ratio^2, ... up to hi.
std::vector<double> geometric_grid(double lo, double hi, double ratio);

struct LikelihoodConfig {
    DistanceThreshold threshold;  // callers build via threshold_from_psnr
    std::size_t n_max = 10000;
    std::size_t n_min_hits = 100;
    std::vector<double> sigma_grid = geometric_grid(1e-4, 1.0, 1.25);
    std::uint64_t seed = 0;

    void validate() const;
};

/// Raw prior-mass probe: the fraction of n fresh draws z_i ~ p(z) whose
/// generated sample lands within the threshold of x_ref. Practical only at
/// tiny latent dimension.
LikelihoodEstimate estimate_direct(const GeneratorSpec& spec, const Tensor& x_ref,
                                   const DistanceThreshold& threshold, std::size_t n,
                                   std::uint64_t seed);

/// Largest isotropic perturbation scale whose mean distortion stays at the
/// threshold: bisects sigma (1% relative tolerance, common random numbers)
/// so that the mean over n draws of MSE(G(z_c), G(z_c + eps)) meets the
/// ceiling, eps ~ N(0, sigma^2 I). Returns dim * ln(sigma_bar).
LikelihoodEstimate estimate_isotropic(const GeneratorSpec& spec,
                                      std::span<const double> z_center,
                                      const DistanceThreshold& threshold, std::size_t n,
                                      std::uint64_t seed, double sigma_lo = 1e-4,
                                      double sigma_hi = 1.0);

/// Fixed-scale counting: hits = #{i : MSE(G(z_c), G(z_c + eps_i)) < ceiling}
/// over n draws eps_i ~ N(0, sigma_eps^2 I). The base draws depend only on
/// the seed, not on sigma_eps, so paired calls at two scales share random
/// numbers and hits is non-increasing in sigma_eps on well-behaved fixtures.
LikelihoodEstimate estimate_counting(const GeneratorSpec& spec,
                                     std::span<const double> z_center,
                                     const DistanceThreshold& threshold, double sigma_eps,
                                     std::size_t n, std::uint64_t seed);

/// The adaptive schedule: walk the sigma grid upward and select the largest
/// sigma whose hit count over n_max draws stays at or above n_min_hits.
/// Level k draws from the substream derive_seed(config.seed, k), so level k
/// reproduces exactly as estimate_counting(..., grid[k], n_max,
/// derive_seed(config.seed, k)). The walk may exit a level early once the
/// pass/fail decision is forced, but the reported evidence always comes from
/// a full n_max pass at the selected sigma. Throws if even the smallest grid
/// value misses the hit floor (start the grid lower).
LikelihoodEstimate estimate_combined(const GeneratorSpec& spec,
                                     std::span<const double> z_center,
                                     const LikelihoodConfig& config);

/// One (sigma, PSNR of the mean distortion) point per grid value, sharing
/// base draws across the grid so the curve is smooth and monotone.
std::vector<std::pair<double, double>> sigma_sweep(const GeneratorSpec& spec,
                                                   std::span<const double> z_center,
                                                   std::span<const double> sigma_grid,
                                                   std::size_t n, std::uint64_t seed);

}  // namespace latenteval
