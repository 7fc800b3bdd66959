#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "latenteval/generator.hpp"
#include "latenteval/histogram.hpp"
#include "latenteval/tensor.hpp"

namespace latenteval {

/// Raised when the inversion objective goes non-finite.
struct DivergenceError : std::runtime_error {
    std::size_t iteration;
    explicit DivergenceError(std::size_t iter)
        : std::runtime_error("objective became non-finite at iteration " +
                             std::to_string(iter)),
          iteration(iter) {}
};

enum class InitScheme { noise_draw, zeros, provided };

struct InversionConfig {
    double learning_rate = 0.005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::size_t max_iterations = 3000;
    // stop when the best-so-far PSNR has improved by less than this over the
    // trailing stop_window iterations
    double stop_tolerance_db = 0.1;
    std::size_t stop_window = 50;
    bool constrained = false;
    double delta = 0.0;
    std::size_t restarts = 1;
    InitScheme init_scheme = InitScheme::noise_draw;
    std::vector<double> z_init;  // used when init_scheme == provided

    void validate() const;
};

struct InversionResult {
    std::vector<double> z_star;
    Tensor x_star;  // generate(spec, z_star), recomputable bit-exactly
    double final_mse = 0.0;
    double final_psnr_db = 0.0;
    double z_norm_sq = 0.0;
    double log_p_z = 0.0;
    std::size_t iterations_used = 0;
    bool converged = false;
    std::vector<double> objective_trace;  // MSE at each evaluated iterate
};

/// Minimize MSE(G(z), target) with Adam. When constrained, the iterate is
/// projected onto the typical set after the init draw and after every step
/// (radial rescale onto the sqrt(dim+delta) sphere for Gaussian noise,
/// componentwise clamp for uniform); Adam moments are not reset on
/// projection. Returns the best iterate seen. Deterministic given the seed.
InversionResult invert(const GeneratorSpec& spec, const Tensor& target,
                       const InversionConfig& config, std::uint64_t seed);

struct RestartOutcome {
    std::vector<InversionResult> runs;  // one per seed, in order
    // G evaluated at the arithmetic mean of the restart solutions (projected
    // first when constrained); iterations_used is 0 for this entry
    InversionResult mean_latent;
};

/// Requires at least two seeds.
RestartOutcome invert_restarts(const GeneratorSpec& spec, const Tensor& target,
                               const InversionConfig& config,
                               std::span<const std::uint64_t> seeds);

enum class InterpMode { linear, polar };

struct InterpPoint {
    double t = 0.0;
    std::vector<double> z;
    Tensor x;
};

/// steps >= 2 points with t = k/(steps-1); endpoints reproduce z_a and z_b
/// exactly. Polar interpolation moves along the great circle through the two
/// directions with linearly interpolated norms, and is rejected for zero or
/// antipodal inputs.
std::vector<InterpPoint> interpolate_latents(const GeneratorSpec& spec,
                                             std::span<const double> z_a,
                                             std::span<const double> z_b,
                                             std::size_t steps, InterpMode mode);

struct TypicalSetReport {
    double mean_log_p_z = 0.0;
    double median_log_p_z = 0.0;
    Histogram z_norm_sq_hist;   // of the inversion results
    Histogram reference_hist;   // fresh prior draws, same bin edges
    double outside_fraction = 0.0;  // ||z*||^2 > dim + delta (+1e-9 slack)
    std::size_t result_count = 0;
    std::size_t reference_count = 0;
};

TypicalSetReport typical_set_report(std::span<const InversionResult> results,
                                    const NoiseDistribution& dist, double delta,
                                    std::size_t reference_draws, std::uint64_t seed,
                                    std::size_t bins = 50);

}  // namespace latenteval
