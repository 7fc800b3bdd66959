#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "latenteval/tensor.hpp"

namespace latenteval {

/// Raised on unparseable or invariant-violating generator files.
struct SpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class NoiseKind { standard_gaussian, uniform_box };

struct NoiseDistribution {
    NoiseKind kind = NoiseKind::standard_gaussian;
    std::size_t dim = 0;
    double lo = 0.0;  // uniform_box support
    double hi = 1.0;

    void validate() const;
};

/// Portable description of a feed-forward generator G: R^latent_dim -> sample
/// space, together with its input noise distribution and the declared output
/// range (whose span is the PSNR peak). Immutable after load; share read-only
/// across workers.
struct GeneratorSpec {
    std::size_t latent_dim = 0;
    std::vector<LayerSpec> layers;
    std::vector<std::size_t> output_shape;  // e.g. {H, W, C}, or {flat_length}
    double output_min = 0.0;
    double output_max = 1.0;
    NoiseDistribution noise;

    std::size_t output_numel() const;
    double peak() const { return output_max - output_min; }

    // checks width chaining, latent_dim/output_shape consistency, noise and
    // per-layer invariants; throws SpecError naming the violated invariant
    void validate() const;
};

/// File format: a versioned JSON document (format tag "evgs.generator/1")
/// with latent_dim, noise, layers (dense weights as plain arrays), output
/// shape and range. Doubles survive save/load bit-exactly.
GeneratorSpec load_spec(const std::filesystem::path& path);
void save_spec(const GeneratorSpec& spec, const std::filesystem::path& path);

// string-level worker functions behind load/save (used by tests and the CLI)
GeneratorSpec spec_from_json_text(const std::string& text, const std::string& context);
std::string spec_to_json_text(const GeneratorSpec& spec);

/// G(z) shaped per output_shape. z length must equal latent_dim.
Tensor generate(const GeneratorSpec& spec, std::span<const double> z);

/// Deterministic iid draws: Gaussian via Box-Muller, uniform via an affine
/// map of unit uniforms. Fixed seed, fixed sequence.
std::vector<std::vector<double>> sample_noise(const NoiseDistribution& dist,
                                              std::uint64_t seed, std::size_t count);

/// Gaussian: -(dim/2) ln(2 pi) - ||z||^2 / 2.
/// Uniform: -dim * ln(hi - lo) inside the box, -inf outside.
double log_density(const NoiseDistribution& dist, std::span<const double> z);

/// Gaussian: ||z||^2 <= dim + delta. Uniform: componentwise box membership
/// (delta unused).
bool in_typical_set(const NoiseDistribution& dist, std::span<const double> z, double delta);

/// Euclidean projection onto the constraint set of in_typical_set: radial
/// rescale onto the sphere of radius sqrt(dim + delta) when outside, or
/// componentwise clamp to the box.
void project_to_typical_set(const NoiseDistribution& dist, std::span<double> z, double delta);

}  // namespace latenteval
