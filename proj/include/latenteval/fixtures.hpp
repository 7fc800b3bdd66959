#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "latenteval/generator.hpp"

namespace latenteval {

/// A 1D-latent generator mapping [0, 1] onto a polyline in the plane.
///
/// Segment i carries the latent interval [breakpoints[i], breakpoints[i+1]]
/// affinely onto the chord vertices[i] -> vertices[i+1]. A zero-length chord
/// (equal consecutive vertices) is a point mass: that whole latent interval
/// generates one output point. The realized generator extrapolates the end
/// segments linearly outside [0, 1], so unconstrained inversion can leave the
/// noise support while box-constrained inversion cannot.
struct PiecewiseLinearManifold {
    std::vector<double> breakpoints;             // 0 = z_0 < ... < z_n = 1
    std::vector<std::array<double, 2>> vertices; // one per breakpoint

    void validate() const;
    std::size_t segment_count() const { return breakpoints.size() - 1; }

    // direct evaluation (including linear extrapolation outside [0, 1]);
    // the independent reference the relu realization is checked against
    std::array<double, 2> eval(double z) const;
};

/// Realize the polyline as a loadable dense/relu generator with latent_dim 1
/// and uniform_box(0, 1) noise. Reproduces eval() to ~1e-12 everywhere.
GeneratorSpec manifold_to_spec(const PiecewiseLinearManifold& m);

/// Exact latent measure of {z in [0,1] : MSE(G(z), x_center) < mse_ceiling},
/// segment by segment via the quadratic along each chord. Since the latent is
/// uniform on [0,1], this is the exact prior probability of the hit region.
double exact_ball_probability(const PiecewiseLinearManifold& m,
                              std::array<double, 2> x_center, double mse_ceiling);

/// Affine generator G(z) = A z + b with A = Q diag(column_scales), Q having
/// orthonormal columns. Carries its own closed-form least-squares inverse.
struct AffineFixture {
    GeneratorSpec spec;
    std::vector<double> matrix;         // dim_out x dim_in, row-major
    std::vector<double> offset;         // dim_out
    std::vector<double> column_scales;  // dim_in

    // z_ls = diag(1/s^2) A^T (x - b); the exact unconstrained minimizer
    std::vector<double> least_squares(std::span<const double> x) const;
};

/// column_scales empty means all ones (A^T A = I).
AffineFixture affine_fixture(std::size_t dim_in, std::size_t dim_out, std::uint64_t seed,
                             std::span<const double> column_scales = {});

/// Random relu MLP with He-scaled weights (variance 2/fan_in) and a tanh
/// output stage mapped affinely onto output_range. Stands in for a trained
/// generator in smoke tests.
GeneratorSpec random_mlp_fixture(std::size_t dim_in, std::span<const std::size_t> widths,
                                 std::uint64_t seed,
                                 double output_min = 0.0, double output_max = 1.0);

/// Coordinatewise hinge generator G(z)_i = scale*speed*relu(z_i) -
/// speed*relu(-z_i): slope `speed` on the negative side, `scale*speed` on the
/// positive side. Around z = -1 and z = +1 the Jacobians differ by exactly
/// `scale`, giving a closed-form local volume ratio of scale^dim.
GeneratorSpec two_branch_fixture(std::size_t dim, double scale, double speed = 1.0);

/// The worked demo polyline: ten equal-probability latent segments of varied
/// speed, one of them a point mass with latent measure 0.1, plus five probe
/// targets (short-segment, long-segment, point-mass, far off-manifold, and
/// one only reachable through the extrapolated extension past z = 0).
PiecewiseLinearManifold demo_manifold();
std::vector<std::array<double, 2>> demo_targets();

/// Two segments of equal latent measure with speeds 1 and 4; the basic
/// fixture for probability-vs-arc-length checks.
PiecewiseLinearManifold two_segment_manifold(double slow_speed = 1.0, double fast_speed = 4.0);

}  // namespace latenteval
