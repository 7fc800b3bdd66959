#include <doctest.h>

#include <cmath>

#include "latenteval/fixtures.hpp"
#include "latenteval/metrics.hpp"
#include "latenteval/rng.hpp"
#include "oracles.hpp"

using namespace latenteval;

TEST_SUITE("fixtures") {

TEST_CASE("single-segment manifold is the plain affine map") {
    PiecewiseLinearManifold m;
    m.breakpoints = {0.0, 1.0};
    m.vertices = {{0.0, 0.0}, {1.0, 0.0}};
    const GeneratorSpec spec = manifold_to_spec(m);
    const Tensor out = generate(spec, std::vector<double>{0.5});
    CHECK(out.data[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(out.data[1] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("two-segment manifold is continuous at the breakpoint") {
    PiecewiseLinearManifold m;
    m.breakpoints = {0.0, 0.5, 1.0};
    m.vertices = {{0.0, 0.0}, {0.3, 0.4}, {1.0, 0.2}};
    const GeneratorSpec spec = manifold_to_spec(m);
    const Tensor below = generate(spec, std::vector<double>{0.5 - 1e-13});
    const Tensor at = generate(spec, std::vector<double>{0.5});
    CHECK(std::abs(below.data[0] - at.data[0]) <= 1e-12);
    CHECK(std::abs(below.data[1] - at.data[1]) <= 1e-12);
}

TEST_CASE("relu realization matches direct piecewise evaluation on a probe grid") {
    const PiecewiseLinearManifold m = demo_manifold();
    const GeneratorSpec spec = manifold_to_spec(m);
    double worst = 0.0;
    // includes points outside [0,1] to cover the extrapolated ends
    for (int i = 0; i <= 1000; ++i) {
        const double z = -0.3 + 1.6 * static_cast<double>(i) / 1000.0;
        const auto ref = m.eval(z);
        const Tensor out = generate(spec, std::vector<double>{z});
        worst = std::max({worst, std::abs(out.data[0] - ref[0]), std::abs(out.data[1] - ref[1])});
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("point-mass segment maps its whole latent interval to one point") {
    const PiecewiseLinearManifold m = demo_manifold();
    const GeneratorSpec spec = manifold_to_spec(m);
    for (double z : {0.51, 0.55, 0.59}) {
        const Tensor out = generate(spec, std::vector<double>{z});
        CHECK(out.data[0] == doctest::Approx(0.60).epsilon(1e-12));
        CHECK(out.data[1] == doctest::Approx(0.40).epsilon(1e-12));
    }
}

TEST_CASE("ball probability: quadratic solve at a mid-segment point") {
    const PiecewiseLinearManifold m = two_segment_manifold();
    // midpoint of the slow (speed 1) segment; latent half-width is r/speed
    const auto center = m.eval(0.25);
    const double ceiling = 1e-4;  // output radius sqrt(2c)
    const double expected = 2.0 * std::sqrt(2.0 * ceiling) / 1.0;
    const double p = exact_ball_probability(m, center, ceiling);
    CHECK(p == doctest::Approx(expected).epsilon(1e-9));

    // fast segment: a quarter of the measure
    const auto fast_center = m.eval(0.75);
    const double p_fast = exact_ball_probability(m, fast_center, ceiling);
    CHECK(p_fast == doctest::Approx(expected / 4.0).epsilon(1e-9));
}

TEST_CASE("ball probability is zero far from the manifold") {
    CHECK(exact_ball_probability(demo_manifold(), {5.0, 5.0}, 1e-3) == 0.0);
}

TEST_CASE("point-mass probe carries at least its latent measure") {
    const PiecewiseLinearManifold m = demo_manifold();
    CHECK(exact_ball_probability(m, {0.60, 0.40}, 1e-6) >= 0.1);
}

TEST_CASE("ball probability agrees with a dense latent grid") {
    const std::size_t grid_n = 10'000'000;
    const PiecewiseLinearManifold demo = demo_manifold();
    const PiecewiseLinearManifold two_seg = two_segment_manifold();
    struct Probe {
        const PiecewiseLinearManifold* m;
        std::array<double, 2> x;
        double ceiling;
    };
    const Probe probes[] = {
        {&demo, demo.eval(0.25), 1e-4}, {&demo, {0.60, 0.40}, 1e-5},
        {&demo, {0.41, 0.30}, 3e-4},    {&two_seg, two_seg.eval(0.25), 1e-4},
        {&two_seg, two_seg.eval(0.75), 1e-4},
    };
    for (const auto& probe : probes) {
        const double exact = exact_ball_probability(*probe.m, probe.x, probe.ceiling);
        const double grid = oracle::grid_ball_probability(*probe.m, probe.x, probe.ceiling, grid_n);
        CHECK(std::abs(exact - grid) <= 1e-4);
    }
}

TEST_CASE("affine fixture with unit scales has orthonormal columns") {
    const AffineFixture fx = affine_fixture(6, 12, 2025);
    // A^T A == I to 1e-12
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            double dot = 0.0;
            for (std::size_t r = 0; r < 12; ++r)
                dot += fx.matrix[r * 6 + i] * fx.matrix[r * 6 + j];
            CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-12);
        }
    }
}

TEST_CASE("least-squares oracle reconstructs on-manifold targets exactly") {
    const AffineFixture fx = affine_fixture(5, 11, 91);
    Rng rng(4);
    for (int trial = 0; trial < 10; ++trial) {
        const auto z0 = rng.normal_vec(5);
        const Tensor target = generate(fx.spec, z0);
        const auto z_ls = fx.least_squares(target.data);
        const Tensor recon = generate(fx.spec, z_ls);
        CHECK(mse(recon, target) <= 1e-20);
    }
}

TEST_CASE("per-axis scales show up as squared perturbation gains") {
    const std::vector<double> scales = {1.0, 4.0};
    const AffineFixture fx = affine_fixture(2, 6, 17, scales);
    const std::vector<double> z = {0.3, -0.2};
    const Tensor base = generate(fx.spec, z);
    const double t = 1e-3;
    const Tensor bumped_1 = generate(fx.spec, std::vector<double>{z[0] + t, z[1]});
    const Tensor bumped_2 = generate(fx.spec, std::vector<double>{z[0], z[1] + t});
    const double mse_1 = mse(bumped_1, base);
    const double mse_2 = mse(bumped_2, base);
    CHECK(mse_2 / mse_1 == doctest::Approx(16.0).epsilon(1e-9));
}

TEST_CASE("mlp fixture is deterministic and respects its output range") {
    const std::vector<std::size_t> widths = {16, 8};
    const GeneratorSpec a = random_mlp_fixture(6, widths, 123);
    const GeneratorSpec b = random_mlp_fixture(6, widths, 123);
    CHECK(a.layers[0].weight == b.layers[0].weight);

    const GeneratorSpec c = random_mlp_fixture(6, widths, 124, -2.0, 5.0);
    for (const auto& z : sample_noise(c.noise, 31, 1000)) {
        const Tensor out = generate(c, z);
        for (double v : out.data) {
            CHECK(std::isfinite(v));
            CHECK(v > -2.0);
            CHECK(v < 5.0);
        }
    }
}

TEST_CASE("two-branch fixture jacobians differ by the scale factor") {
    const GeneratorSpec spec = two_branch_fixture(2, 4.0);
    const double t = 1e-6;
    // slopes at +1 and -1 along each coordinate
    const Tensor pos = generate(spec, std::vector<double>{1.0, 1.0});
    const Tensor pos_d = generate(spec, std::vector<double>{1.0 + t, 1.0});
    const Tensor neg = generate(spec, std::vector<double>{-1.0, -1.0});
    const Tensor neg_d = generate(spec, std::vector<double>{-1.0 + t, -1.0});
    const double slope_pos = (pos_d.data[0] - pos.data[0]) / t;
    const double slope_neg = (neg_d.data[0] - neg.data[0]) / t;
    CHECK(slope_pos == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(slope_neg == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("manifold validation rejects malformed inputs") {
    PiecewiseLinearManifold m;
    m.breakpoints = {0.0, 0.5};  // does not end at 1
    m.vertices = {{0, 0}, {1, 1}};
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
    m.breakpoints = {0.0, 0.5, 0.5, 1.0};  // not strictly increasing
    m.vertices = {{0, 0}, {1, 1}, {1, 1}, {2, 2}};
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

}  // TEST_SUITE
