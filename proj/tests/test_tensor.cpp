#include <doctest.h>

#include <cmath>

#include "latenteval/fixtures.hpp"
#include "latenteval/rng.hpp"
#include "latenteval/tensor.hpp"
#include "oracles.hpp"

using namespace latenteval;

namespace {

std::vector<LayerSpec> identity_net() {
    return {LayerSpec::activation_layer(Activation::identity)};
}

// small random relu net used in several gradient checks
std::vector<LayerSpec> random_net(std::size_t dim_in, std::vector<std::size_t> widths,
                                  std::uint64_t seed) {
    Rng rng(seed);
    std::vector<LayerSpec> layers;
    std::size_t fan_in = dim_in;
    for (std::size_t li = 0; li < widths.size(); ++li) {
        std::vector<double> w(widths[li] * fan_in), b(widths[li]);
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (double& v : w) v = stddev * rng.normal();
        for (double& v : b) v = 0.1 * rng.normal();
        layers.push_back(LayerSpec::dense(widths[li], fan_in, std::move(w), std::move(b)));
        if (li + 1 < widths.size())
            layers.push_back(LayerSpec::activation_layer(Activation::relu));
        fan_in = widths[li];
    }
    layers.push_back(LayerSpec::activation_layer(Activation::tanh));
    return layers;
}

}  // namespace

TEST_SUITE("tensor") {

TEST_CASE("tensor shape invariant is enforced") {
    CHECK_THROWS_AS(Tensor({2, 3}, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(Tensor({0}, {}), std::invalid_argument);
    const Tensor t({2, 3}, std::vector<double>(6, 1.0));
    CHECK(t.numel() == 6);
}

TEST_CASE("forward through a single identity activation") {
    const auto layers = identity_net();
    const Tensor out = forward(layers, Tensor::vec({1.0, 2.0, 3.0}));
    CHECK(out.data == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("forward through one dense layer is plain matrix-vector arithmetic") {
    const std::vector<LayerSpec> layers = {
        LayerSpec::dense(2, 2, {2.0, 0.0, 0.0, 3.0}, {1.0, 1.0})};
    const Tensor out = forward(layers, Tensor::vec({1.0, 1.0}));
    CHECK(out.data[0] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(out.data[1] == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("forward matches an independent straight-line evaluation") {
    // two-layer relu net with fixed small weights, evaluated by hand below
    const std::vector<LayerSpec> layers = {
        LayerSpec::dense(3, 2, {1.0, -1.0, 0.5, 0.25, -0.5, 2.0}, {0.1, -0.2, 0.0}),
        LayerSpec::activation_layer(Activation::relu),
        LayerSpec::dense(2, 3, {1.0, 2.0, -1.0, 0.0, 1.0, 1.0}, {0.0, 0.5}),
    };
    const std::vector<double> z = {0.7, -0.3};

    // straight-line re-evaluation, no loops shared with the library
    const double h0 = 1.0 * z[0] + (-1.0) * z[1] + 0.1;
    const double h1 = 0.5 * z[0] + 0.25 * z[1] + (-0.2);
    const double h2 = (-0.5) * z[0] + 2.0 * z[1] + 0.0;
    const double r0 = h0 > 0 ? h0 : 0, r1 = h1 > 0 ? h1 : 0, r2 = h2 > 0 ? h2 : 0;
    const double o0 = 1.0 * r0 + 2.0 * r1 + (-1.0) * r2;
    const double o1 = 0.0 * r0 + 1.0 * r1 + 1.0 * r2 + 0.5;

    const Tensor out = forward(layers, Tensor::vec(z));
    CHECK(out.data[0] == doctest::Approx(o0).epsilon(1e-15));
    CHECK(out.data[1] == doctest::Approx(o1).epsilon(1e-15));
}

TEST_CASE("forward is pure: identical inputs give bit-identical outputs") {
    const auto layers = random_net(4, {8, 8, 3}, 11);
    const Tensor z = Tensor::vec({0.3, -1.2, 0.8, 0.05});
    const Tensor a = forward(layers, z);
    const Tensor b = forward(layers, z);
    CHECK(a.data == b.data);
}

TEST_CASE("dimension mismatch names the offending layer") {
    const std::vector<LayerSpec> layers = {
        LayerSpec::dense(2, 3, std::vector<double>(6, 1.0), {0.0, 0.0}),
        LayerSpec::dense(2, 4, std::vector<double>(8, 1.0), {0.0, 0.0}),
    };
    CHECK_THROWS_WITH_AS(forward(layers, Tensor::vec({1.0, 2.0, 3.0})),
                         doctest::Contains("layer 1"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(forward(layers, Tensor::vec({1.0})),
                         doctest::Contains("layer 0"), std::invalid_argument);
}

TEST_CASE("grad_input through the identity is the cotangent itself") {
    const auto layers = identity_net();
    const Tensor c = Tensor::vec({0.5, -2.0, 3.0});
    const Tensor g = grad_input(layers, Tensor::vec({1.0, 1.0, 1.0}), c);
    CHECK(g.data == c.data);
}

TEST_CASE("grad_input through a dense layer is the linear-map adjoint") {
    const std::vector<double> w = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};  // 2x3
    const std::vector<LayerSpec> layers = {LayerSpec::dense(2, 3, w, {0.0, 0.0})};
    const std::vector<double> c = {2.0, -1.0};
    const Tensor g = grad_input(layers, Tensor::vec({0.0, 0.0, 0.0}), Tensor::vec(c));
    // W^T c computed by hand
    CHECK(g.data[0] == doctest::Approx(1.0 * 2 + 4.0 * -1).epsilon(1e-15));
    CHECK(g.data[1] == doctest::Approx(2.0 * 2 + 5.0 * -1).epsilon(1e-15));
    CHECK(g.data[2] == doctest::Approx(3.0 * 2 + 6.0 * -1).epsilon(1e-15));
}

TEST_CASE("grad_input rejects a cotangent of the wrong length") {
    const auto layers = identity_net();
    CHECK_THROWS_AS(grad_input(layers, Tensor::vec({1.0, 2.0}), Tensor::vec({1.0})),
                    std::invalid_argument);
}

TEST_CASE("grad_input matches central finite differences on a random 3-layer net") {
    const auto layers = random_net(5, {12, 9, 4}, 23);
    Rng rng(99);
    const auto z = rng.normal_vec(5);
    REQUIRE_FALSE(oracle::near_relu_kink(layers, z, 1e-4));
    const auto c = rng.normal_vec(4);

    const Tensor ad = grad_input(layers, Tensor::vec(z), Tensor::vec(c));
    const auto fd = oracle::fd_gradient(
        [&](std::span<const double> p) {
            const Tensor out = forward(layers, Tensor::vec({p.begin(), p.end()}));
            double dot = 0.0;
            for (std::size_t i = 0; i < c.size(); ++i) dot += c[i] * out.data[i];
            return dot;
        },
        z, 1e-5);
    for (std::size_t i = 0; i < z.size(); ++i)
        CHECK(oracle::rel_err(ad.data[i], fd[i]) <= 1e-4);
}

TEST_CASE("gradient property: 100 random nets vs finite differences") {
    Rng meta(7);
    std::size_t checked = 0;
    for (std::uint64_t trial = 0; checked < 100; ++trial) {
        const std::size_t dim = 2 + static_cast<std::size_t>(meta.uniform() * 6);
        std::vector<std::size_t> widths;
        const std::size_t depth = 1 + static_cast<std::size_t>(meta.uniform() * 3);
        for (std::size_t i = 0; i < depth; ++i)
            widths.push_back(2 + static_cast<std::size_t>(meta.uniform() * 30));
        const auto layers = random_net(dim, widths, derive_seed(1234, trial));

        Rng rng(derive_seed(5678, trial));
        const auto z = rng.normal_vec(dim);
        if (oracle::near_relu_kink(layers, z, 1e-4)) continue;
        const auto c = rng.normal_vec(widths.back());
        ++checked;

        const Tensor ad = grad_input(layers, Tensor::vec(z), Tensor::vec(c));
        const auto fd = oracle::fd_gradient(
            [&](std::span<const double> p) {
                const Tensor out = forward(layers, Tensor::vec({p.begin(), p.end()}));
                double dot = 0.0;
                for (std::size_t i = 0; i < c.size(); ++i) dot += c[i] * out.data[i];
                return dot;
            },
            z, 1e-5);
        double worst = 0.0;
        for (std::size_t i = 0; i < dim; ++i)
            worst = std::max(worst, oracle::rel_err(ad.data[i], fd[i]));
        CHECK(worst <= 1e-4);
    }
}

TEST_CASE("objective is zero with zero gradient at a perfect fit") {
    const auto layers = random_net(3, {6, 4}, 31);
    const std::vector<double> z = {0.2, -0.4, 1.1};
    const Tensor target = forward(layers, Tensor::vec(z));
    const auto [f, g] = objective_and_grad(layers, Tensor::vec(z), target);
    CHECK(f == 0.0);
    for (double v : g.data) CHECK(v == 0.0);
}

TEST_CASE("objective hand example: identity net") {
    const auto layers = identity_net();
    const auto [f, g] =
        objective_and_grad(layers, Tensor::vec({1.0, 0.0}), Tensor::vec({0.0, 0.0}));
    CHECK(f == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g.data[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g.data[1] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("objective gradient matches finite differences of the scalar objective") {
    const auto layers = random_net(4, {10, 6, 5}, 57);
    Rng rng(3);
    const auto z = rng.normal_vec(4);
    REQUIRE_FALSE(oracle::near_relu_kink(layers, z, 1e-4));
    const auto target = rng.normal_vec(5);

    const auto [f, ad] = objective_and_grad(layers, Tensor::vec(z), Tensor::vec(target));
    CHECK(f >= 0.0);
    const auto fd = oracle::fd_gradient(
        [&](std::span<const double> p) {
            return objective_and_grad(layers, Tensor::vec({p.begin(), p.end()}),
                                      Tensor::vec(target))
                .first;
        },
        z, 1e-5);
    for (std::size_t i = 0; i < z.size(); ++i)
        CHECK(oracle::rel_err(ad.data[i], fd[i]) <= 1e-4);
}

TEST_CASE("linearity of activation-free nets") {
    // dense chain only: forward(z1+z2) - forward(0) splits additively
    Rng rng(13);
    std::vector<double> w1(12), b1(4), w2(8), b2(2);
    for (double& v : w1) v = rng.normal();
    for (double& v : b1) v = rng.normal();
    for (double& v : w2) v = rng.normal();
    for (double& v : b2) v = rng.normal();
    const std::vector<LayerSpec> layers = {LayerSpec::dense(4, 3, w1, b1),
                                           LayerSpec::dense(2, 4, w2, b2)};

    const auto z1 = rng.normal_vec(3);
    const auto z2 = rng.normal_vec(3);
    std::vector<double> z_sum(3);
    for (int i = 0; i < 3; ++i) z_sum[i] = z1[i] + z2[i];

    const auto at = [&](const std::vector<double>& z) {
        return forward(layers, Tensor::vec(z)).data;
    };
    const auto f0 = at({0.0, 0.0, 0.0});
    const auto fs = at(z_sum);
    const auto fa = at(z1);
    const auto fb = at(z2);
    for (int i = 0; i < 2; ++i) {
        const double lhs = fs[i] - f0[i];
        const double rhs = (fa[i] - f0[i]) + (fb[i] - f0[i]);
        CHECK(std::abs(lhs - rhs) <= 1e-12);
    }
}

TEST_CASE("layer validation catches malformed dense layers") {
    LayerSpec bad = LayerSpec::dense(2, 2, {1.0, 2.0, 3.0, 4.0}, {0.0});
    CHECK_THROWS_WITH_AS(bad.validate(0), doctest::Contains("bias"), std::invalid_argument);
    LayerSpec bad_slope = LayerSpec::activation_layer(Activation::leaky_relu, 1.5);
    CHECK_THROWS_AS(bad_slope.validate(1), std::invalid_argument);
}

}  // TEST_SUITE
