#include "latenteval/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "latenteval/rng.hpp"

namespace latenteval {

void PiecewiseLinearManifold::validate() const {
    if (breakpoints.size() < 2)
        throw std::invalid_argument("manifold needs at least two breakpoints");
    if (breakpoints.size() != vertices.size())
        throw std::invalid_argument("manifold needs one vertex per breakpoint");
    if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0)
        throw std::invalid_argument("manifold breakpoints must start at 0 and end at 1");
    for (std::size_t i = 1; i < breakpoints.size(); ++i) {
        if (!(breakpoints[i] > breakpoints[i - 1]))
            throw std::invalid_argument("manifold breakpoints must be strictly increasing");
    }
}

std::array<double, 2> PiecewiseLinearManifold::eval(double z) const {
    // locate the segment; clamp selects the end segments for z outside [0,1]
    // so their slopes extrapolate linearly
    std::size_t seg = 0;
    if (z >= breakpoints.back()) {
        seg = segment_count() - 1;
    } else if (z > breakpoints.front()) {
        const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), z);
        seg = static_cast<std::size_t>(it - breakpoints.begin()) - 1;
    }
    const double t0 = breakpoints[seg];
    const double dt = breakpoints[seg + 1] - t0;
    const double u = (z - t0) / dt;
    const auto& p = vertices[seg];
    const auto& q = vertices[seg + 1];
    return {p[0] + u * (q[0] - p[0]), p[1] + u * (q[1] - p[1])};
}

GeneratorSpec manifold_to_spec(const PiecewiseLinearManifold& m) {
    m.validate();
    const std::size_t nseg = m.segment_count();

    // per-segment slope vectors s_i = (v_{i+1} - v_i) / dz_i
    std::vector<std::array<double, 2>> slope(nseg);
    for (std::size_t i = 0; i < nseg; ++i) {
        const double dz = m.breakpoints[i + 1] - m.breakpoints[i];
        slope[i] = {(m.vertices[i + 1][0] - m.vertices[i][0]) / dz,
                    (m.vertices[i + 1][1] - m.vertices[i][1]) / dz};
    }

    // G(z) = v_0 + s_0 (relu(z) - relu(-z)) + sum_i (s_i - s_{i-1}) relu(z - t_i)
    // The relu(z)/relu(-z) pair reconstructs the raw coordinate, so the first
    // and last slopes extend past the latent support.
    const std::size_t hidden = 2 + (nseg - 1);
    std::vector<double> w1(hidden, 0.0), b1(hidden, 0.0);
    w1[0] = 1.0;
    w1[1] = -1.0;
    for (std::size_t i = 1; i < nseg; ++i) {
        w1[1 + i] = 1.0;
        b1[1 + i] = -m.breakpoints[i];
    }

    std::vector<double> w2(2 * hidden, 0.0);
    std::vector<double> b2 = {m.vertices[0][0], m.vertices[0][1]};
    for (std::size_t r = 0; r < 2; ++r) {
        w2[r * hidden + 0] = slope[0][r];
        w2[r * hidden + 1] = -slope[0][r];
        for (std::size_t i = 1; i < nseg; ++i)
            w2[r * hidden + 1 + i] = slope[i][r] - slope[i - 1][r];
    }

    GeneratorSpec spec;
    spec.latent_dim = 1;
    spec.layers.push_back(LayerSpec::dense(hidden, 1, std::move(w1), std::move(b1)));
    spec.layers.push_back(LayerSpec::activation_layer(Activation::relu));
    spec.layers.push_back(LayerSpec::dense(2, hidden, std::move(w2), std::move(b2)));
    spec.output_shape = {2};

    double lo = m.vertices[0][0], hi = m.vertices[0][0];
    for (const auto& v : m.vertices) {
        lo = std::min({lo, v[0], v[1]});
        hi = std::max({hi, v[0], v[1]});
    }
    spec.output_min = std::min(lo, 0.0);
    spec.output_max = std::max(hi, spec.output_min + 1.0);
    spec.noise = {NoiseKind::uniform_box, 1, 0.0, 1.0};
    spec.validate();
    return spec;
}

double exact_ball_probability(const PiecewiseLinearManifold& m,
                              std::array<double, 2> x_center, double mse_ceiling) {
    m.validate();
    if (mse_ceiling <= 0.0) return 0.0;
    // MSE over the 2-vector output: ||G(z) - x||^2 / 2 < c  <=>  ||.||^2 < 2c
    const double r_sq = 2.0 * mse_ceiling;

    double measure = 0.0;
    for (std::size_t i = 0; i < m.segment_count(); ++i) {
        const auto& p = m.vertices[i];
        const auto& q = m.vertices[i + 1];
        const double dz = m.breakpoints[i + 1] - m.breakpoints[i];
        const double dx = q[0] - p[0], dy = q[1] - p[1];
        const double wx = p[0] - x_center[0], wy = p[1] - x_center[1];
        const double a = dx * dx + dy * dy;
        const double b = 2.0 * (dx * wx + dy * wy);
        const double c = wx * wx + wy * wy - r_sq;
        if (a == 0.0) {
            // point mass: the whole latent interval maps to p
            if (c < 0.0) measure += dz;
            continue;
        }
        const double disc = b * b - 4.0 * a * c;
        if (disc <= 0.0) continue;
        const double root = std::sqrt(disc);
        const double u_lo = std::max(0.0, (-b - root) / (2.0 * a));
        const double u_hi = std::min(1.0, (-b + root) / (2.0 * a));
        if (u_hi > u_lo) measure += dz * (u_hi - u_lo);
    }
    return measure;
}

namespace {

// modified Gram-Schmidt with one re-orthogonalization pass; columns of a
// random Gaussian matrix are independent with probability one
std::vector<double> orthonormal_columns(std::size_t rows, std::size_t cols, Rng& rng) {
    std::vector<std::vector<double>> q(cols, std::vector<double>(rows));
    for (auto& col : q)
        for (double& v : col) v = rng.normal();

    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < cols; ++j) {
            for (std::size_t k = 0; k < j; ++k) {
                double dot = 0.0;
                for (std::size_t r = 0; r < rows; ++r) dot += q[k][r] * q[j][r];
                for (std::size_t r = 0; r < rows; ++r) q[j][r] -= dot * q[k][r];
            }
            double norm_sq = 0.0;
            for (double v : q[j]) norm_sq += v * v;
            if (norm_sq < 1e-12)
                throw std::runtime_error("degenerate random matrix in orthonormalization");
            const double inv = 1.0 / std::sqrt(norm_sq);
            for (double& v : q[j]) v *= inv;
        }
    }

    std::vector<double> a(rows * cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cols; ++j) a[r * cols + j] = q[j][r];
    return a;
}

}  // namespace

std::vector<double> AffineFixture::least_squares(std::span<const double> x) const {
    const std::size_t dim_out = offset.size();
    const std::size_t dim_in = column_scales.size();
    if (x.size() != dim_out)
        throw std::invalid_argument("least_squares: target length does not match fixture output");
    std::vector<double> z(dim_in, 0.0);
    for (std::size_t r = 0; r < dim_out; ++r) {
        const double resid = x[r] - offset[r];
        for (std::size_t j = 0; j < dim_in; ++j) z[j] += matrix[r * dim_in + j] * resid;
    }
    for (std::size_t j = 0; j < dim_in; ++j) z[j] /= column_scales[j] * column_scales[j];
    return z;
}

AffineFixture affine_fixture(std::size_t dim_in, std::size_t dim_out, std::uint64_t seed,
                             std::span<const double> column_scales) {
    if (dim_out < dim_in)
        throw std::invalid_argument("affine_fixture requires dim_out >= dim_in");
    if (!column_scales.empty() && column_scales.size() != dim_in)
        throw std::invalid_argument("affine_fixture: one column scale per input dim");

    Rng rng(seed);
    AffineFixture fx;
    fx.column_scales.assign(column_scales.begin(), column_scales.end());
    if (fx.column_scales.empty()) fx.column_scales.assign(dim_in, 1.0);
    for (double s : fx.column_scales)
        if (!(s > 0.0)) throw std::invalid_argument("affine_fixture: scales must be positive");

    fx.matrix = orthonormal_columns(dim_out, dim_in, rng);
    for (std::size_t r = 0; r < dim_out; ++r)
        for (std::size_t j = 0; j < dim_in; ++j) fx.matrix[r * dim_in + j] *= fx.column_scales[j];
    fx.offset.resize(dim_out);
    for (double& v : fx.offset) v = rng.normal();

    double s_max = 0.0;
    for (double s : fx.column_scales) s_max = std::max(s_max, s);
    const double bound = 2.0 * std::sqrt(static_cast<double>(dim_in)) * s_max + 4.0;

    GeneratorSpec spec;
    spec.latent_dim = dim_in;
    spec.layers.push_back(LayerSpec::dense(dim_out, dim_in, fx.matrix, fx.offset));
    spec.output_shape = {dim_out};
    spec.output_min = -bound;
    spec.output_max = bound;
    spec.noise = {NoiseKind::standard_gaussian, dim_in, 0.0, 1.0};
    spec.validate();
    fx.spec = std::move(spec);
    return fx;
}

GeneratorSpec random_mlp_fixture(std::size_t dim_in, std::span<const std::size_t> widths,
                                 std::uint64_t seed, double output_min, double output_max) {
    if (widths.empty()) throw std::invalid_argument("random_mlp_fixture: widths must be nonempty");
    if (!(output_max > output_min))
        throw std::invalid_argument("random_mlp_fixture: output range must be nonempty");

    Rng rng(seed);
    GeneratorSpec spec;
    spec.latent_dim = dim_in;

    std::size_t fan_in = dim_in;
    for (std::size_t li = 0; li < widths.size(); ++li) {
        const std::size_t w = widths[li];
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        std::vector<double> weight(w * fan_in);
        std::vector<double> bias(w);
        for (double& v : weight) v = stddev * rng.normal();
        for (double& v : bias) v = 0.1 * rng.normal();
        spec.layers.push_back(LayerSpec::dense(w, fan_in, std::move(weight), std::move(bias)));
        const bool last = li + 1 == widths.size();
        spec.layers.push_back(LayerSpec::activation_layer(last ? Activation::tanh
                                                               : Activation::relu));
        fan_in = w;
    }

    // map tanh's (-1, 1) onto (output_min, output_max)
    const std::size_t out = widths.back();
    const double half_span = 0.5 * (output_max - output_min);
    const double mid = 0.5 * (output_max + output_min);
    std::vector<double> scale_w(out * out, 0.0);
    for (std::size_t i = 0; i < out; ++i) scale_w[i * out + i] = half_span;
    spec.layers.push_back(LayerSpec::dense(out, out, std::move(scale_w),
                                           std::vector<double>(out, mid)));

    spec.output_shape = {out};
    spec.output_min = output_min;
    spec.output_max = output_max;
    spec.noise = {NoiseKind::standard_gaussian, dim_in, 0.0, 1.0};
    spec.validate();
    return spec;
}

GeneratorSpec two_branch_fixture(std::size_t dim, double scale, double speed) {
    if (dim == 0) throw std::invalid_argument("two_branch_fixture: dim must be positive");
    if (!(scale > 0.0) || !(speed > 0.0))
        throw std::invalid_argument("two_branch_fixture: scale and speed must be positive");

    // hidden features relu(z_i), relu(-z_i) per coordinate
    std::vector<double> w1(2 * dim * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        w1[(2 * i) * dim + i] = 1.0;
        w1[(2 * i + 1) * dim + i] = -1.0;
    }
    std::vector<double> w2(dim * 2 * dim, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
        w2[i * 2 * dim + 2 * i] = scale * speed;
        w2[i * 2 * dim + 2 * i + 1] = -speed;
    }

    GeneratorSpec spec;
    spec.latent_dim = dim;
    spec.layers.push_back(
        LayerSpec::dense(2 * dim, dim, std::move(w1), std::vector<double>(2 * dim, 0.0)));
    spec.layers.push_back(LayerSpec::activation_layer(Activation::relu));
    spec.layers.push_back(
        LayerSpec::dense(dim, 2 * dim, std::move(w2), std::vector<double>(dim, 0.0)));
    spec.output_shape = {dim};
    const double bound = 8.0 * scale * speed;
    spec.output_min = -bound;
    spec.output_max = bound;
    spec.noise = {NoiseKind::standard_gaussian, dim, 0.0, 1.0};
    spec.validate();
    return spec;
}

PiecewiseLinearManifold demo_manifold() {
    PiecewiseLinearManifold m;
    m.breakpoints = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    m.vertices = {
        {0.00, 0.00},  // segment 0: moderate
        {0.08, 0.06},  // segment 1: long (fast traversal, low density)
        {0.38, 0.28},  // segment 2: short (slow traversal, high density)
        {0.44, 0.33},  // segment 3
        {0.52, 0.38},  // segment 4
        {0.60, 0.40},  // segment 5: point mass, latent measure 0.1
        {0.60, 0.40},
        {0.80, 0.44},  // segment 6
        {0.86, 0.60},  // segment 7
        {0.88, 0.78},  // segment 8
        {0.90, 0.98},  // segment 9
    };
    return m;
}

std::vector<std::array<double, 2>> demo_targets() {
    return {
        {0.413, 0.302},    // near the short segment: good fit, high probability
        {0.230, 0.173},    // near the long segment: good fit, low probability
        {0.630, 0.360},    // near the point mass: modest fit, probability >= 0.1
        {0.200, 0.800},    // far off-manifold: poor fit, low probability
        {-0.200, -0.150},  // on the extrapolated extension past z = 0
    };
}

PiecewiseLinearManifold two_segment_manifold(double slow_speed, double fast_speed) {
    PiecewiseLinearManifold m;
    // each segment has latent measure 1/2; chord length = speed * 1/2
    m.breakpoints = {0.0, 0.5, 1.0};
    m.vertices = {{0.0, 0.0},
                  {0.5 * slow_speed, 0.0},
                  {0.5 * slow_speed + 0.5 * fast_speed, 0.0}};
    return m;
}

}  // namespace latenteval
