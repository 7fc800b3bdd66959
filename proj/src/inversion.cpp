#include "latenteval/inversion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "latenteval/metrics.hpp"
#include "latenteval/rng.hpp"

namespace latenteval {

void InversionConfig::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw std::invalid_argument("beta1 must be in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw std::invalid_argument("beta2 must be in [0, 1)");
    if (!(adam_epsilon > 0.0)) throw std::invalid_argument("adam_epsilon must be positive");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    if (stop_window < 1) throw std::invalid_argument("stop_window must be >= 1");
    if (!(stop_tolerance_db >= 0.0))
        throw std::invalid_argument("stop_tolerance_db must be non-negative");
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
}

namespace {

std::vector<double> initial_latent(const GeneratorSpec& spec, const InversionConfig& config,
                                   std::uint64_t seed) {
    switch (config.init_scheme) {
        case InitScheme::zeros:
            return std::vector<double>(spec.latent_dim, 0.0);
        case InitScheme::provided:
            if (config.z_init.size() != spec.latent_dim)
                throw std::invalid_argument("provided z_init length does not equal latent_dim");
            return config.z_init;
        case InitScheme::noise_draw:
        default:
            return sample_noise(spec.noise, seed, 1)[0];
    }
}

InversionResult finish_result(const GeneratorSpec& spec, std::vector<double> z,
                              double best_mse, std::size_t iterations, bool converged,
                              std::vector<double> trace) {
    InversionResult res;
    res.x_star = generate(spec, z);
    res.final_mse = best_mse;
    res.final_psnr_db = psnr_from_mse(best_mse, spec.peak());
    res.z_norm_sq = std::inner_product(z.begin(), z.end(), z.begin(), 0.0);
    res.log_p_z = log_density(spec.noise, z);
    res.iterations_used = iterations;
    res.converged = converged;
    res.objective_trace = std::move(trace);
    res.z_star = std::move(z);
    return res;
}

}  // namespace

InversionResult invert(const GeneratorSpec& spec, const Tensor& target,
                       const InversionConfig& config, std::uint64_t seed) {
    config.validate();
    if (target.numel() != spec.output_numel())
        throw std::invalid_argument("target length " + std::to_string(target.numel()) +
                                    " does not match generator output length " +
                                    std::to_string(spec.output_numel()));
    const Tensor target_flat = Tensor::vec(target.data);
    const double peak = spec.peak();
    const std::size_t dim = spec.latent_dim;

    std::vector<double> z = initial_latent(spec, config, seed);
    if (config.constrained) project_to_typical_set(spec.noise, z, config.delta);

    std::vector<double> m(dim, 0.0), v(dim, 0.0);
    std::vector<double> best_z = z;
    double best_mse = std::numeric_limits<double>::infinity();
    std::vector<double> trace;
    trace.reserve(std::min<std::size_t>(config.max_iterations, 4096));
    std::vector<double> best_psnr;  // running best, one entry per iteration
    best_psnr.reserve(trace.capacity());

    bool converged = false;
    std::size_t used = 0;
    double beta1_pow = 1.0, beta2_pow = 1.0;

    for (std::size_t t = 0; t < config.max_iterations; ++t) {
        auto [f, grad] = objective_and_grad(spec.layers, Tensor::vec(z), target_flat);
        if (!std::isfinite(f)) throw DivergenceError(t);
        trace.push_back(f);
        if (f < best_mse) {
            best_mse = f;
            best_z = z;
        }
        best_psnr.push_back(psnr_from_mse(best_mse, peak));
        used = t + 1;

        if (best_psnr.back() >= kPsnrCapDb) {
            converged = true;  // nothing left to gain
            break;
        }
        if (t >= config.stop_window &&
            best_psnr[t] - best_psnr[t - config.stop_window] < config.stop_tolerance_db) {
            converged = true;
            break;
        }

        beta1_pow *= config.beta1;
        beta2_pow *= config.beta2;
        for (std::size_t i = 0; i < dim; ++i) {
            const double g = grad.data[i];
            m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
            v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
            const double m_hat = m[i] / (1.0 - beta1_pow);
            const double v_hat = v[i] / (1.0 - beta2_pow);
            z[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
        }
        if (config.constrained) project_to_typical_set(spec.noise, z, config.delta);
    }

    return finish_result(spec, std::move(best_z), best_mse, used, converged, std::move(trace));
}

RestartOutcome invert_restarts(const GeneratorSpec& spec, const Tensor& target,
                               const InversionConfig& config,
                               std::span<const std::uint64_t> seeds) {
    if (seeds.size() < 2)
        throw std::invalid_argument("invert_restarts needs at least two seeds");

    RestartOutcome out;
    out.runs.reserve(seeds.size());
    for (std::uint64_t s : seeds) out.runs.push_back(invert(spec, target, config, s));

    std::vector<double> mean_z(spec.latent_dim, 0.0);
    for (const auto& run : out.runs)
        for (std::size_t i = 0; i < mean_z.size(); ++i) mean_z[i] += run.z_star[i];
    for (double& c : mean_z) c /= static_cast<double>(out.runs.size());
    if (config.constrained) project_to_typical_set(spec.noise, mean_z, config.delta);

    const Tensor x = generate(spec, mean_z);
    const double f = mse_flat(x.data, target.data);
    out.mean_latent = finish_result(spec, std::move(mean_z), f, 0, true, {f});
    return out;
}

std::vector<InterpPoint> interpolate_latents(const GeneratorSpec& spec,
                                             std::span<const double> z_a,
                                             std::span<const double> z_b,
                                             std::size_t steps, InterpMode mode) {
    if (z_a.size() != z_b.size())
        throw std::invalid_argument("interpolate_latents: endpoint lengths differ");
    if (z_a.size() != spec.latent_dim)
        throw std::invalid_argument("interpolate_latents: endpoint length does not equal latent_dim");
    if (steps < 2) throw std::invalid_argument("interpolate_latents: need at least 2 steps");

    const std::size_t dim = z_a.size();
    double norm_a = 0.0, norm_b = 0.0, dot = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
        norm_a += z_a[i] * z_a[i];
        norm_b += z_b[i] * z_b[i];
        dot += z_a[i] * z_b[i];
    }
    norm_a = std::sqrt(norm_a);
    norm_b = std::sqrt(norm_b);

    double omega = 0.0, sin_omega = 0.0;
    bool parallel = false;
    if (mode == InterpMode::polar) {
        if (norm_a == 0.0 || norm_b == 0.0)
            throw std::invalid_argument("polar interpolation undefined for zero vectors");
        const double cos_omega = std::clamp(dot / (norm_a * norm_b), -1.0, 1.0);
        if (cos_omega < -1.0 + 1e-10)
            throw std::invalid_argument("polar interpolation undefined for antipodal vectors");
        omega = std::acos(cos_omega);
        sin_omega = std::sin(omega);
        parallel = sin_omega < 1e-12;
    }

    std::vector<InterpPoint> points;
    points.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        InterpPoint p;
        p.t = static_cast<double>(k) / static_cast<double>(steps - 1);
        if (k == 0) {
            p.z.assign(z_a.begin(), z_a.end());
        } else if (k + 1 == steps) {
            p.z.assign(z_b.begin(), z_b.end());
        } else if (mode == InterpMode::linear) {
            p.z.resize(dim);
            for (std::size_t i = 0; i < dim; ++i)
                p.z[i] = (1.0 - p.t) * z_a[i] + p.t * z_b[i];
        } else {
            const double norm_t = (1.0 - p.t) * norm_a + p.t * norm_b;
            p.z.resize(dim);
            if (parallel) {
                for (std::size_t i = 0; i < dim; ++i) p.z[i] = norm_t * (z_a[i] / norm_a);
            } else {
                const double wa = std::sin((1.0 - p.t) * omega) / sin_omega;
                const double wb = std::sin(p.t * omega) / sin_omega;
                for (std::size_t i = 0; i < dim; ++i)
                    p.z[i] = norm_t * (wa * z_a[i] / norm_a + wb * z_b[i] / norm_b);
            }
        }
        p.x = generate(spec, p.z);
        points.push_back(std::move(p));
    }
    return points;
}

TypicalSetReport typical_set_report(std::span<const InversionResult> results,
                                    const NoiseDistribution& dist, double delta,
                                    std::size_t reference_draws, std::uint64_t seed,
                                    std::size_t bins) {
    if (results.empty()) throw std::invalid_argument("typical_set_report: no results");

    TypicalSetReport rep;
    rep.result_count = results.size();
    rep.reference_count = reference_draws;

    std::vector<double> log_ps, norms;
    log_ps.reserve(results.size());
    norms.reserve(results.size());
    std::size_t outside = 0;
    for (const auto& r : results) {
        log_ps.push_back(r.log_p_z);
        norms.push_back(r.z_norm_sq);
        if (dist.kind == NoiseKind::standard_gaussian) {
            if (r.z_norm_sq > static_cast<double>(dist.dim) + delta + 1e-9) ++outside;
        } else if (!in_typical_set(dist, r.z_star, delta)) {
            ++outside;
        }
    }
    rep.outside_fraction = static_cast<double>(outside) / static_cast<double>(results.size());
    rep.mean_log_p_z =
        std::accumulate(log_ps.begin(), log_ps.end(), 0.0) / static_cast<double>(log_ps.size());
    std::vector<double> sorted = log_ps;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    rep.median_log_p_z = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

    std::vector<double> ref_norms;
    ref_norms.reserve(reference_draws);
    for (const auto& z : sample_noise(dist, seed, reference_draws)) {
        ref_norms.push_back(std::inner_product(z.begin(), z.end(), z.begin(), 0.0));
    }

    const std::array<std::span<const double>, 2> sets = {std::span<const double>(norms),
                                                         std::span<const double>(ref_norms)};
    const auto edges = shared_edges(sets, bins);
    rep.z_norm_sq_hist = make_histogram(norms, edges);
    if (!ref_norms.empty()) rep.reference_hist = make_histogram(ref_norms, edges);
    return rep;
}

}  // namespace latenteval
