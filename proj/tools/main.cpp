// Command-line surface: single-sample inversion and likelihood probes, sigma
// sweeps, the full batch pipeline, and a writer for the bundled analytic
// fixtures.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

#include <CLI11.hpp>
#include <json.hpp>

#include "latenteval/dataset.hpp"
#include "latenteval/fixtures.hpp"
#include "latenteval/inversion.hpp"
#include "latenteval/likelihood.hpp"
#include "latenteval/metrics.hpp"
#include "latenteval/report.hpp"
#include "latenteval/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace latenteval;

namespace {

json inversion_to_json(const InversionResult& r, bool include_x) {
    json j;
    j["z_star"] = r.z_star;
    if (include_x) j["x_star"] = r.x_star.data;
    j["final_mse"] = r.final_mse;
    j["final_psnr_db"] = r.final_psnr_db;
    j["z_norm_sq"] = r.z_norm_sq;
    j["log_p_z"] = r.log_p_z;
    j["iterations_used"] = r.iterations_used;
    j["converged"] = r.converged;
    return j;
}

json estimate_to_json(const LikelihoodEstimate& e, std::size_t latent_dim) {
    json j;
    j["log_unnormalized"] = e.log_unnormalized;
    j["log10_unnormalized"] = e.log_unnormalized / std::numbers::ln10;
    j["sigma_used"] = e.sigma_used;
    j["n_used"] = e.n_used;
    j["hits"] = e.hits;
    j["saturated"] = e.saturated;
    j["latent_dim"] = latent_dim;
    j["note"] = "unnormalized: the constant depending only on p(z) is omitted";
    return j;
}

void write_fixture_config(const fs::path& dir) {
    const PipelineConfig defaults;
    std::ofstream out(dir / "config_default.json", std::ios::binary);
    out << pipeline_config_to_json_text(defaults);
}

Tensor fetch_sample(const GeneratorSpec& spec, const Dataset& ds, std::size_t index) {
    if (index >= ds.count())
        throw SpecError("sample index " + std::to_string(index) + " out of range (dataset has " +
                        std::to_string(ds.count()) + " samples)");
    if (ds.flat_length != spec.output_numel())
        throw SpecError("dataset sample length does not match generator output length");
    return Tensor::vec(ds.samples[index]).reshaped(spec.output_shape);
}

void write_fixtures(const fs::path& dir) {
    fs::create_directories(dir);

    const AffineFixture aff4 = affine_fixture(4, 8, 41);
    save_spec(aff4.spec, dir / "affine_d4.gen.json");
    const AffineFixture aff16 = affine_fixture(16, 32, 42);
    save_spec(aff16.spec, dir / "affine_d16.gen.json");

    // on-manifold targets for the affine fixture, drawn inside the typical set
    {
        Dataset targets;
        targets.flat_length = aff4.spec.output_numel();
        Rng rng(7);
        for (int i = 0; i < 20; ++i) {
            std::vector<double> z(4);
            double norm_sq = 0.0;
            for (double& v : z) {
                v = rng.normal();
                norm_sq += v * v;
            }
            const double scale = 0.8 * std::sqrt(4.0 / norm_sq);
            for (double& v : z) v *= scale;
            targets.samples.push_back(generate(aff4.spec, z).data);
        }
        save_dataset_binary(targets, dir / "affine_d4_targets.evgs");
    }

    save_spec(manifold_to_spec(demo_manifold()), dir / "manifold_demo.gen.json");
    {
        Dataset targets;
        targets.flat_length = 2;
        for (const auto& t : demo_targets()) targets.samples.push_back({t[0], t[1]});
        save_dataset_csv(targets, dir / "manifold_demo_targets.csv");
    }

    save_spec(manifold_to_spec(two_segment_manifold()), dir / "manifold_two_segment.gen.json");
    save_spec(two_branch_fixture(2, 4.0), dir / "two_branch_d2.gen.json");

    const std::vector<std::size_t> widths = {24, 24, 12};
    const GeneratorSpec mlp = random_mlp_fixture(8, widths, 43);
    save_spec(mlp, dir / "mlp_d8.gen.json");
    {
        Dataset smoke;
        smoke.flat_length = mlp.output_numel();
        for (const auto& z : sample_noise(mlp.noise, 9, 32))
            smoke.samples.push_back(generate(mlp, z).data);
        save_dataset_binary(smoke, dir / "mlp_d8_samples.evgs");
    }

    write_fixture_config(dir);
    std::cout << "wrote fixtures to " << dir.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent reconstruction and Monte Carlo likelihood evaluation for "
                 "feed-forward generators"};
    app.require_subcommand(1);

    std::string generator_path, dataset_path, config_path, out_path;
    std::size_t sample_index = 0;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    bool constrained = false, constrained_only = false, both = false;
    bool emit_x = false, svg = false;
    double psnr_threshold_db = 0.0;

    auto add_common = [&](CLI::App* cmd, bool needs_dataset) {
        cmd->add_option("--generator", generator_path, "generator spec file")->required();
        if (needs_dataset)
            cmd->add_option("--dataset", dataset_path, "dataset file (.evgs binary or CSV)")
                ->required();
        cmd->add_option("--seed", seed, "global seed (default 0)");
    };

    CLI::App* cmd_invert = app.add_subcommand("invert", "invert one sample and print the result");
    add_common(cmd_invert, true);
    cmd_invert->add_option("--index", sample_index, "sample index (default 0)");
    cmd_invert->add_flag("--constrained", constrained, "restrict z to the typical set");
    cmd_invert->add_flag("--emit-x", emit_x, "include the reconstruction in the output");
    cmd_invert->add_option("--config", config_path, "pipeline config file (inversion section)");

    CLI::App* cmd_lik = app.add_subcommand(
        "likelihood", "constrained-invert one sample, then estimate its likelihood");
    add_common(cmd_lik, true);
    cmd_lik->add_option("--index", sample_index, "sample index (default 0)");
    cmd_lik->add_option("--psnr-threshold-db", psnr_threshold_db, "hit-test PSNR floor");
    cmd_lik->add_option("--config", config_path, "pipeline config file");

    CLI::App* cmd_sweep =
        app.add_subcommand("sweep", "sigma sweep curve for one sample, written as CSV");
    add_common(cmd_sweep, true);
    cmd_sweep->add_option("--index", sample_index, "sample index (default 0)");
    cmd_sweep->add_option("--out", out_path, "output CSV path")->required();
    cmd_sweep->add_option("--config", config_path, "pipeline config file");

    CLI::App* cmd_eval = app.add_subcommand("evaluate", "run the full pipeline over a dataset");
    add_common(cmd_eval, true);
    cmd_eval->add_option("--config", config_path, "pipeline config file");
    cmd_eval->add_option("--out", out_path, "output directory")->required();
    cmd_eval->add_option("--workers", workers, "worker thread count");
    cmd_eval->add_option("--psnr-threshold-db", psnr_threshold_db, "hit-test PSNR floor");
    CLI::Option* opt_conly =
        cmd_eval->add_flag("--constrained-only", constrained_only, "skip the unconstrained pass");
    cmd_eval->add_flag("--both", both, "run both passes (default)")->excludes(opt_conly);
    cmd_eval->add_flag("--svg", svg, "also write SVG quick-plots");

    CLI::App* cmd_fix =
        app.add_subcommand("fixtures", "write the bundled fixture generators and datasets");
    cmd_fix->add_option("--out", out_path, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_fix->parsed()) {
            write_fixtures(out_path);
            return 0;
        }

        PipelineConfig cfg;
        if (!config_path.empty()) cfg = load_pipeline_config(config_path);

        if (cmd_invert->parsed()) {
            const GeneratorSpec spec = load_spec(generator_path);
            const Tensor target = fetch_sample(spec, load_dataset(dataset_path), sample_index);
            InversionConfig inv = cfg.inversion;
            inv.constrained = constrained;
            const InversionResult res = invert(spec, target, inv, seed);
            std::cout << inversion_to_json(res, emit_x).dump(2) << "\n";
            return 0;
        }

        if (cmd_lik->parsed()) {
            const GeneratorSpec spec = load_spec(generator_path);
            const Tensor target = fetch_sample(spec, load_dataset(dataset_path), sample_index);
            InversionConfig inv = cfg.inversion;
            inv.constrained = true;
            const InversionResult res = invert(spec, target, inv, derive_seed(seed, 2));
            LikelihoodConfig lik;
            const double floor_db =
                psnr_threshold_db > 0.0 ? psnr_threshold_db : cfg.psnr_threshold_db;
            lik.threshold = threshold_from_psnr(floor_db, spec.peak());
            lik.n_max = cfg.n_max;
            lik.n_min_hits = cfg.n_min_hits;
            lik.sigma_grid = geometric_grid(cfg.sigma_lo, cfg.sigma_hi, cfg.sigma_ratio);
            lik.seed = derive_seed(seed, 3);
            const LikelihoodEstimate est = estimate_combined(spec, res.z_star, lik);
            json j;
            j["inversion"] = inversion_to_json(res, false);
            j["likelihood"] = estimate_to_json(est, spec.latent_dim);
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (cmd_sweep->parsed()) {
            const GeneratorSpec spec = load_spec(generator_path);
            const Tensor target = fetch_sample(spec, load_dataset(dataset_path), sample_index);
            InversionConfig inv = cfg.inversion;
            inv.constrained = true;
            const InversionResult res = invert(spec, target, inv, derive_seed(seed, 2));
            const auto curve =
                sigma_sweep(spec, res.z_star,
                            geometric_grid(cfg.sigma_lo, cfg.sigma_hi, cfg.sigma_ratio),
                            cfg.sweep_n, derive_seed(seed, 3, sample_index));
            std::ofstream out(out_path, std::ios::binary);
            if (!out) throw SpecError("cannot write " + out_path);
            out << "sigma_eps,mean_psnr_db\n";
            char buf[80];
            for (const auto& [s, p] : curve) {
                std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s, p);
                out << buf;
            }
            return 0;
        }

        if (cmd_eval->parsed()) {
            if (workers > 0) cfg.workers = workers;
            if (psnr_threshold_db > 0.0) cfg.psnr_threshold_db = psnr_threshold_db;
            if (constrained_only) cfg.both = false;
            if (both) cfg.both = true;
            if (svg) cfg.svg = true;
            const EvalReport rep = run_pipeline(generator_path, dataset_path, cfg, out_path, seed);
            std::size_t failed = 0;
            for (const auto& r : rep.records)
                if (!r.ok()) ++failed;
            std::cout << "evaluated " << rep.records.size() << " samples (" << failed
                      << " failed); report written to " << out_path << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
