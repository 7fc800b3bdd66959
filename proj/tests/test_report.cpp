#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "latenteval/dataset.hpp"
#include "latenteval/fixtures.hpp"
#include "latenteval/likelihood.hpp"
#include "latenteval/report.hpp"
#include "latenteval/rng.hpp"

using namespace latenteval;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "latenteval_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// a small affine setup shared by pipeline cases: generator file + on-manifold
// targets inside the typical set
struct PipelineFiles {
    fs::path generator;
    fs::path dataset;
    AffineFixture fx;
};

PipelineFiles affine_pipeline_files(const fs::path& dir, std::size_t n_samples,
                                    bool with_splits) {
    PipelineFiles files;
    files.fx = affine_fixture(4, 8, 1001);
    files.generator = dir / "gen.json";
    save_spec(files.fx.spec, files.generator);

    Dataset ds;
    ds.flat_length = 8;
    Rng rng(55);
    for (std::size_t i = 0; i < n_samples; ++i) {
        auto z = rng.normal_vec(4);
        double n2 = 0.0;
        for (double v : z) n2 += v * v;
        const double scale = 0.8 * std::sqrt(4.0 / n2);
        for (double& v : z) v *= scale;
        ds.samples.push_back(generate(files.fx.spec, z).data);
        if (with_splits) ds.splits.push_back(i % 2 ? "test" : "train");
    }
    files.dataset = dir / "targets.csv";
    save_dataset_csv(ds, files.dataset);
    return files;
}

PipelineConfig fast_config() {
    PipelineConfig cfg;
    cfg.inversion.max_iterations = 1500;
    cfg.n_max = 2000;
    cfg.n_min_hits = 50;
    cfg.prior_draws = 1000;
    cfg.histogram_bins = 10;
    cfg.top_k = 3;
    return cfg;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("histogram: single bin captures everything") {
    const std::vector<double> values = {1.0, 2.0, 3.0};
    const Histogram h = emit_histogram(values, std::size_t{1});
    REQUIRE(h.size() == 1);
    CHECK(h[0].count == 3);
    CHECK(h[0].left == 1.0);
    CHECK(h[0].right == 3.0);
}

TEST_CASE("histogram: interior edges are left-closed") {
    const std::vector<double> values = {0.0, 1.0, 2.0, 4.0};
    const std::vector<double> edges = {0.0, 1.0, 2.0, 4.0};
    const Histogram h = emit_histogram(values, std::span<const double>(edges));
    REQUIRE(h.size() == 3);
    CHECK(h[0].count == 1);  // 0.0
    CHECK(h[1].count == 1);  // 1.0 goes right of its edge
    CHECK(h[2].count == 2);  // 2.0 and the right-closed 4.0
}

TEST_CASE("histogram: chi-square draws at dim 256 put the mode at the dimension") {
    const NoiseDistribution dist{NoiseKind::standard_gaussian, 256, 0.0, 1.0};
    std::vector<double> norms;
    for (const auto& z : sample_noise(dist, 4242, 10000)) {
        double n2 = 0.0;
        for (double v : z) n2 += v * v;
        norms.push_back(n2);
    }
    const Histogram h = emit_histogram(norms, std::size_t{50});
    std::size_t total = 0, best = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        total += h[i].count;
        if (h[i].count > h[best].count) best = i;
    }
    CHECK(total == 10000);
    CHECK(h[best].left <= 256.0);
    CHECK(h[best].right >= 256.0);
}

TEST_CASE("ranking: distinct values sort exactly, ties fall back to ids") {
    std::vector<SampleRecord> records(4);
    for (std::size_t i = 0; i < 4; ++i) records[i].sample_id = i;
    records[0].log10_unnormalized_likelihood = -5.0;
    records[1].log10_unnormalized_likelihood = -1.0;
    records[2].log10_unnormalized_likelihood = -3.0;
    records[3].log10_unnormalized_likelihood = -2.0;
    auto [top, bottom] = rank_by_likelihood(records, 2);
    CHECK(top == std::vector<std::size_t>{1, 3});
    CHECK(bottom == std::vector<std::size_t>{2, 0});

    for (auto& r : records) r.log10_unnormalized_likelihood = -1.0;
    std::tie(top, bottom) = rank_by_likelihood(records, 2);
    CHECK(top == std::vector<std::size_t>{0, 1});
    CHECK(bottom == std::vector<std::size_t>{2, 3});
}

TEST_CASE("ranking: the -inf sentinel lands only in the bottom slice") {
    std::vector<SampleRecord> records(3);
    for (std::size_t i = 0; i < 3; ++i) records[i].sample_id = i;
    records[0].log10_unnormalized_likelihood = -2.0;
    records[1].log10_unnormalized_likelihood = -std::numeric_limits<double>::infinity();
    records[2].log10_unnormalized_likelihood = -1.0;
    const auto [top, bottom] = rank_by_likelihood(records, 1);
    CHECK(top == std::vector<std::size_t>{2});
    CHECK(bottom == std::vector<std::size_t>{1});
    CHECK_THROWS_AS(rank_by_likelihood(records, 9), std::invalid_argument);
}

TEST_CASE("pipeline: on-manifold affine targets reconstruct above 60 dB") {
    const fs::path dir = fresh_dir("pipe_affine");
    const PipelineFiles files = affine_pipeline_files(dir, 20, false);
    const EvalReport rep =
        run_pipeline(files.generator, files.dataset, fast_config(), dir / "out", 7);

    REQUIRE(rep.records.size() == 20);
    for (const auto& r : rep.records) {
        REQUIRE(r.ok());
        CHECK(r.psnr_constrained_db >= 60.0);
        CHECK(std::isfinite(r.log10_unnormalized_likelihood));
        CHECK(r.z_norm_sq_constrained <= 4.0 + 1e-9);
    }
    for (const fs::path name :
         {"report.json", "samples.csv", "hist_znorm.csv", "hist_loglik.csv", "scatter.csv"})
        CHECK(fs::exists(dir / "out" / name));
}

TEST_CASE("pipeline: demo manifold targets reproduce the probability ordering") {
    const fs::path dir = fresh_dir("pipe_manifold");
    const PiecewiseLinearManifold m = demo_manifold();
    const fs::path gen = dir / "gen.json";
    save_spec(manifold_to_spec(m), gen);

    Dataset ds;
    ds.flat_length = 2;
    for (const auto& t : demo_targets()) ds.samples.push_back({t[0], t[1]});
    const fs::path data = dir / "targets.csv";
    save_dataset_csv(ds, data);

    PipelineConfig cfg = fast_config();
    cfg.inversion.restarts = 8;  // the 1D objective is multimodal
    cfg.inversion.max_iterations = 2000;
    cfg.psnr_threshold_db = 50.0;
    cfg.sweep_samples = {0};
    const EvalReport rep = run_pipeline(gen, data, cfg, dir / "out", 11);

    REQUIRE(rep.records.size() == 5);
    for (const auto& r : rep.records) REQUIRE(r.ok());

    // target 0 sits on a short (slow) segment, target 1 on a long one
    CHECK(rep.records[0].log10_unnormalized_likelihood >
          rep.records[1].log10_unnormalized_likelihood);
    // target 4 is reachable only through the extrapolated extension: the
    // unconstrained pass nails it, the box-constrained pass degrades hard
    CHECK(rep.records[4].psnr_unconstrained_db >= 60.0);
    CHECK(rep.records[4].psnr_constrained_db <= rep.records[4].psnr_unconstrained_db - 10.0);
    // the point-mass target keeps a fat likelihood: at least log10(0.1) plus
    // the sigma volume term, so simply demand it beats the long-segment one
    CHECK(rep.records[2].log10_unnormalized_likelihood >
          rep.records[1].log10_unnormalized_likelihood);

    CHECK(fs::exists(dir / "out" / "sweep_0.csv"));
}

TEST_CASE("pipeline: empty dataset is a setup error") {
    const fs::path dir = fresh_dir("pipe_empty");
    const PipelineFiles files = affine_pipeline_files(dir, 3, false);
    Dataset empty;
    empty.flat_length = 8;
    const fs::path data = dir / "empty.evgs";
    save_dataset_binary(empty, data);
    CHECK_THROWS_WITH_AS(run_pipeline(files.generator, data, fast_config(), dir / "out", 1),
                         doctest::Contains("no samples"), SpecError);
}

TEST_CASE("pipeline: runs are byte-identical across repeats and worker counts") {
    const fs::path dir = fresh_dir("pipe_det");
    const PipelineFiles files = affine_pipeline_files(dir, 6, true);
    PipelineConfig cfg = fast_config();
    cfg.sweep_samples = {1};
    cfg.svg = true;

    cfg.workers = 1;
    run_pipeline(files.generator, files.dataset, cfg, dir / "a", 99);
    run_pipeline(files.generator, files.dataset, cfg, dir / "b", 99);
    cfg.workers = 8;
    run_pipeline(files.generator, files.dataset, cfg, dir / "c", 99);

    for (const char* name : {"report.json", "samples.csv", "hist_znorm.csv", "hist_loglik.csv",
                             "scatter.csv", "sweep_1.csv", "hist_znorm.svg", "scatter.svg"}) {
        const std::string a = slurp(dir / "a" / name);
        CHECK(a == slurp(dir / "b" / name));
        CHECK(a == slurp(dir / "c" / name));
        CHECK_FALSE(a.empty());
    }
}

TEST_CASE("pipeline: split tags partition the likelihood histogram") {
    const fs::path dir = fresh_dir("pipe_split");
    const PipelineFiles files = affine_pipeline_files(dir, 6, true);
    const EvalReport rep =
        run_pipeline(files.generator, files.dataset, fast_config(), dir / "out", 3);
    REQUIRE(rep.loglik_hists.size() == 2);
    CHECK(rep.loglik_hists[0].first == "test");
    CHECK(rep.loglik_hists[1].first == "train");
    std::size_t total = 0;
    for (const auto& [split, hist] : rep.loglik_hists)
        for (const auto& bin : hist) total += bin.count;
    CHECK(total == 6);
}

TEST_CASE("pipeline: histograms rebuilt from samples.csv match the aggregates") {
    const fs::path dir = fresh_dir("pipe_consistency");
    const PipelineFiles files = affine_pipeline_files(dir, 8, false);
    PipelineConfig cfg = fast_config();
    const EvalReport rep = run_pipeline(files.generator, files.dataset, cfg, dir / "out", 21);

    // parse z_norm_sq_unconstrained (column 4) back out of the CSV
    std::istringstream csv(slurp(dir / "out" / "samples.csv"));
    std::string line;
    std::getline(csv, line);  // header
    std::vector<double> norms;
    while (std::getline(csv, line)) {
        std::istringstream row(line);
        std::string field;
        for (int c = 0; c <= 4; ++c) std::getline(row, field, ',');
        norms.push_back(std::stod(field));
    }
    REQUIRE(norms.size() == rep.records.size());

    std::vector<double> edges;
    edges.reserve(rep.znorm_hist.size() + 1);
    for (const auto& bin : rep.znorm_hist) edges.push_back(bin.left);
    edges.push_back(rep.znorm_hist.back().right);
    const Histogram rebuilt = emit_histogram(norms, std::span<const double>(edges));
    REQUIRE(rebuilt.size() == rep.znorm_hist.size());
    for (std::size_t i = 0; i < rebuilt.size(); ++i)
        CHECK(rebuilt[i].count == rep.znorm_hist[i].count);
}

TEST_CASE("pipeline: likelihood fields reproduce a standalone estimate") {
    const fs::path dir = fresh_dir("pipe_compose");
    const PipelineFiles files = affine_pipeline_files(dir, 3, false);
    PipelineConfig cfg = fast_config();
    const EvalReport rep = run_pipeline(files.generator, files.dataset, cfg, dir / "out", 17);

    const std::size_t id = 2;
    const std::uint64_t sample_seed = pipeline_sample_seed(17, id);

    // rerun the constrained inversion exactly as the pipeline derives it
    const GeneratorSpec spec = load_spec(files.generator);
    const Dataset ds = load_dataset(files.dataset);
    InversionConfig inv = cfg.inversion;
    inv.constrained = true;
    const InversionResult con = invert(spec, Tensor::vec(ds.samples[id]), inv,
                                       derive_seed(derive_seed(sample_seed, 2), 0));

    LikelihoodConfig lik;
    lik.threshold = threshold_from_psnr(cfg.psnr_threshold_db, spec.peak());
    lik.n_max = cfg.n_max;
    lik.n_min_hits = cfg.n_min_hits;
    lik.sigma_grid = geometric_grid(cfg.sigma_lo, cfg.sigma_hi, cfg.sigma_ratio);
    lik.seed = derive_seed(sample_seed, 3);
    const LikelihoodEstimate est = estimate_combined(spec, con.z_star, lik);

    CHECK(rep.records[id].hits == est.hits);
    CHECK(rep.records[id].sigma_used == est.sigma_used);
    CHECK(rep.records[id].log10_unnormalized_likelihood ==
          est.log_unnormalized / std::numbers::ln10);
}

TEST_CASE("config file round-trip and validation") {
    const PipelineConfig defaults;
    const std::string text = pipeline_config_to_json_text(defaults);
    const PipelineConfig back = pipeline_config_from_json_text(text, "inline");
    CHECK(back.inversion.learning_rate == defaults.inversion.learning_rate);
    CHECK(back.n_max == defaults.n_max);
    CHECK(back.both == defaults.both);

    CHECK_THROWS_WITH_AS(pipeline_config_from_json_text("{\"pipelnie\": {}}", "inline"),
                         doctest::Contains("unknown key"), SpecError);
    CHECK_THROWS_AS(
        pipeline_config_from_json_text("{\"pipeline\": {\"workers\": 0}}", "inline"),
        SpecError);
    // partial files inherit every unstated default
    const PipelineConfig partial = pipeline_config_from_json_text(
        "{\"likelihood\": {\"n_max\": 500, \"n_min_hits\": 10}}", "inline");
    CHECK(partial.n_max == 500);
    CHECK(partial.inversion.max_iterations == 3000);
}

}  // TEST_SUITE
