#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "latenteval/dataset.hpp"
#include "latenteval/histogram.hpp"
#include "latenteval/inversion.hpp"
#include "latenteval/likelihood.hpp"

namespace latenteval {

inline constexpr const char* kToolVersion = "0.1.0";

/// Everything the batch pipeline needs; mirrors the config file section for
/// section. Flag precedence is handled by the CLI: flags > file > defaults.
struct PipelineConfig {
    InversionConfig inversion;  // 'constrained' is driven per pass, not here

    double psnr_threshold_db = 40.0;
    std::size_t n_max = 10000;
    std::size_t n_min_hits = 100;
    double sigma_lo = 1e-4;
    double sigma_hi = 1.0;
    double sigma_ratio = 1.25;

    std::size_t workers = 1;
    bool both = true;  // false: constrained pass only
    std::size_t histogram_bins = 50;
    std::size_t prior_draws = 10000;
    std::size_t top_k = 5;
    std::vector<std::size_t> sweep_samples;
    std::size_t sweep_n = 1000;
    bool svg = false;

    void validate() const;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig pipeline_config_from_json_text(const std::string& text,
                                              const std::string& context);
std::string pipeline_config_to_json_text(const PipelineConfig& config);

struct SampleRecord {
    static constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

    std::size_t sample_id = 0;
    std::string split;  // empty when the dataset carries no tags

    double psnr_unconstrained_db = kNaN;
    double psnr_constrained_db = kNaN;
    double z_norm_sq_unconstrained = kNaN;
    double z_norm_sq_constrained = kNaN;
    double log_p_z_unconstrained = kNaN;

    double log10_unnormalized_likelihood = kNaN;
    double sigma_used = kNaN;
    std::size_t hits = 0;
    std::size_t n_used = 0;
    bool saturated = false;

    std::size_t iterations_unconstrained = 0;
    std::size_t iterations_constrained = 0;

    std::string error;  // nonempty when this sample failed; other fields stale

    bool ok() const { return error.empty(); }
};

struct SweepCurve {
    std::size_t sample_id = 0;
    std::vector<std::pair<double, double>> points;  // (sigma, mean PSNR dB)
};

struct EvalReport {
    std::string tool_version;
    std::string generator_hash;  // FNV-1a of the generator file bytes
    std::uint64_t seed = 0;
    std::string note;              // records the omitted normalization constant
    std::string config_echo_json;  // the effective config, serialized

    std::vector<SampleRecord> records;  // ordered by sample_id

    Histogram znorm_hist;        // ||z*||^2 of the inversions
    Histogram znorm_prior_hist;  // fresh prior draws, same edges
    // log10 likelihood histograms and means keyed by split tag ("all" when
    // untagged); only finite values contribute
    std::vector<std::pair<std::string, Histogram>> loglik_hists;
    std::vector<std::pair<std::string, double>> loglik_means;

    std::vector<std::size_t> most_likely;   // sample ids, best first
    std::vector<std::size_t> least_likely;  // trailing slice of the ranking
    std::vector<SweepCurve> sweeps;
};

/// Per-sample seed derivation, fixed so that subsetting a dataset never
/// shifts other samples: sample_seed = derive_seed(global_seed, sample_id),
/// and within a sample the substreams are derive_seed(sample_seed, 1)
/// (unconstrained inversion), 2 (constrained inversion), 3 (likelihood);
/// restart r of an inversion uses derive_seed(substream, r).
std::uint64_t pipeline_sample_seed(std::uint64_t global_seed, std::size_t sample_id);

/// Run both inversions and the combined likelihood estimate for every sample,
/// then write report.json, samples.csv, hist_znorm.csv, hist_loglik.csv,
/// scatter.csv, sweep_<id>.csv (and SVG quick-plots when configured) into
/// out_dir. Per-sample failures land in the record's error string; only setup
/// problems (bad paths, shape mismatch, empty dataset) throw.
EvalReport run_pipeline(const std::filesystem::path& generator_path,
                        const std::filesystem::path& dataset_path,
                        const PipelineConfig& config,
                        const std::filesystem::path& out_dir, std::uint64_t seed);

/// Convenience overload loading the config file first (empty path = defaults).
EvalReport run_pipeline(const std::filesystem::path& generator_path,
                        const std::filesystem::path& dataset_path,
                        const std::filesystem::path& config_path,
                        const std::filesystem::path& out_dir, std::uint64_t seed);

/// Left-closed right-open bins, final bin right-closed; counts sum to the
/// number of values.
inline Histogram emit_histogram(std::span<const double> values, std::size_t bin_count) {
    return make_histogram(values, bin_count);
}
inline Histogram emit_histogram(std::span<const double> values,
                                std::span<const double> bin_edges) {
    return make_histogram(values, bin_edges);
}

/// Sort by log10 likelihood descending, ties broken by sample_id ascending;
/// -inf sentinels (and failed records) sort last. Returns the leading and
/// trailing k sample ids of that order. Requires k <= record count.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> rank_by_likelihood(
    std::span<const SampleRecord> records, std::size_t k);

}  // namespace latenteval
