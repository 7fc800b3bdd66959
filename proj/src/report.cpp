#include "latenteval/report.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "latenteval/metrics.hpp"
#include "latenteval/rng.hpp"

namespace latenteval {

namespace {

using nlohmann::json;

constexpr std::uint64_t kPriorDrawTag = 0x7072696f72ULL;  // distinct from sample ids

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---- config (de)serialization ------------------------------------------

void check_keys(const json& j, std::initializer_list<const char*> known,
                const std::string& context) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (std::find_if(known.begin(), known.end(),
                         [&](const char* k) { return key == k; }) == known.end())
            throw SpecError(context + ": unknown key '" + key + "'");
    }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (const auto it = j.find(key); it != j.end()) out = it->get<T>();
}

InitScheme init_scheme_from_name(const std::string& name, const std::string& context) {
    if (name == "noise_draw") return InitScheme::noise_draw;
    if (name == "zeros") return InitScheme::zeros;
    if (name == "provided") return InitScheme::provided;
    throw SpecError(context + ": unknown init_scheme '" + name + "'");
}

const char* init_scheme_name(InitScheme s) {
    switch (s) {
        case InitScheme::noise_draw: return "noise_draw";
        case InitScheme::zeros: return "zeros";
        case InitScheme::provided: return "provided";
    }
    return "noise_draw";
}

}  // namespace

void PipelineConfig::validate() const {
    inversion.validate();
    if (!(psnr_threshold_db > 0.0)) throw SpecError("config: psnr_threshold_db must be positive");
    if (n_min_hits >= n_max) throw SpecError("config: n_min_hits must be below n_max");
    if (!(sigma_lo > 0.0 && sigma_hi >= sigma_lo && sigma_ratio > 1.0))
        throw SpecError("config: sigma grid needs 0 < lo <= hi and ratio > 1");
    if (workers < 1) throw SpecError("config: workers must be >= 1");
    if (histogram_bins < 1) throw SpecError("config: histogram_bins must be >= 1");
    if (prior_draws < 1) throw SpecError("config: prior_draws must be >= 1");
    if (sweep_n < 1) throw SpecError("config: sweep_n must be >= 1");
}

PipelineConfig pipeline_config_from_json_text(const std::string& text,
                                              const std::string& context) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SpecError(context + ": parse error: " + e.what());
    }
    check_keys(j, {"inversion", "likelihood", "pipeline"}, context);

    PipelineConfig cfg;
    try {
        if (const auto it = j.find("inversion"); it != j.end()) {
            const json& ji = *it;
            check_keys(ji,
                       {"learning_rate", "beta1", "beta2", "adam_epsilon", "max_iterations",
                        "stop_tolerance_db", "stop_window", "delta", "restarts", "init_scheme"},
                       context + " inversion");
            maybe(ji, "learning_rate", cfg.inversion.learning_rate);
            maybe(ji, "beta1", cfg.inversion.beta1);
            maybe(ji, "beta2", cfg.inversion.beta2);
            maybe(ji, "adam_epsilon", cfg.inversion.adam_epsilon);
            maybe(ji, "max_iterations", cfg.inversion.max_iterations);
            maybe(ji, "stop_tolerance_db", cfg.inversion.stop_tolerance_db);
            maybe(ji, "stop_window", cfg.inversion.stop_window);
            maybe(ji, "delta", cfg.inversion.delta);
            maybe(ji, "restarts", cfg.inversion.restarts);
            if (const auto is = ji.find("init_scheme"); is != ji.end())
                cfg.inversion.init_scheme =
                    init_scheme_from_name(is->get<std::string>(), context);
        }
        if (const auto it = j.find("likelihood"); it != j.end()) {
            const json& jl = *it;
            check_keys(jl, {"psnr_threshold_db", "n_max", "n_min_hits", "sigma_grid"},
                       context + " likelihood");
            maybe(jl, "psnr_threshold_db", cfg.psnr_threshold_db);
            maybe(jl, "n_max", cfg.n_max);
            maybe(jl, "n_min_hits", cfg.n_min_hits);
            if (const auto sg = jl.find("sigma_grid"); sg != jl.end()) {
                check_keys(*sg, {"lo", "hi", "ratio"}, context + " sigma_grid");
                maybe(*sg, "lo", cfg.sigma_lo);
                maybe(*sg, "hi", cfg.sigma_hi);
                maybe(*sg, "ratio", cfg.sigma_ratio);
            }
        }
        if (const auto it = j.find("pipeline"); it != j.end()) {
            const json& jp = *it;
            check_keys(jp,
                       {"workers", "mode", "histogram_bins", "prior_draws", "top_k",
                        "sweep_samples", "sweep_n", "svg"},
                       context + " pipeline");
            maybe(jp, "workers", cfg.workers);
            if (const auto m = jp.find("mode"); m != jp.end()) {
                const std::string mode = m->get<std::string>();
                if (mode == "both") {
                    cfg.both = true;
                } else if (mode == "constrained_only") {
                    cfg.both = false;
                } else {
                    throw SpecError(context + ": mode must be 'both' or 'constrained_only'");
                }
            }
            maybe(jp, "histogram_bins", cfg.histogram_bins);
            maybe(jp, "prior_draws", cfg.prior_draws);
            maybe(jp, "top_k", cfg.top_k);
            maybe(jp, "sweep_samples", cfg.sweep_samples);
            maybe(jp, "sweep_n", cfg.sweep_n);
            maybe(jp, "svg", cfg.svg);
        }
    } catch (const json::exception& e) {
        throw SpecError(context + ": malformed field: " + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string pipeline_config_to_json_text(const PipelineConfig& cfg) {
    json j;
    j["inversion"] = {{"learning_rate", cfg.inversion.learning_rate},
                      {"beta1", cfg.inversion.beta1},
                      {"beta2", cfg.inversion.beta2},
                      {"adam_epsilon", cfg.inversion.adam_epsilon},
                      {"max_iterations", cfg.inversion.max_iterations},
                      {"stop_tolerance_db", cfg.inversion.stop_tolerance_db},
                      {"stop_window", cfg.inversion.stop_window},
                      {"delta", cfg.inversion.delta},
                      {"restarts", cfg.inversion.restarts},
                      {"init_scheme", init_scheme_name(cfg.inversion.init_scheme)}};
    j["likelihood"] = {{"psnr_threshold_db", cfg.psnr_threshold_db},
                       {"n_max", cfg.n_max},
                       {"n_min_hits", cfg.n_min_hits},
                       {"sigma_grid",
                        {{"lo", cfg.sigma_lo}, {"hi", cfg.sigma_hi}, {"ratio", cfg.sigma_ratio}}}};
    j["pipeline"] = {{"workers", cfg.workers},
                     {"mode", cfg.both ? "both" : "constrained_only"},
                     {"histogram_bins", cfg.histogram_bins},
                     {"prior_draws", cfg.prior_draws},
                     {"top_k", cfg.top_k},
                     {"sweep_samples", cfg.sweep_samples},
                     {"sweep_n", cfg.sweep_n},
                     {"svg", cfg.svg}};
    return j.dump(2) + "\n";
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    return pipeline_config_from_json_text(read_file_bytes(path), path.string());
}

std::uint64_t pipeline_sample_seed(std::uint64_t global_seed, std::size_t sample_id) {
    return derive_seed(global_seed, sample_id);
}

// ---- per-sample evaluation ----------------------------------------------

namespace {

struct SampleOutcome {
    SampleRecord record;
    std::vector<double> z_constrained;  // kept for sigma sweeps
};

InversionResult best_of_restarts(const GeneratorSpec& spec, const Tensor& target,
                                 const InversionConfig& config, std::uint64_t seed) {
    InversionResult best;
    double best_mse = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < config.restarts; ++r) {
        InversionResult run = invert(spec, target, config, derive_seed(seed, r));
        if (run.final_mse < best_mse) {
            best_mse = run.final_mse;
            best = std::move(run);
        }
    }
    return best;
}

SampleOutcome evaluate_sample(const GeneratorSpec& spec, const Dataset& ds,
                              std::size_t id, const PipelineConfig& cfg,
                              std::uint64_t global_seed) {
    SampleOutcome out;
    SampleRecord& rec = out.record;
    rec.sample_id = id;
    rec.split = ds.split_of(id);

    const std::uint64_t sample_seed = pipeline_sample_seed(global_seed, id);
    try {
        const Tensor target =
            Tensor::vec(ds.samples[id]).reshaped(spec.output_shape);

        InversionConfig inv = cfg.inversion;
        if (cfg.both) {
            inv.constrained = false;
            const InversionResult unc =
                best_of_restarts(spec, target, inv, derive_seed(sample_seed, 1));
            rec.psnr_unconstrained_db = unc.final_psnr_db;
            rec.z_norm_sq_unconstrained = unc.z_norm_sq;
            rec.log_p_z_unconstrained = unc.log_p_z;
            rec.iterations_unconstrained = unc.iterations_used;
        }

        inv.constrained = true;
        InversionResult con =
            best_of_restarts(spec, target, inv, derive_seed(sample_seed, 2));
        rec.psnr_constrained_db = con.final_psnr_db;
        rec.z_norm_sq_constrained = con.z_norm_sq;
        rec.iterations_constrained = con.iterations_used;

        LikelihoodConfig lik;
        lik.threshold = threshold_from_psnr(cfg.psnr_threshold_db, spec.peak());
        lik.n_max = cfg.n_max;
        lik.n_min_hits = cfg.n_min_hits;
        lik.sigma_grid = geometric_grid(cfg.sigma_lo, cfg.sigma_hi, cfg.sigma_ratio);
        lik.seed = derive_seed(sample_seed, 3);
        const LikelihoodEstimate est = estimate_combined(spec, con.z_star, lik);
        rec.log10_unnormalized_likelihood = est.log_unnormalized / std::numbers::ln10;
        rec.sigma_used = est.sigma_used;
        rec.hits = est.hits;
        rec.n_used = est.n_used;
        rec.saturated = est.saturated;

        out.z_constrained = std::move(con.z_star);
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    return out;
}

// ---- serialization -------------------------------------------------------

json histogram_to_json(const Histogram& h) {
    json rows = json::array();
    for (const auto& bin : h) rows.push_back({bin.left, bin.right, bin.count});
    return rows;
}

json record_to_json(const SampleRecord& r) {
    json j;
    j["sample_id"] = r.sample_id;
    j["split"] = r.split;
    j["psnr_unconstrained_db"] = r.psnr_unconstrained_db;
    j["psnr_constrained_db"] = r.psnr_constrained_db;
    j["z_norm_sq_unconstrained"] = r.z_norm_sq_unconstrained;
    j["z_norm_sq_constrained"] = r.z_norm_sq_constrained;
    j["log_p_z_unconstrained"] = r.log_p_z_unconstrained;
    j["log10_unnormalized_likelihood"] = r.log10_unnormalized_likelihood;
    j["sigma_used"] = r.sigma_used;
    j["hits"] = r.hits;
    j["n_used"] = r.n_used;
    j["saturated"] = r.saturated;
    j["iterations_unconstrained"] = r.iterations_unconstrained;
    j["iterations_constrained"] = r.iterations_constrained;
    j["error"] = r.error;
    return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpecError("cannot write " + path.string());
    out << text;
}

std::string samples_csv(const std::vector<SampleRecord>& records) {
    std::ostringstream out;
    out << "sample_id,split,psnr_unconstrained_db,psnr_constrained_db,"
           "z_norm_sq_unconstrained,z_norm_sq_constrained,log_p_z_unconstrained,"
           "log10_unnormalized_likelihood,sigma_used,hits,n_used,saturated,"
           "iterations_unconstrained,iterations_constrained,error\n";
    for (const auto& r : records) {
        out << r.sample_id << ',' << r.split << ',' << fmt17(r.psnr_unconstrained_db) << ','
            << fmt17(r.psnr_constrained_db) << ',' << fmt17(r.z_norm_sq_unconstrained) << ','
            << fmt17(r.z_norm_sq_constrained) << ',' << fmt17(r.log_p_z_unconstrained) << ','
            << fmt17(r.log10_unnormalized_likelihood) << ',' << fmt17(r.sigma_used) << ','
            << r.hits << ',' << r.n_used << ',' << (r.saturated ? 1 : 0) << ','
            << r.iterations_unconstrained << ',' << r.iterations_constrained << ','
            << r.error << '\n';
    }
    return out.str();
}

std::string histogram_csv_rows(const std::string& tag, const Histogram& h) {
    std::ostringstream out;
    for (const auto& bin : h)
        out << tag << ',' << fmt17(bin.left) << ',' << fmt17(bin.right) << ',' << bin.count
            << '\n';
    return out.str();
}

// ---- minimal SVG quick-plots ----------------------------------------------

constexpr int kSvgW = 640, kSvgH = 400, kSvgPad = 40;

double svg_x(double v, double lo, double hi) {
    return kSvgPad + (v - lo) / (hi - lo) * (kSvgW - 2 * kSvgPad);
}
double svg_y(double v, double lo, double hi) {
    return kSvgH - kSvgPad - (v - lo) / (hi - lo) * (kSvgH - 2 * kSvgPad);
}

std::string svg_open() {
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSvgW << "\" height=\""
        << kSvgH << "\" viewBox=\"0 0 " << kSvgW << ' ' << kSvgH << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return out.str();
}

std::string svg_axes() {
    std::ostringstream out;
    out << "<line x1=\"" << kSvgPad << "\" y1=\"" << kSvgH - kSvgPad << "\" x2=\""
        << kSvgW - kSvgPad << "\" y2=\"" << kSvgH - kSvgPad
        << "\" stroke=\"black\"/>\n<line x1=\"" << kSvgPad << "\" y1=\"" << kSvgPad
        << "\" x2=\"" << kSvgPad << "\" y2=\"" << kSvgH - kSvgPad << "\" stroke=\"black\"/>\n";
    return out.str();
}

void svg_histogram(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, const Histogram*>>& series) {
    const char* colors[] = {"steelblue", "darkorange", "seagreen", "firebrick"};
    double lo = 0, hi = 1;
    std::size_t max_count = 1;
    bool first = true;
    for (const auto& [name, h] : series) {
        if (!h || h->empty()) continue;
        if (first) {
            lo = h->front().left;
            hi = h->back().right;
            first = false;
        }
        lo = std::min(lo, h->front().left);
        hi = std::max(hi, h->back().right);
        for (const auto& bin : *h) max_count = std::max(max_count, bin.count);
    }
    std::ostringstream out;
    out << svg_open() << svg_axes();
    std::size_t si = 0;
    for (const auto& [name, h] : series) {
        if (!h || h->empty()) continue;
        const char* color = colors[si++ % 4];
        for (const auto& bin : *h) {
            const double x0 = svg_x(bin.left, lo, hi);
            const double x1 = svg_x(bin.right, lo, hi);
            const double y = svg_y(static_cast<double>(bin.count), 0, static_cast<double>(max_count));
            out << "<rect x=\"" << x0 << "\" y=\"" << y << "\" width=\"" << x1 - x0
                << "\" height=\"" << (kSvgH - kSvgPad) - y << "\" fill=\"" << color
                << "\" fill-opacity=\"0.45\"/>\n";
        }
        out << "<text x=\"" << kSvgPad + 8 << "\" y=\"" << kSvgPad + 14 * si << "\" fill=\""
            << color << "\" font-size=\"12\">" << name << "</text>\n";
    }
    out << "</svg>\n";
    write_text_file(path, out.str());
}

void svg_points(const std::filesystem::path& path,
                const std::vector<std::pair<double, double>>& pts, bool connect) {
    if (pts.empty()) return;
    double xlo = pts[0].first, xhi = pts[0].first, ylo = pts[0].second, yhi = pts[0].second;
    for (const auto& [x, y] : pts) {
        xlo = std::min(xlo, x);
        xhi = std::max(xhi, x);
        ylo = std::min(ylo, y);
        yhi = std::max(yhi, y);
    }
    if (xlo == xhi) xhi = xlo + 1;
    if (ylo == yhi) yhi = ylo + 1;
    std::ostringstream out;
    out << svg_open() << svg_axes();
    if (connect) {
        out << "<polyline fill=\"none\" stroke=\"steelblue\" points=\"";
        for (const auto& [x, y] : pts) out << svg_x(x, xlo, xhi) << ',' << svg_y(y, ylo, yhi) << ' ';
        out << "\"/>\n";
    } else {
        for (const auto& [x, y] : pts)
            out << "<circle cx=\"" << svg_x(x, xlo, xhi) << "\" cy=\"" << svg_y(y, ylo, yhi)
                << "\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.7\"/>\n";
    }
    out << "</svg>\n";
    write_text_file(path, out.str());
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> rank_by_likelihood(
    std::span<const SampleRecord> records, std::size_t k) {
    if (k > records.size())
        throw std::invalid_argument("rank_by_likelihood: k exceeds record count");

    std::vector<const SampleRecord*> order;
    order.reserve(records.size());
    for (const auto& r : records) order.push_back(&r);
    std::sort(order.begin(), order.end(), [](const SampleRecord* a, const SampleRecord* b) {
        // finite > -inf > nan/error; then value descending; then id ascending
        auto rank = [](const SampleRecord* r) {
            if (!r->ok() || std::isnan(r->log10_unnormalized_likelihood)) return 2;
            if (std::isinf(r->log10_unnormalized_likelihood)) return 1;
            return 0;
        };
        const int ra = rank(a), rb = rank(b);
        if (ra != rb) return ra < rb;
        if (ra == 0 && a->log10_unnormalized_likelihood != b->log10_unnormalized_likelihood)
            return a->log10_unnormalized_likelihood > b->log10_unnormalized_likelihood;
        return a->sample_id < b->sample_id;
    });

    std::vector<std::size_t> top, bottom;
    for (std::size_t i = 0; i < k; ++i) top.push_back(order[i]->sample_id);
    for (std::size_t i = records.size() - k; i < records.size(); ++i)
        bottom.push_back(order[i]->sample_id);
    return {std::move(top), std::move(bottom)};
}

EvalReport run_pipeline(const std::filesystem::path& generator_path,
                        const std::filesystem::path& dataset_path,
                        const PipelineConfig& config,
                        const std::filesystem::path& out_dir, std::uint64_t seed) {
    config.validate();
    const GeneratorSpec spec = load_spec(generator_path);
    const Dataset ds = load_dataset(dataset_path);
    if (ds.count() == 0) throw SpecError("dataset " + dataset_path.string() + ": no samples");
    if (ds.flat_length != spec.output_numel())
        throw SpecError("dataset sample length " + std::to_string(ds.flat_length) +
                        " does not match generator output length " +
                        std::to_string(spec.output_numel()));
    for (std::size_t id : config.sweep_samples)
        if (id >= ds.count())
            throw SpecError("sweep sample id " + std::to_string(id) + " out of range");
    std::filesystem::create_directories(out_dir);

    // fan the samples out over a small pool; each sample's substreams depend
    // only on (seed, sample_id), so the outcome is worker-count independent
    std::vector<SampleOutcome> outcomes(ds.count());
    {
        std::atomic<std::size_t> next{0};
        const std::size_t n_workers = std::min<std::size_t>(config.workers, ds.count());
        auto work = [&] {
            for (std::size_t i = next.fetch_add(1); i < ds.count(); i = next.fetch_add(1))
                outcomes[i] = evaluate_sample(spec, ds, i, config, seed);
        };
        if (n_workers <= 1) {
            work();
        } else {
            std::vector<std::thread> pool;
            pool.reserve(n_workers);
            for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
            for (auto& t : pool) t.join();
        }
    }

    EvalReport rep;
    rep.tool_version = kToolVersion;
    rep.generator_hash = fnv1a_hex(read_file_bytes(generator_path));
    rep.seed = seed;
    rep.note =
        "log-likelihood values are unnormalized: the additive constant depending only on "
        "the noise distribution is omitted from every estimate";
    // worker count never affects the numbers, so it stays out of the echo to
    // keep reports byte-identical across pool sizes
    {
        json echo = json::parse(pipeline_config_to_json_text(config));
        echo["pipeline"].erase("workers");
        rep.config_echo_json = echo.dump(2) + "\n";
    }
    rep.records.reserve(ds.count());
    for (auto& o : outcomes) rep.records.push_back(o.record);

    // ||z*||^2 histogram against fresh prior draws (shared edges); the
    // unconstrained norms are the interesting ones when available
    std::vector<double> norms;
    for (const auto& r : rep.records) {
        if (!r.ok()) continue;
        const double v = config.both ? r.z_norm_sq_unconstrained : r.z_norm_sq_constrained;
        if (std::isfinite(v)) norms.push_back(v);
    }
    std::vector<double> prior_norms;
    prior_norms.reserve(config.prior_draws);
    for (const auto& z : sample_noise(spec.noise, derive_seed(seed, kPriorDrawTag),
                                      config.prior_draws)) {
        double n2 = 0.0;
        for (double v : z) n2 += v * v;
        prior_norms.push_back(n2);
    }
    if (!norms.empty()) {
        const std::array<std::span<const double>, 2> sets = {std::span<const double>(norms),
                                                             std::span<const double>(prior_norms)};
        const auto edges = shared_edges(sets, config.histogram_bins);
        rep.znorm_hist = make_histogram(norms, edges);
        rep.znorm_prior_hist = make_histogram(prior_norms, edges);
    }

    // log10 likelihood histograms per split; -inf sentinels cannot be binned
    std::map<std::string, std::vector<double>> by_split;
    for (const auto& r : rep.records) {
        if (!r.ok() || !std::isfinite(r.log10_unnormalized_likelihood)) continue;
        by_split[r.split.empty() ? "all" : r.split].push_back(r.log10_unnormalized_likelihood);
    }
    for (const auto& [split, values] : by_split) {
        rep.loglik_hists.emplace_back(split, make_histogram(values, config.histogram_bins));
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                            static_cast<double>(values.size());
        rep.loglik_means.emplace_back(split, mean);
    }

    std::vector<SampleRecord> ranked;
    for (const auto& r : rep.records)
        if (r.ok()) ranked.push_back(r);
    const std::size_t k = std::min(config.top_k, ranked.size());
    if (k > 0) std::tie(rep.most_likely, rep.least_likely) = rank_by_likelihood(ranked, k);

    for (std::size_t id : config.sweep_samples) {
        if (!outcomes[id].record.ok()) continue;
        SweepCurve curve;
        curve.sample_id = id;
        curve.points = sigma_sweep(spec, outcomes[id].z_constrained,
                                   geometric_grid(config.sigma_lo, config.sigma_hi,
                                                  config.sigma_ratio),
                                   config.sweep_n, derive_seed(seed, 3, id));
        rep.sweeps.push_back(std::move(curve));
    }

    // ---- files ----
    json j;
    j["metadata"] = {{"tool_version", rep.tool_version},
                     {"generator_hash", rep.generator_hash},
                     {"seed", rep.seed},
                     {"note", rep.note},
                     {"config", json::parse(rep.config_echo_json)}};
    json samples = json::array();
    for (const auto& r : rep.records) samples.push_back(record_to_json(r));
    j["samples"] = std::move(samples);
    json agg;
    agg["z_norm_sq_histogram"] = {{"inversion", histogram_to_json(rep.znorm_hist)},
                                  {"prior", histogram_to_json(rep.znorm_prior_hist)}};
    json lh = json::object();
    for (const auto& [split, hist] : rep.loglik_hists) lh[split] = histogram_to_json(hist);
    agg["log10_likelihood_histograms"] = std::move(lh);
    json lm = json::object();
    for (const auto& [split, mean] : rep.loglik_means) lm[split] = mean;
    agg["log10_likelihood_means"] = std::move(lm);
    json scatter = json::array();
    for (const auto& r : rep.records) {
        if (!r.ok()) continue;
        scatter.push_back({r.sample_id, r.psnr_constrained_db, r.log10_unnormalized_likelihood});
    }
    agg["scatter"] = std::move(scatter);
    agg["ranking"] = {{"most_likely", rep.most_likely}, {"least_likely", rep.least_likely}};
    json sweeps = json::object();
    for (const auto& s : rep.sweeps) {
        json pts = json::array();
        for (const auto& [sigma, psnr] : s.points) pts.push_back({sigma, psnr});
        sweeps[std::to_string(s.sample_id)] = std::move(pts);
    }
    agg["sweeps"] = std::move(sweeps);
    j["aggregates"] = std::move(agg);
    write_text_file(out_dir / "report.json", j.dump(2) + "\n");

    write_text_file(out_dir / "samples.csv", samples_csv(rep.records));

    std::string znorm_csv = "series,bin_left,bin_right,count\n";
    znorm_csv += histogram_csv_rows("inversion", rep.znorm_hist);
    znorm_csv += histogram_csv_rows("prior", rep.znorm_prior_hist);
    write_text_file(out_dir / "hist_znorm.csv", znorm_csv);

    std::string loglik_csv = "split,bin_left,bin_right,count\n";
    for (const auto& [split, hist] : rep.loglik_hists)
        loglik_csv += histogram_csv_rows(split, hist);
    write_text_file(out_dir / "hist_loglik.csv", loglik_csv);

    std::ostringstream scatter_csv;
    scatter_csv << "sample_id,psnr_constrained_db,log10_unnormalized_likelihood\n";
    for (const auto& r : rep.records) {
        if (!r.ok()) continue;
        scatter_csv << r.sample_id << ',' << fmt17(r.psnr_constrained_db) << ','
                    << fmt17(r.log10_unnormalized_likelihood) << '\n';
    }
    write_text_file(out_dir / "scatter.csv", scatter_csv.str());

    for (const auto& s : rep.sweeps) {
        std::ostringstream sweep_csv;
        sweep_csv << "sigma_eps,mean_psnr_db\n";
        for (const auto& [sigma, psnr] : s.points)
            sweep_csv << fmt17(sigma) << ',' << fmt17(psnr) << '\n';
        write_text_file(out_dir / ("sweep_" + std::to_string(s.sample_id) + ".csv"),
                        sweep_csv.str());
    }

    if (config.svg) {
        svg_histogram(out_dir / "hist_znorm.svg",
                      {{"inversion", &rep.znorm_hist}, {"prior", &rep.znorm_prior_hist}});
        std::vector<std::pair<std::string, const Histogram*>> lh_series;
        for (const auto& [split, hist] : rep.loglik_hists) lh_series.emplace_back(split, &hist);
        svg_histogram(out_dir / "hist_loglik.svg", lh_series);
        std::vector<std::pair<double, double>> scatter_pts;
        for (const auto& r : rep.records) {
            if (!r.ok() || !std::isfinite(r.log10_unnormalized_likelihood)) continue;
            scatter_pts.emplace_back(r.log10_unnormalized_likelihood, r.psnr_constrained_db);
        }
        svg_points(out_dir / "scatter.svg", scatter_pts, false);
        for (const auto& s : rep.sweeps) {
            std::vector<std::pair<double, double>> pts;
            for (const auto& [sigma, psnr] : s.points) pts.emplace_back(std::log10(sigma), psnr);
            svg_points(out_dir / ("sweep_" + std::to_string(s.sample_id) + ".svg"), pts, true);
        }
    }

    return rep;
}

EvalReport run_pipeline(const std::filesystem::path& generator_path,
                        const std::filesystem::path& dataset_path,
                        const std::filesystem::path& config_path,
                        const std::filesystem::path& out_dir, std::uint64_t seed) {
    const PipelineConfig config =
        config_path.empty() ? PipelineConfig{} : load_pipeline_config(config_path);
    return run_pipeline(generator_path, dataset_path, config, out_dir, seed);
}

}  // namespace latenteval
