#include "latenteval/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "latenteval/rng.hpp"

namespace latenteval {

namespace {

constexpr const char* kFormatTag = "evgs.generator/1";

using nlohmann::json;

[[noreturn]] void fail(const std::string& context, const std::string& what) {
    throw SpecError(context + ": " + what);
}

}  // namespace

void NoiseDistribution::validate() const {
    if (dim == 0) throw SpecError("noise distribution: dim must be positive");
    if (kind == NoiseKind::uniform_box && !(hi > lo))
        throw SpecError("noise distribution: uniform_box requires hi > lo");
}

std::size_t GeneratorSpec::output_numel() const {
    std::size_t n = 1;
    for (std::size_t e : output_shape) n *= e;
    return output_shape.empty() ? 0 : n;
}

void GeneratorSpec::validate() const {
    if (latent_dim == 0) throw SpecError("invariant violation: latent_dim must be positive");
    if (layers.empty()) throw SpecError("invariant violation: generator has no layers");
    if (output_shape.empty()) throw SpecError("invariant violation: empty output_shape");
    if (!(output_max > output_min))
        throw SpecError("invariant violation: output_range max must exceed min");

    for (std::size_t i = 0; i < layers.size(); ++i) {
        try {
            layers[i].validate(i);
        } catch (const std::invalid_argument& e) {
            throw SpecError(std::string("invariant violation: ") + e.what());
        }
    }

    // widths must chain from latent_dim through to product(output_shape)
    std::size_t width = latent_dim;
    bool saw_dense = false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        if (l.kind == LayerSpec::Kind::dense) {
            if (l.in_dim != width)
                throw SpecError("invariant violation: layer " + std::to_string(i) +
                                " expects input width " + std::to_string(l.in_dim) +
                                " but receives " + std::to_string(width) +
                                (saw_dense ? "" : " (latent_dim)"));
            saw_dense = true;
        }
        width = l.output_width(width);
    }
    if (width != output_numel())
        throw SpecError("invariant violation: final layer width " + std::to_string(width) +
                        " does not equal product(output_shape) = " +
                        std::to_string(output_numel()));

    noise.validate();
    if (noise.dim != latent_dim)
        throw SpecError("invariant violation: noise dim " + std::to_string(noise.dim) +
                        " does not equal latent_dim " + std::to_string(latent_dim));
}

namespace {

std::string activation_name(Activation fn) {
    switch (fn) {
        case Activation::relu: return "relu";
        case Activation::leaky_relu: return "leaky_relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
        case Activation::identity: return "identity";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name, const std::string& context) {
    if (name == "relu") return Activation::relu;
    if (name == "leaky_relu") return Activation::leaky_relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "identity") return Activation::identity;
    fail(context, "unknown activation '" + name + "'");
}

const json& require(const json& j, const char* key, const std::string& context) {
    const auto it = j.find(key);
    if (it == j.end()) fail(context, std::string("missing field '") + key + "'");
    return *it;
}

json noise_to_json(const NoiseDistribution& n) {
    json j;
    if (n.kind == NoiseKind::standard_gaussian) {
        j["kind"] = "standard_gaussian";
    } else {
        j["kind"] = "uniform_box";
        j["lo"] = n.lo;
        j["hi"] = n.hi;
    }
    return j;
}

NoiseDistribution noise_from_json(const json& j, std::size_t latent_dim,
                                  const std::string& context) {
    NoiseDistribution n;
    n.dim = latent_dim;
    const std::string kind = require(j, "kind", context).get<std::string>();
    if (kind == "standard_gaussian") {
        n.kind = NoiseKind::standard_gaussian;
    } else if (kind == "uniform_box") {
        n.kind = NoiseKind::uniform_box;
        n.lo = require(j, "lo", context).get<double>();
        n.hi = require(j, "hi", context).get<double>();
    } else {
        fail(context, "unknown noise kind '" + kind + "'");
    }
    return n;
}

}  // namespace

std::string spec_to_json_text(const GeneratorSpec& spec) {
    spec.validate();
    json j;
    j["format"] = kFormatTag;
    j["latent_dim"] = spec.latent_dim;
    j["noise"] = noise_to_json(spec.noise);
    j["output_shape"] = spec.output_shape;
    j["output_range"] = {spec.output_min, spec.output_max};
    json layers = json::array();
    for (const LayerSpec& l : spec.layers) {
        json jl;
        if (l.kind == LayerSpec::Kind::dense) {
            jl["kind"] = "dense";
            jl["out"] = l.out_dim;
            jl["in"] = l.in_dim;
            jl["weight"] = l.weight;
            jl["bias"] = l.bias;
        } else {
            jl["kind"] = "activation";
            jl["fn"] = activation_name(l.fn);
            if (l.fn == Activation::leaky_relu) jl["slope"] = l.slope;
        }
        layers.push_back(std::move(jl));
    }
    j["layers"] = std::move(layers);
    return j.dump(2) + "\n";
}

GeneratorSpec spec_from_json_text(const std::string& text, const std::string& context) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(context, std::string("parse error: ") + e.what());
    }

    try {
        const std::string format = require(j, "format", context).get<std::string>();
        if (format != kFormatTag)
            fail(context, "unsupported format tag '" + format + "' (expected " + kFormatTag + ")");

        GeneratorSpec spec;
        spec.latent_dim = require(j, "latent_dim", context).get<std::size_t>();
        spec.output_shape =
            require(j, "output_shape", context).get<std::vector<std::size_t>>();
        const auto range = require(j, "output_range", context).get<std::vector<double>>();
        if (range.size() != 2) fail(context, "output_range must hold exactly [min, max]");
        spec.output_min = range[0];
        spec.output_max = range[1];
        spec.noise = noise_from_json(require(j, "noise", context), spec.latent_dim, context);

        const json& jlayers = require(j, "layers", context);
        if (!jlayers.is_array()) fail(context, "'layers' must be an array");
        for (std::size_t i = 0; i < jlayers.size(); ++i) {
            const json& jl = jlayers[i];
            const std::string lctx = context + " layers[" + std::to_string(i) + "]";
            const std::string kind = require(jl, "kind", lctx).get<std::string>();
            if (kind == "dense") {
                spec.layers.push_back(LayerSpec::dense(
                    require(jl, "out", lctx).get<std::size_t>(),
                    require(jl, "in", lctx).get<std::size_t>(),
                    require(jl, "weight", lctx).get<std::vector<double>>(),
                    require(jl, "bias", lctx).get<std::vector<double>>()));
            } else if (kind == "activation") {
                const Activation fn =
                    activation_from_name(require(jl, "fn", lctx).get<std::string>(), lctx);
                const double slope =
                    fn == Activation::leaky_relu ? require(jl, "slope", lctx).get<double>() : 0.0;
                spec.layers.push_back(LayerSpec::activation_layer(fn, slope));
            } else {
                fail(lctx, "unknown layer kind '" + kind + "'");
            }
        }

        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        fail(context, std::string("malformed field: ") + e.what());
    }
}

GeneratorSpec load_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError("cannot open generator file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return spec_from_json_text(buf.str(), path.string());
}

void save_spec(const GeneratorSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SpecError("cannot write generator file " + path.string());
    out << spec_to_json_text(spec);
}

Tensor generate(const GeneratorSpec& spec, std::span<const double> z) {
    if (z.size() != spec.latent_dim)
        throw std::invalid_argument("latent vector length " + std::to_string(z.size()) +
                                    " does not equal latent_dim " +
                                    std::to_string(spec.latent_dim));
    Tensor out = forward(spec.layers, Tensor::vec({z.begin(), z.end()}));
    return out.reshaped(spec.output_shape);
}

std::vector<std::vector<double>> sample_noise(const NoiseDistribution& dist,
                                              std::uint64_t seed, std::size_t count) {
    dist.validate();
    Rng rng(seed);
    std::vector<std::vector<double>> draws(count);
    for (auto& z : draws) {
        z.resize(dist.dim);
        if (dist.kind == NoiseKind::standard_gaussian) {
            for (double& v : z) v = rng.normal();
        } else {
            for (double& v : z) v = rng.uniform(dist.lo, dist.hi);
        }
    }
    return draws;
}

double log_density(const NoiseDistribution& dist, std::span<const double> z) {
    if (z.size() != dist.dim)
        throw std::invalid_argument("log_density: vector length does not equal noise dim");
    if (dist.kind == NoiseKind::standard_gaussian) {
        double norm_sq = 0.0;
        for (double v : z) norm_sq += v * v;
        const double d = static_cast<double>(dist.dim);
        return -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * norm_sq;
    }
    for (double v : z) {
        if (v < dist.lo || v > dist.hi) return -std::numeric_limits<double>::infinity();
    }
    return -static_cast<double>(dist.dim) * std::log(dist.hi - dist.lo);
}

bool in_typical_set(const NoiseDistribution& dist, std::span<const double> z, double delta) {
    if (z.size() != dist.dim)
        throw std::invalid_argument("in_typical_set: vector length does not equal noise dim");
    if (dist.kind == NoiseKind::standard_gaussian) {
        double norm_sq = 0.0;
        for (double v : z) norm_sq += v * v;
        return norm_sq <= static_cast<double>(dist.dim) + delta;
    }
    for (double v : z) {
        if (v < dist.lo || v > dist.hi) return false;
    }
    return true;
}

void project_to_typical_set(const NoiseDistribution& dist, std::span<double> z, double delta) {
    if (z.size() != dist.dim)
        throw std::invalid_argument("project_to_typical_set: vector length does not equal noise dim");
    if (dist.kind == NoiseKind::standard_gaussian) {
        double norm_sq = 0.0;
        for (double v : z) norm_sq += v * v;
        const double bound = static_cast<double>(dist.dim) + delta;
        if (norm_sq > bound) {
            const double scale = std::sqrt(bound / norm_sq);
            for (double& v : z) v *= scale;
        }
    } else {
        for (double& v : z) v = std::clamp(v, dist.lo, dist.hi);
    }
}

}  // namespace latenteval
