#include "latenteval/tensor.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace latenteval {

namespace {

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t e : shape) n *= e;
    return shape.empty() ? 0 : n;
}

double apply_activation(Activation fn, double slope, double x) {
    switch (fn) {
        case Activation::relu: return x > 0.0 ? x : 0.0;
        case Activation::leaky_relu: return x > 0.0 ? x : slope * x;
        case Activation::tanh: return std::tanh(x);
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::identity: return x;
    }
    return x;
}

// derivative at the pre-activation value x; relu' at exactly 0 is 0
double activation_derivative(Activation fn, double slope, double x) {
    switch (fn) {
        case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
        case Activation::leaky_relu: return x > 0.0 ? 1.0 : slope;
        case Activation::tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
        case Activation::identity: return 1.0;
    }
    return 1.0;
}

[[noreturn]] void layer_width_error(std::size_t index, std::size_t want, std::size_t got) {
    throw std::invalid_argument("layer " + std::to_string(index) +
                                ": dense expects input width " + std::to_string(want) +
                                ", got " + std::to_string(got));
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    for (std::size_t e : shape) {
        if (e == 0) throw std::invalid_argument("tensor shape has zero extent");
    }
    if (shape_numel(shape) != data.size()) {
        throw std::invalid_argument("tensor shape/data mismatch: shape holds " +
                                    std::to_string(shape_numel(shape)) + " elements, data has " +
                                    std::to_string(data.size()));
    }
}

Tensor Tensor::vec(std::vector<double> values) {
    const std::size_t n = values.size();
    return Tensor({n}, std::move(values));
}

Tensor Tensor::zeros(std::vector<std::size_t> shape_) {
    std::vector<double> d(shape_numel(shape_), 0.0);
    return Tensor(std::move(shape_), std::move(d));
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    if (shape_numel(new_shape) != data.size()) {
        throw std::invalid_argument("reshape to incompatible element count");
    }
    return Tensor(std::move(new_shape), data);
}

LayerSpec LayerSpec::dense(std::size_t out, std::size_t in,
                           std::vector<double> w, std::vector<double> b) {
    LayerSpec l;
    l.kind = Kind::dense;
    l.out_dim = out;
    l.in_dim = in;
    l.weight = std::move(w);
    l.bias = std::move(b);
    return l;
}

LayerSpec LayerSpec::activation_layer(Activation fn, double slope) {
    LayerSpec l;
    l.kind = Kind::activation;
    l.fn = fn;
    l.slope = slope;
    return l;
}

void LayerSpec::validate(std::size_t index) const {
    const std::string where = "layer " + std::to_string(index) + ": ";
    if (kind == Kind::dense) {
        if (out_dim == 0 || in_dim == 0)
            throw std::invalid_argument(where + "dense layer with zero width");
        if (weight.size() != out_dim * in_dim)
            throw std::invalid_argument(where + "weight has " + std::to_string(weight.size()) +
                                        " entries, expected " + std::to_string(out_dim * in_dim));
        if (bias.size() != out_dim)
            throw std::invalid_argument(where + "bias length " + std::to_string(bias.size()) +
                                        " does not equal weight row count " +
                                        std::to_string(out_dim));
    } else {
        if (fn == Activation::leaky_relu && !(slope > 0.0 && slope < 1.0))
            throw std::invalid_argument(where + "leaky_relu slope must be in (0, 1)");
    }
}

namespace {

void run_layer(const LayerSpec& layer, std::size_t index,
               const std::vector<double>& in, std::vector<double>& out) {
    if (layer.kind == LayerSpec::Kind::dense) {
        if (in.size() != layer.in_dim) layer_width_error(index, layer.in_dim, in.size());
        out.assign(layer.out_dim, 0.0);
        for (std::size_t r = 0; r < layer.out_dim; ++r) {
            const double* wrow = layer.weight.data() + r * layer.in_dim;
            double acc = layer.bias[r];
            for (std::size_t c = 0; c < layer.in_dim; ++c) acc += wrow[c] * in[c];
            out[r] = acc;
        }
    } else {
        out.resize(in.size());
        for (std::size_t i = 0; i < in.size(); ++i)
            out[i] = apply_activation(layer.fn, layer.slope, in[i]);
    }
}

}  // namespace

Tensor forward(std::span<const LayerSpec> layers, const Tensor& z) {
    std::vector<double> cur = z.data;
    std::vector<double> next;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        run_layer(layers[i], i, cur, next);
        cur.swap(next);
    }
    return Tensor::vec(std::move(cur));
}

std::vector<Tensor> forward_trace(std::span<const LayerSpec> layers, const Tensor& z) {
    std::vector<Tensor> trace;
    trace.reserve(layers.size() + 1);
    trace.push_back(Tensor::vec(z.data));
    std::vector<double> next;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        run_layer(layers[i], i, trace.back().data, next);
        trace.push_back(Tensor::vec(next));
    }
    return trace;
}

Tensor grad_input(std::span<const LayerSpec> layers, const Tensor& z,
                  const Tensor& cotangent) {
    const auto trace = forward_trace(layers, z);
    if (cotangent.numel() != trace.back().numel()) {
        throw std::invalid_argument("cotangent length " + std::to_string(cotangent.numel()) +
                                    " does not match output length " +
                                    std::to_string(trace.back().numel()));
    }

    std::vector<double> grad = cotangent.data;
    std::vector<double> prev;
    for (std::size_t i = layers.size(); i-- > 0;) {
        const LayerSpec& layer = layers[i];
        const std::vector<double>& layer_in = trace[i].data;
        if (layer.kind == LayerSpec::Kind::dense) {
            // grad_in = W^T grad_out
            prev.assign(layer.in_dim, 0.0);
            for (std::size_t r = 0; r < layer.out_dim; ++r) {
                const double* wrow = layer.weight.data() + r * layer.in_dim;
                const double g = grad[r];
                for (std::size_t c = 0; c < layer.in_dim; ++c) prev[c] += wrow[c] * g;
            }
            grad.swap(prev);
        } else {
            for (std::size_t j = 0; j < grad.size(); ++j)
                grad[j] *= activation_derivative(layer.fn, layer.slope, layer_in[j]);
        }
    }
    return Tensor::vec(std::move(grad));
}

std::pair<double, Tensor> objective_and_grad(std::span<const LayerSpec> layers,
                                             const Tensor& z, const Tensor& target) {
    const Tensor out = forward(layers, z);
    if (out.numel() != target.numel()) {
        throw std::invalid_argument("target length " + std::to_string(target.numel()) +
                                    " does not match generator output length " +
                                    std::to_string(out.numel()));
    }
    const std::size_t n = out.numel();
    std::vector<double> residual(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        residual[i] = out.data[i] - target.data[i];
        sq += residual[i] * residual[i];
    }
    const double objective = sq / static_cast<double>(n);
    // d/dz MSE = (2/n) J^T r
    const double scale = 2.0 / static_cast<double>(n);
    for (double& r : residual) r *= scale;
    Tensor grad = grad_input(layers, z, Tensor::vec(std::move(residual)));
    return {objective, std::move(grad)};
}

}  // namespace latenteval
