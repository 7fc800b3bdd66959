#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace latenteval {

/// Dense row-major tensor of 64-bit reals.
///
/// Shape is metadata over the flat buffer; all arithmetic in this project
/// runs over the flat view. The one invariant is product(shape) == data size,
/// enforced on construction.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape_, std::vector<double> data_);

    static Tensor vec(std::vector<double> values);
    static Tensor zeros(std::vector<std::size_t> shape_);

    std::size_t numel() const { return data.size(); }
    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    // same data, new shape metadata (numel must match)
    Tensor reshaped(std::vector<std::size_t> new_shape) const;
};

enum class Activation { relu, leaky_relu, tanh, sigmoid, identity };

/// One layer of a feed-forward generator: an affine map or a pointwise
/// nonlinearity. Weights are constants here; only the input vector is ever
/// differentiated.
struct LayerSpec {
    enum class Kind { dense, activation };
    Kind kind = Kind::activation;

    // dense
    std::size_t out_dim = 0;
    std::size_t in_dim = 0;
    std::vector<double> weight;  // out_dim x in_dim, row-major
    std::vector<double> bias;    // out_dim

    // activation
    Activation fn = Activation::identity;
    double slope = 0.0;  // leaky_relu only, must be in (0, 1)

    static LayerSpec dense(std::size_t out, std::size_t in,
                           std::vector<double> w, std::vector<double> b);
    static LayerSpec activation_layer(Activation fn, double slope = 0.0);

    // throws std::invalid_argument naming `index` on malformed layers
    void validate(std::size_t index) const;

    std::size_t output_width(std::size_t input_width) const {
        return kind == Kind::dense ? out_dim : input_width;
    }
};

/// Evaluate the layer stack on a flat input. Pure: no mutation, identical
/// inputs give bit-identical outputs. Throws std::invalid_argument naming the
/// offending layer index on width mismatches.
Tensor forward(std::span<const LayerSpec> layers, const Tensor& z);

/// Forward pass keeping every intermediate: result[0] is z, result[i+1] the
/// output of layer i. The input of an activation layer i is result[i], which
/// is what kink-proximity checks need.
std::vector<Tensor> forward_trace(std::span<const LayerSpec> layers, const Tensor& z);

/// Reverse-mode vector-Jacobian product: returns J^T * cotangent with
/// J = dG/dz at z. relu contributes subgradient 0 at exactly 0.
Tensor grad_input(std::span<const LayerSpec> layers, const Tensor& z,
                  const Tensor& cotangent);

/// MSE(G(z), target) and its gradient (2/numel) * J^T (G(z) - target).
std::pair<double, Tensor> objective_and_grad(std::span<const LayerSpec> layers,
                                             const Tensor& z, const Tensor& target);

}  // namespace latenteval
