#pragma once

#include <span>

#include "latenteval/tensor.hpp"

namespace latenteval {

/// PSNR reported for a zero-MSE pair. Keeps reports finite and sortable;
/// far above anything a nonzero error can reach.
inline constexpr double kPsnrCapDb = 300.0;

/// Mean squared error over all elements: ||x - y||^2 / numel.
/// For an HxWx3 image tensor numel is 3K with K the pixel count.
/// Requires identical shapes.
double mse(const Tensor& x, const Tensor& y);

// flat fast path used by the hot estimator loops; lengths must match
double mse_flat(std::span<const double> x, std::span<const double> y);

/// 10 * log10(peak^2 / mse), capped at kPsnrCapDb.
double psnr_from_mse(double mse_value, double peak);
double psnr_db(const Tensor& x, const Tensor& y, double peak);

/// A hit-test threshold, carried in both units: the configured PSNR floor
/// and the equivalent MSE ceiling peak^2 * 10^(-floor/10).
struct DistanceThreshold {
    double psnr_floor_db = 0.0;
    double mse_ceiling = 0.0;
};

DistanceThreshold threshold_from_psnr(double psnr_floor_db, double peak);

}  // namespace latenteval
