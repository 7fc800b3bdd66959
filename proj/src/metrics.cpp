#include "latenteval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace latenteval {

double mse_flat(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw std::invalid_argument("mse: length mismatch " + std::to_string(x.size()) +
                                    " vs " + std::to_string(y.size()));
    if (x.empty()) throw std::invalid_argument("mse: empty input");
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        sq += d * d;
    }
    return sq / static_cast<double>(x.size());
}

double mse(const Tensor& x, const Tensor& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("mse: shape mismatch");
    return mse_flat(x.data, y.data);
}

double psnr_from_mse(double mse_value, double peak) {
    if (peak <= 0.0) throw std::invalid_argument("psnr: peak must be positive");
    if (mse_value < 0.0) throw std::invalid_argument("psnr: negative mse");
    if (mse_value == 0.0) return kPsnrCapDb;
    return std::min(10.0 * std::log10(peak * peak / mse_value), kPsnrCapDb);
}

double psnr_db(const Tensor& x, const Tensor& y, double peak) {
    return psnr_from_mse(mse(x, y), peak);
}

DistanceThreshold threshold_from_psnr(double psnr_floor_db, double peak) {
    if (peak <= 0.0) throw std::invalid_argument("threshold: peak must be positive");
    DistanceThreshold t;
    t.psnr_floor_db = psnr_floor_db;
    t.mse_ceiling = peak * peak * std::pow(10.0, -psnr_floor_db / 10.0);
    return t;
}

}  // namespace latenteval
