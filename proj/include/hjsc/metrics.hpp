#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hjsc/tensor.hpp"

namespace hjsc {

inline constexpr double kPsnrCapDb = 100.0;

// PSNR on the 8-bit pixel scale: 10*log10(255^2 / MSE255). Both images are
// expected in [0,1]; the reconstruction is clamped before scaling. Identical
// images report the documented 100 dB cap instead of infinity.
template <class Scalar>
double evaluate_psnr(const Batch<Scalar>& ref, const Batch<Scalar>& rec) {
    if (!ref.same_shape(rec)) throw std::invalid_argument("evaluate_psnr: shape mismatch");
    if (ref.cols() == 0 || ref.c == 0) throw std::invalid_argument("evaluate_psnr: empty input");
    double se = 0.0;
    for (std::ptrdiff_t j = 0; j < ref.m.cols(); ++j)
        for (int i = 0; i < ref.m.rows(); ++i) {
            const double a = 255.0 * double(ref.m(i, j));
            const double b = 255.0 * std::clamp(double(rec.m(i, j)), 0.0, 1.0);
            se += (a - b) * (a - b);
        }
    const double mse = se / (double(ref.m.rows()) * double(ref.m.cols()));
    if (mse <= 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(255.0 * 255.0 / mse));
}

template <class Scalar>
double evaluate_psnr_255mse(double mse255) {
    if (mse255 <= 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(255.0 * 255.0 / mse255));
}

// Mean squared error over all elements (the Eq.-style distortion on the
// [0,1] pixel scale).
template <class Scalar>
double mean_squared_error(const Batch<Scalar>& a, const Batch<Scalar>& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("mean_squared_error: shape mismatch");
    return (a.m - b.m).squaredNorm() / (double(a.m.rows()) * double(a.m.cols()));
}

}  // namespace hjsc
