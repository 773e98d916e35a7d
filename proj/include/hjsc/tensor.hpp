#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "hjsc/rng.hpp"

namespace hjsc {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using ArrayXX = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// A batch of CHW feature maps. Storage is channels x (n*h*w): row = channel,
// column = i*(h*w) + y*w + x, so one image is a contiguous block of columns
// and convolution lowers to a single GEMM over the whole batch.
template <class Scalar>
struct Batch {
    int n = 0, c = 0, h = 0, w = 0;
    MatrixX<Scalar> m;

    Batch() = default;
    Batch(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), m(MatrixX<Scalar>::Zero(c_, std::ptrdiff_t(n_) * h_ * w_)) {}

    int pixels() const { return h * w; }
    std::ptrdiff_t cols() const { return std::ptrdiff_t(n) * h * w; }

    auto image(int i) { return m.middleCols(std::ptrdiff_t(i) * pixels(), pixels()); }
    auto image(int i) const { return m.middleCols(std::ptrdiff_t(i) * pixels(), pixels()); }

    Scalar& at(int i, int ch, int y, int x) { return m(ch, std::ptrdiff_t(i) * pixels() + y * w + x); }
    Scalar at(int i, int ch, int y, int x) const { return m(ch, std::ptrdiff_t(i) * pixels() + y * w + x); }

    bool same_shape(const Batch& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

    template <class S2>
    Batch<S2> cast() const {
        Batch<S2> out;
        out.n = n;
        out.c = c;
        out.h = h;
        out.w = w;
        out.m = m.template cast<S2>();
        return out;
    }
};

template <class Scalar>
Batch<Scalar> random_batch(int n, int c, int h, int w, Rng& rng, Scalar lo = Scalar(0), Scalar hi = Scalar(1)) {
    Batch<Scalar> b(n, c, h, w);
    for (std::ptrdiff_t j = 0; j < b.m.cols(); ++j)
        for (int i = 0; i < b.m.rows(); ++i)
            b.m(i, j) = lo + Scalar(rng.uniform()) * (hi - lo);
    return b;
}

inline void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace hjsc
