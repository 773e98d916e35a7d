#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

#include "hjsc/rng.hpp"
#include "hjsc/tensor.hpp"

namespace hjsc {

// Channel-input/output vector of k complex symbols under the unit
// average-power convention (1/k)*sum|x_i|^2 = 1.
template <class Scalar>
struct SymbolVector {
    VectorX<std::complex<Scalar>> symbols;

    int k() const { return int(symbols.size()); }

    Scalar mean_power() const {
        if (symbols.size() == 0) return Scalar(0);
        return symbols.squaredNorm() / Scalar(symbols.size());
    }
};

// snr_db and the per-complex-dimension noise variance, tied by the
// SNR = 1/sigma^2 convention.
struct NoiseSpec {
    double snr_db = 0.0;
    double sigma2 = 1.0;

    static NoiseSpec from_snr_db(double snr_db) {
        NoiseSpec s;
        s.snr_db = snr_db;
        s.sigma2 = std::pow(10.0, -snr_db / 10.0);
        return s;
    }
    static NoiseSpec from_sigma2(double sigma2) {
        if (!(sigma2 > 0.0)) throw std::invalid_argument("NoiseSpec: sigma2 must be > 0");
        NoiseSpec s;
        s.sigma2 = sigma2;
        s.snr_db = -10.0 * std::log10(sigma2);
        return s;
    }
};

inline double snr_db_to_sigma2(double snr_db) { return std::pow(10.0, -snr_db / 10.0); }

inline double sigma2_to_snr_db(double sigma2) { return -10.0 * std::log10(sigma2); }

// Bits per complex channel use of the AWGN channel at the given SNR.
inline double awgn_capacity(double snr_db) { return std::log2(1.0 + std::pow(10.0, snr_db / 10.0)); }

// Interleaved (real, imag) packing: entry 2j -> Re(symbol j), 2j+1 -> Im(symbol j).
template <class Derived>
SymbolVector<typename Derived::Scalar> pack_complex(const Eigen::MatrixBase<Derived>& raw) {
    using S = typename Derived::Scalar;
    const std::ptrdiff_t n = raw.size();
    if (n == 0) throw std::invalid_argument("pack_complex: empty input (k > 0 required)");
    if (n % 2 != 0) throw std::invalid_argument("pack_complex: input length must be even");
    SymbolVector<S> out;
    out.symbols.resize(n / 2);
    for (std::ptrdiff_t j = 0; j < n / 2; ++j)
        out.symbols[j] = std::complex<S>(raw(2 * j), raw(2 * j + 1));
    return out;
}

template <class Scalar>
VectorX<Scalar> unpack_complex(const SymbolVector<Scalar>& x) {
    VectorX<Scalar> raw(2 * x.symbols.size());
    for (std::ptrdiff_t j = 0; j < x.symbols.size(); ++j) {
        raw(2 * j) = x.symbols[j].real();
        raw(2 * j + 1) = x.symbols[j].imag();
    }
    return raw;
}

// Scales a 2k-entry real tensor to meet the power constraint with equality,
// (1/k)*||x||^2 = 1, then packs it into k complex symbols.
template <class Derived>
SymbolVector<typename Derived::Scalar> normalize_power(const Eigen::MatrixBase<Derived>& raw, int k) {
    using S = typename Derived::Scalar;
    if (k <= 0) throw std::invalid_argument("normalize_power: k must be > 0");
    if (raw.size() != std::ptrdiff_t(2) * k)
        throw std::invalid_argument("normalize_power: raw must have exactly 2k entries");
    const S nrm = raw.norm();
    if (!(nrm > S(0))) throw std::domain_error("normalize_power: all-zero input cannot be normalized");
    VectorX<S> scaled = raw.derived();
    scaled *= std::sqrt(S(k)) / nrm;
    return pack_complex(scaled);
}

// y = x + w with w circularly-symmetric complex Gaussian of per-complex-
// dimension variance noise.sigma2 (sigma2/2 per real component).
// Deterministic given the rng stream.
template <class Scalar>
SymbolVector<Scalar> awgn_apply(const SymbolVector<Scalar>& x, const NoiseSpec& noise, Rng& rng) {
    if (!(noise.sigma2 >= 0.0)) throw std::invalid_argument("awgn_apply: sigma2 must be >= 0");
    const Scalar s = Scalar(std::sqrt(noise.sigma2 / 2.0));
    SymbolVector<Scalar> y;
    y.symbols.resize(x.symbols.size());
    for (std::ptrdiff_t i = 0; i < x.symbols.size(); ++i) {
        const Scalar wr = Scalar(rng.normal()) * s;
        const Scalar wi = Scalar(rng.normal()) * s;
        y.symbols[i] = x.symbols[i] + std::complex<Scalar>(wr, wi);
    }
    return y;
}

template <class Scalar>
SymbolVector<Scalar> awgn_apply(const SymbolVector<Scalar>& x, const NoiseSpec& noise, std::uint64_t seed) {
    Rng rng(seed);
    return awgn_apply(x, noise, rng);
}

}  // namespace hjsc
