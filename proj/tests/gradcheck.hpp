#pragma once

// Central-difference gradient checking used across the NN tests. loss_fn must
// be a pure function of the current parameter values and the probe input.

#include <cmath>
#include <functional>
#include <vector>

#include "hjsc/nn.hpp"
#include "hjsc/rng.hpp"

namespace hjsc::testutil {

struct GradCheckResult {
    double max_rel_err = 0.0;
    int checked = 0;
};

// Compares analytic gradients (already accumulated in params[i]->grad) against
// central differences of loss_fn, on up to max_coords_per_tensor coordinates
// per tensor. Relative error uses max(|a|+|n|, floor) as the denominator.
template <class S>
GradCheckResult check_param_gradients(std::vector<nn::ParamTensor<S>*> params,
                                      const std::function<double()>& loss_fn, Rng rng,
                                      int max_coords_per_tensor = 24, double step = 1e-4,
                                      double floor_denom = 1e-6) {
    GradCheckResult res;
    for (auto* p : params) {
        const std::ptrdiff_t n = p->value.size();
        const int m = int(std::min<std::ptrdiff_t>(n, max_coords_per_tensor));
        for (int t = 0; t < m; ++t) {
            const std::ptrdiff_t idx = (n == m) ? t : std::ptrdiff_t(rng.below(std::uint64_t(n)));
            S* v = p->value.data() + idx;
            const S saved = *v;
            *v = saved + S(step);
            const double lp = loss_fn();
            *v = saved - S(step);
            const double lm = loss_fn();
            *v = saved;
            const double numeric = (lp - lm) / (2.0 * step);
            const double analytic = double(p->grad.data()[idx]);
            const double denom = std::max(std::abs(analytic) + std::abs(numeric), floor_denom);
            const double rel = std::abs(analytic - numeric) / denom;
            if (rel > res.max_rel_err) res.max_rel_err = rel;
            ++res.checked;
        }
    }
    return res;
}

}  // namespace hjsc::testutil
