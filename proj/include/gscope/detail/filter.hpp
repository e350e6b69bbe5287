#pragma once

#include "gscope/garch.hpp"

#include <cstddef>
#include <vector>

namespace gscope::garch::detail {

/// Runs sigma_t^2 = omega + sum_k alpha_k x2_{t-k} + sum_j beta_j sigma2_{t-j} forward in t.
///
/// `step(t, sigma2, grad)` is called once per 0-based step with the new variance (and, when
/// WithGrad, a pointer to its gradient of length dim()); it returns the squared output fed
/// back into the recursion. Squared outputs for t >= 1 are treated as data: only the
/// pre-sample squares carry a gradient, taken from `init`.
template <bool WithGrad, class Step>
void filter(const ParamVector& theta, const InitialConditions& init, std::size_t n, Step&& step) {
    const std::size_t p = theta.alphas().size();
    const std::size_t q = theta.betas().size();
    const std::size_t d = theta.dim();
    const double omega = theta.omega();
    const double* alpha = theta.alphas().data();
    const double* beta = theta.betas().data();

    std::vector<double> x2(p + n);
    std::vector<double> s2(q + n);
    for (std::size_t j = 0; j < p; ++j) x2[p - 1 - j] = init.presample_sq[j];
    for (std::size_t j = 0; j < q; ++j) s2[q - 1 - j] = init.initial_variances[j];

    std::vector<double> gx;
    std::vector<double> gs;
    std::vector<double> g;
    if constexpr (WithGrad) {
        gx.assign(p * d, 0.0);
        gs.assign((q + n) * d, 0.0);
        g.assign(d, 0.0);
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t c = 0; c < d; ++c) gx[(p - 1 - j) * d + c] = init.presample_grad[j * d + c];
        for (std::size_t j = 0; j < q; ++j)
            for (std::size_t c = 0; c < d; ++c) gs[(q - 1 - j) * d + c] = init.variance_grad[j * d + c];
    }

    for (std::size_t t = 0; t < n; ++t) {
        double s = omega;
        for (std::size_t k = 1; k <= p; ++k) s += alpha[k - 1] * x2[p + t - k];
        for (std::size_t j = 1; j <= q; ++j) s += beta[j - 1] * s2[q + t - j];

        if constexpr (WithGrad) {
            g[0] = 1.0;
            for (std::size_t k = 1; k <= p; ++k) g[k] = x2[p + t - k];
            for (std::size_t j = 1; j <= q; ++j) g[p + j] = s2[q + t - j];
            for (std::size_t k = t + 1; k <= p; ++k) {
                const double* src = &gx[(p + t - k) * d];
                for (std::size_t c = 0; c < d; ++c) g[c] += alpha[k - 1] * src[c];
            }
            for (std::size_t j = 1; j <= q; ++j) {
                const double* src = &gs[(q + t - j) * d];
                for (std::size_t c = 0; c < d; ++c) g[c] += beta[j - 1] * src[c];
            }
            double* dst = &gs[(q + t) * d];
            for (std::size_t c = 0; c < d; ++c) dst[c] = g[c];
            s2[q + t] = s;
            x2[p + t] = step(t, s, static_cast<const double*>(g.data()));
        } else {
            s2[q + t] = s;
            x2[p + t] = step(t, s, static_cast<const double*>(nullptr));
        }
    }
}

}  // namespace gscope::garch::detail
