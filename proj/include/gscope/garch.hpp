#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace gscope::garch {

/// ARCH order p and GARCH order q. At least one of them is positive.
class ModelOrders {
public:
    ModelOrders(std::size_t p, std::size_t q);

    [[nodiscard]] std::size_t p() const noexcept { return p_; }
    [[nodiscard]] std::size_t q() const noexcept { return q_; }
    /// Parameter dimension p + q + 1.
    [[nodiscard]] std::size_t dim() const noexcept { return p_ + q_ + 1; }

    friend bool operator==(const ModelOrders&, const ModelOrders&) = default;

private:
    std::size_t p_;
    std::size_t q_;
};

/// A parameter point (omega, alpha_1..alpha_p, beta_1..beta_q) with omega > 0 and
/// nonnegative coefficients. Stationarity is queryable but not required.
class ParamVector {
public:
    ParamVector(double omega, std::vector<double> alphas, std::vector<double> betas);

    /// Inverse of flat(): [omega, alphas..., betas...].
    static ParamVector from_flat(std::span<const double> flat, const ModelOrders& orders);

    [[nodiscard]] double omega() const noexcept { return omega_; }
    [[nodiscard]] const std::vector<double>& alphas() const noexcept { return alphas_; }
    [[nodiscard]] const std::vector<double>& betas() const noexcept { return betas_; }
    [[nodiscard]] ModelOrders orders() const { return {alphas_.size(), betas_.size()}; }
    [[nodiscard]] std::size_t dim() const noexcept { return 1 + alphas_.size() + betas_.size(); }

    /// Sum of all alpha and beta coefficients.
    [[nodiscard]] double persistence() const noexcept;
    [[nodiscard]] bool is_stationary() const noexcept { return persistence() < 1.0; }
    [[nodiscard]] std::vector<double> flat() const;

    friend bool operator==(const ParamVector&, const ParamVector&) = default;

private:
    double omega_;
    std::vector<double> alphas_;
    std::vector<double> betas_;
};

/// How the pre-sample squares and initial conditional variances are obtained.
enum class InitPolicy {
    observed,        ///< values stored in the sample (known initial conditions)
    constant_omega,  ///< every initial value equals omega
    unconditional,   ///< every initial value equals omega / (1 - persistence)
};

[[nodiscard]] const char* to_string(InitPolicy policy) noexcept;
[[nodiscard]] InitPolicy init_policy_from_string(const std::string_view name);

/// Observed series X_1..X_n together with its initial conditions.
///
/// presample_sq holds (X_0^2, X_{-1}^2, ..., X_{1-p}^2) and initial_variances holds
/// (sigma_0^2, ..., sigma_{1-q}^2). Both are consulted only under InitPolicy::observed.
class SeriesSample {
public:
    SeriesSample(std::vector<double> observations, std::vector<double> presample_sq,
                 std::vector<double> initial_variances,
                 InitPolicy policy = InitPolicy::observed);

    /// A sample whose initial conditions are derived from the parameter being evaluated.
    static SeriesSample with_policy(std::vector<double> observations, InitPolicy policy);

    [[nodiscard]] const std::vector<double>& observations() const noexcept { return obs_; }
    [[nodiscard]] const std::vector<double>& presample_sq() const noexcept { return presample_sq_; }
    [[nodiscard]] const std::vector<double>& initial_variances() const noexcept {
        return initial_variances_;
    }
    [[nodiscard]] InitPolicy policy() const noexcept { return policy_; }
    [[nodiscard]] std::size_t size() const noexcept { return obs_.size(); }

    [[nodiscard]] SeriesSample reinitialized(InitPolicy policy) const;

private:
    std::vector<double> obs_;
    std::vector<double> presample_sq_;
    std::vector<double> initial_variances_;
    InitPolicy policy_;
};

/// Initial conditions resolved at a parameter point, with their derivatives
/// with respect to theta (row-major, one row of length dim() per value).
struct InitialConditions {
    std::vector<double> presample_sq;
    std::vector<double> initial_variances;
    std::vector<double> presample_grad;
    std::vector<double> variance_grad;
};

[[nodiscard]] InitialConditions resolve_initial_conditions(const ParamVector& theta,
                                                           const SeriesSample& sample);

struct VariancePath {
    std::vector<double> values;
};

/// sigma_t^2(theta) for t = 1..n from the conditional variance recursion.
[[nodiscard]] VariancePath variance_path(const ParamVector& theta, const SeriesSample& sample);

/// eta = omega / (1 - persistence); throws NotStationary otherwise.
[[nodiscard]] double unconditional_variance(const ParamVector& theta);

/// Pre-sample values used to start a simulation.
struct SimulationInit {
    std::vector<double> presample_sq;
    std::vector<double> initial_variances;

    /// Every value set to the unconditional variance of theta.
    static SimulationInit unconditional(const ParamVector& theta);
    /// Every value set to a constant.
    static SimulationInit constant(const ModelOrders& orders, double value);
};

/// X_t = sigma_t * eps_t. The first burn_in noise values drive a discarded prefix;
/// the returned sample starts after it and carries the true initial conditions
/// (the tail of the prefix) under InitPolicy::observed.
[[nodiscard]] SeriesSample simulate(const ParamVector& theta, std::span<const double> noise,
                                    const SimulationInit& init, std::size_t burn_in = 0);

/// Reconstructed residuals X_t / sigma_t(theta).
[[nodiscard]] std::vector<double> residuals(const ParamVector& theta, const SeriesSample& sample);

/// Subtract the sample mean and divide by the population (n-denominator) standard deviation.
[[nodiscard]] std::vector<double> standardize(std::span<const double> values);

}  // namespace gscope::garch
