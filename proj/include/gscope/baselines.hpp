#pragma once

#include "gscope/garch.hpp"
#include "gscope/qml.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace gscope::baselines {

using garch::ParamVector;
using garch::SeriesSample;

/// Quantile of the chi-squared distribution with `dof` degrees of freedom at `level`.
[[nodiscard]] double chi_squared_quantile(std::size_t dof, double level);

/// {theta : (theta - center)^T shape (theta - center) <= radius}.
class Ellipsoid {
public:
    /// Throws InvalidParameter unless shape is square, matches the center's dimension and radius >= 0.
    Ellipsoid(ParamVector center, Eigen::MatrixXd shape, double radius);

    [[nodiscard]] const ParamVector& center() const noexcept { return center_; }
    [[nodiscard]] const Eigen::MatrixXd& shape() const noexcept { return shape_; }
    [[nodiscard]] double radius() const noexcept { return radius_; }

    [[nodiscard]] double quadratic_form(const ParamVector& theta) const;
    [[nodiscard]] bool contains(const ParamVector& theta) const { return quadratic_form(theta) <= radius_; }

private:
    ParamVector center_;
    Eigen::MatrixXd shape_;
    double radius_;
};

/// Inverse of a symmetric positive-definite matrix; throws SingularInformation when the
/// smallest eigenvalue is not positive relative to the largest.
[[nodiscard]] Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* what);

/// Asymptotic normal ellipsoid with shape gamma^{-1} and radius s / n, s the chi-squared(d)
/// quantile at `level`.
[[nodiscard]] Ellipsoid asymptotic_region(const qml::QmlFit& fit, const qml::CovarianceEstimate& cov,
                                          double level, std::size_t n);

struct BootstrapConfig {
    std::size_t b = 99;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    /// Built-in starting points used by each refit in addition to the warm start.
    std::size_t refit_default_starts = 2;
    /// A run aborts with TooManyFailures when more than this fraction of refits throw.
    double max_failure_rate = 0.10;
};

struct BootstrapSample {
    /// The estimate the replications were generated from.
    ParamVector center;
    /// One estimate per successful replication, in replication order.
    std::vector<ParamVector> estimates;
    /// Requested replication count.
    std::size_t b = 0;
    std::uint64_t seed = 0;
    /// Replications whose refit threw; estimates.size() + failures == b.
    std::size_t failures = 0;
};

/// Resamples the standardized residuals at fit.theta_hat with replacement, simulates from
/// theta_hat with the sample's initial conditions and refits each trajectory.
[[nodiscard]] BootstrapSample residual_bootstrap(const SeriesSample& sample, const qml::QmlFit& fit,
                                                 const BootstrapConfig& config);

/// Ellipsoid centered at the bootstrap center with shape Sigma_b^{-1} (Sigma_b the sample
/// covariance of the estimates) and radius the chi-squared(d) quantile at `level`.
/// Requires at least 50 estimates.
[[nodiscard]] Ellipsoid bootstrap_region(const BootstrapSample& boots, double level);

[[nodiscard]] bool bootstrap_region_membership(const ParamVector& theta, const BootstrapSample& boots,
                                               double level);

struct LrBootstrapResult {
    /// 2n (l_n(theta) - l_n(theta_hat)), clamped at zero.
    double lr;
    double p_value;
    /// Bootstrap statistics of the successful replications.
    std::vector<double> bootstrap_lr;
    std::size_t failures;
};

/// Bootstrap likelihood-ratio test of theta given the sample's QMLE `fit`. Each replication
/// simulates under theta from resampled standardized theta-residuals, refits and records
/// its own LR; p = (1 + #{bootstrap LR >= LR}) / (successes + 1). Requires b >= 19.
[[nodiscard]] LrBootstrapResult lr_bootstrap(const ParamVector& theta, const SeriesSample& sample,
                                             const qml::QmlFit& fit, const BootstrapConfig& config);

/// Same, fitting the QMLE first.
[[nodiscard]] double lr_bootstrap_pvalue(const ParamVector& theta, const SeriesSample& sample,
                                         const BootstrapConfig& config);

/// Region membership at `level`: p > 1 - level.
[[nodiscard]] inline bool lr_region_contains(double p_value, double level) { return p_value > 1.0 - level; }

}  // namespace gscope::baselines
