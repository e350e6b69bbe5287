#pragma once

#include "gscope/error.hpp"
#include "gscope/garch.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace gscope::qml {

using garch::ModelOrders;
using garch::ParamVector;
using garch::SeriesSample;

/// l_n(theta) = (1/n) sum_t [log sigma_t^2(theta) + X_t^2 / sigma_t^2(theta)].
[[nodiscard]] double neg_quasi_loglik(const ParamVector& theta, const SeriesSample& sample);

/// Analytic gradient of neg_quasi_loglik.
[[nodiscard]] std::vector<double> score(const ParamVector& theta, const SeriesSample& sample);

struct ValueAndScore {
    double value;
    std::vector<double> score;
};

/// Both of the above from a single pass over the sample.
[[nodiscard]] ValueAndScore evaluate(const ParamVector& theta, const SeriesSample& sample);

struct FitConfig {
    /// Convergence threshold on the sup-norm of the score.
    double tolerance = 1e-8;
    int max_iterations = 500;
    /// Feasible set keeps persistence <= 1 - stationarity_margin.
    double stationarity_margin = 1e-4;
    /// Number of built-in deterministic starting points (at most 5).
    std::size_t default_starts = 5;
    /// Additional starting points tried before the built-in ones.
    std::vector<ParamVector> extra_starts;
};

struct QmlFit {
    ParamVector theta_hat;
    double neg_loglik;
    /// Sup-norm of the score at theta_hat.
    double score_norm;
    bool converged;
    int iterations;
};

/// Thrown by qmle_fit when no start reaches the score tolerance; carries the best iterate,
/// which is typically a constrained optimum on the boundary of the parameter set.
class DidNotConverge : public Error {
public:
    explicit DidNotConverge(QmlFit best);
    [[nodiscard]] const QmlFit& best() const noexcept { return best_; }

private:
    QmlFit best_;
};

/// Minimizes l_n over {omega > 0, alpha, beta >= 0, persistence <= 1 - margin}.
/// Throws DegenerateData for an all-zero series and DidNotConverge (see above).
[[nodiscard]] QmlFit qmle_fit(const SeriesSample& sample, const ModelOrders& orders,
                              const FitConfig& config = {});

/// Same search as qmle_fit but returns the best iterate whether or not it converged.
[[nodiscard]] QmlFit qmle_fit_best(const SeriesSample& sample, const ModelOrders& orders,
                                   const FitConfig& config = {});

struct CovarianceEstimate {
    Eigen::MatrixXd gamma;
    double kurtosis_hat;
};

/// Plug-in estimate (kappa - 1) J^{-1} of the asymptotic covariance of sqrt(n)(theta_hat - theta),
/// with kappa the fourth moment of the standardized residuals and
/// J = (1/n) sum_t grad sigma_t^2 grad sigma_t^2^T / sigma_t^4.
[[nodiscard]] CovarianceEstimate asymptotic_covariance(const ParamVector& theta_hat,
                                                       const SeriesSample& sample);

}  // namespace gscope::qml
