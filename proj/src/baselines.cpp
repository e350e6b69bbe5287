#include "gscope/baselines.hpp"

#include "gscope/error.hpp"
#include "gscope/parallel.hpp"
#include "gscope/rng.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <type_traits>

namespace gscope::baselines {

namespace {

constexpr std::uint64_t kResampleStream = 0x7265;

Eigen::VectorXd as_vector(const ParamVector& theta) {
    const auto flat = theta.flat();
    return Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

std::vector<double> resample(std::span<const double> pool, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::vector<double> out(n);
    for (auto& v : out) v = pool[pick(rng)];
    return out;
}

/// Trajectory from theta driven by `noise`, with the sample's initial-value convention.
SeriesSample resimulate(const ParamVector& theta, const SeriesSample& sample, std::span<const double> noise) {
    const auto init = garch::resolve_initial_conditions(theta, sample);
    auto sim = garch::simulate(theta, noise, garch::SimulationInit{init.presample_sq, init.initial_variances});
    if (sample.policy() != garch::InitPolicy::observed) sim = sim.reinitialized(sample.policy());
    return sim;
}

qml::QmlFit refit(const SeriesSample& sim, const std::vector<ParamVector>& warm, const BootstrapConfig& config) {
    qml::FitConfig fc;
    fc.default_starts = config.refit_default_starts;
    fc.extra_starts = warm;
    return qml::qmle_fit_best(sim, warm.front().orders(), fc);
}

/// Runs `body(i)` for every replication; a gscope::Error marks the replication failed.
template <class Body>
std::vector<std::optional<typename std::invoke_result_t<Body, std::size_t>>> replicate(const BootstrapConfig& config,
                                                                                      Body&& body) {
    using T = typename std::invoke_result_t<Body, std::size_t>;
    std::vector<std::optional<T>> out(config.b);
    parallel_for(config.b, config.threads, [&](std::size_t i) {
        try {
            out[i] = body(i);
        } catch (const Error&) {
            out[i].reset();
        }
    });
    const auto failures = static_cast<std::size_t>(std::count(out.begin(), out.end(), std::nullopt));
    if (static_cast<double>(failures) > config.max_failure_rate * static_cast<double>(config.b)) {
        throw Error(ErrorKind::too_many_failures, std::to_string(failures) + " of " + std::to_string(config.b) +
                                                      " bootstrap refits failed");
    }
    return out;
}

}  // namespace

double chi_squared_quantile(std::size_t dof, double level) {
    if (dof == 0) throw Error(ErrorKind::invalid_parameter, "chi-squared needs dof >= 1");
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::invalid_parameter, "level must lie in (0, 1)");
    return boost::math::quantile(boost::math::chi_squared_distribution<double>(static_cast<double>(dof)), level);
}

Ellipsoid::Ellipsoid(ParamVector center, Eigen::MatrixXd shape, double radius)
    : center_(std::move(center)), shape_(std::move(shape)), radius_(radius) {
    const auto d = static_cast<Eigen::Index>(center_.dim());
    if (shape_.rows() != d || shape_.cols() != d) {
        throw Error(ErrorKind::dimension_mismatch, "ellipsoid shape must be " + std::to_string(d) + "x" +
                                                       std::to_string(d));
    }
    if (!(radius_ >= 0.0) || !std::isfinite(radius_))
        throw Error(ErrorKind::invalid_parameter, "ellipsoid radius must be finite and >= 0");
}

double Ellipsoid::quadratic_form(const ParamVector& theta) const {
    if (theta.orders() != center_.orders())
        throw Error(ErrorKind::dimension_mismatch, "parameter orders differ from the ellipsoid's");
    const Eigen::VectorXd diff = as_vector(theta) - as_vector(center_);
    return diff.dot(shape_ * diff);
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw Error(ErrorKind::singular_information, std::string(what) + ": eigensolver failed");
    const auto& ev = eig.eigenvalues();
    const double top = ev.cwiseAbs().maxCoeff();
    if (!(top > 0.0) || !(ev.minCoeff() > 1e-12 * top))
        throw Error(ErrorKind::singular_information, std::string(what) + " is singular");
    return eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
}

Ellipsoid asymptotic_region(const qml::QmlFit& fit, const qml::CovarianceEstimate& cov, double level,
                            std::size_t n) {
    if (n == 0) throw Error(ErrorKind::invalid_parameter, "sample size must be positive");
    const double s = chi_squared_quantile(fit.theta_hat.dim(), level);
    return Ellipsoid(fit.theta_hat, spd_inverse(cov.gamma, "asymptotic covariance"), s / static_cast<double>(n));
}

BootstrapSample residual_bootstrap(const SeriesSample& sample, const qml::QmlFit& fit,
                                   const BootstrapConfig& config) {
    BootstrapSample out{fit.theta_hat, {}, config.b, config.seed, 0};
    if (config.b == 0) return out;
    const auto pool = garch::standardize(garch::residuals(fit.theta_hat, sample));
    const std::vector<ParamVector> warm{fit.theta_hat};
    const std::size_t n = sample.size();

    auto results = replicate(config, [&](std::size_t i) {
        const auto noise = resample(pool, n, derive_seed(config.seed, i, kResampleStream));
        return refit(resimulate(fit.theta_hat, sample, noise), warm, config).theta_hat;
    });
    for (auto& r : results) {
        if (r) out.estimates.push_back(std::move(*r));
        else ++out.failures;
    }
    return out;
}

Ellipsoid bootstrap_region(const BootstrapSample& boots, double level) {
    const std::size_t k = boots.estimates.size();
    if (k < 50) {
        throw Error(ErrorKind::invalid_parameter,
                    "bootstrap region needs at least 50 estimates, got " + std::to_string(k));
    }
    const auto d = static_cast<Eigen::Index>(boots.center.dim());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(k), d);
    for (std::size_t i = 0; i < k; ++i) x.row(static_cast<Eigen::Index>(i)) = as_vector(boots.estimates[i]).transpose();
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd sigma = centered.transpose() * centered / static_cast<double>(k - 1);
    return Ellipsoid(boots.center, spd_inverse(sigma, "bootstrap covariance"),
                     chi_squared_quantile(boots.center.dim(), level));
}

bool bootstrap_region_membership(const ParamVector& theta, const BootstrapSample& boots, double level) {
    return bootstrap_region(boots, level).contains(theta);
}

LrBootstrapResult lr_bootstrap(const ParamVector& theta, const SeriesSample& sample, const qml::QmlFit& fit,
                               const BootstrapConfig& config) {
    if (config.b < 19) throw Error(ErrorKind::invalid_parameter, "LR bootstrap needs b >= 19");
    const double n = static_cast<double>(sample.size());
    const double lr = std::max(0.0, 2.0 * n * (qml::neg_quasi_loglik(theta, sample) - fit.neg_loglik));
    const auto pool = garch::standardize(garch::residuals(theta, sample));
    const std::vector<ParamVector> warm{theta, fit.theta_hat};

    auto results = replicate(config, [&](std::size_t i) {
        const auto noise = resample(pool, sample.size(), derive_seed(config.seed, i, kResampleStream));
        const auto sim = resimulate(theta, sample, noise);
        const auto boot_fit = refit(sim, warm, config);
        return std::max(0.0, 2.0 * n * (qml::neg_quasi_loglik(theta, sim) - boot_fit.neg_loglik));
    });

    LrBootstrapResult out{lr, 0.0, {}, 0};
    std::size_t at_least = 0;
    for (const auto& r : results) {
        if (!r) {
            ++out.failures;
            continue;
        }
        out.bootstrap_lr.push_back(*r);
        if (*r >= lr) ++at_least;
    }
    out.p_value = static_cast<double>(1 + at_least) / static_cast<double>(out.bootstrap_lr.size() + 1);
    return out;
}

double lr_bootstrap_pvalue(const ParamVector& theta, const SeriesSample& sample, const BootstrapConfig& config) {
    return lr_bootstrap(theta, sample, qml::qmle_fit_best(sample, theta.orders()), config).p_value;
}

}  // namespace gscope::baselines
