#include "gscope/garch.hpp"

#include "gscope/detail/filter.hpp"
#include "gscope/error.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace gscope {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::dimension_mismatch: return "DimensionMismatch";
        case ErrorKind::invalid_parameter: return "InvalidParameter";
        case ErrorKind::not_stationary: return "NotStationary";
        case ErrorKind::degenerate_sample: return "DegenerateSample";
        case ErrorKind::degenerate_data: return "DegenerateData";
        case ErrorKind::did_not_converge: return "DidNotConverge";
        case ErrorKind::singular_information: return "SingularInformation";
        case ErrorKind::invalid_price: return "InvalidPrice";
        case ErrorKind::config: return "ConfigError";
        case ErrorKind::data: return "DataError";
        case ErrorKind::too_many_failures: return "TooManyFailures";
    }
    return "Unknown";
}

}  // namespace gscope

namespace gscope::garch {

namespace {

void require_finite_nonneg(const std::vector<double>& values, const char* name) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] < 0.0) {
            throw Error(ErrorKind::invalid_parameter,
                        std::string(name) + "[" + std::to_string(i) + "] must be finite and >= 0");
        }
    }
}

void require_size(std::size_t got, std::size_t want, const char* field) {
    if (got != want) {
        throw Error(ErrorKind::dimension_mismatch, std::string(field) + " has length " +
                                                       std::to_string(got) + ", expected " +
                                                       std::to_string(want));
    }
}

}  // namespace

ModelOrders::ModelOrders(std::size_t p, std::size_t q) : p_(p), q_(q) {
    if (p == 0 && q == 0) throw Error(ErrorKind::invalid_parameter, "orders p = q = 0 are degenerate");
}

ParamVector::ParamVector(double omega, std::vector<double> alphas, std::vector<double> betas)
    : omega_(omega), alphas_(std::move(alphas)), betas_(std::move(betas)) {
    if (!std::isfinite(omega_) || omega_ <= 0.0)
        throw Error(ErrorKind::invalid_parameter, "omega must be finite and > 0");
    require_finite_nonneg(alphas_, "alpha");
    require_finite_nonneg(betas_, "beta");
    (void)ModelOrders(alphas_.size(), betas_.size());
}

ParamVector ParamVector::from_flat(std::span<const double> flat, const ModelOrders& orders) {
    require_size(flat.size(), orders.dim(), "flat parameter vector");
    const auto a = flat.begin() + 1;
    const auto b = a + static_cast<std::ptrdiff_t>(orders.p());
    return ParamVector(flat[0], std::vector<double>(a, b), std::vector<double>(b, flat.end()));
}

double ParamVector::persistence() const noexcept {
    return std::accumulate(alphas_.begin(), alphas_.end(), 0.0) +
           std::accumulate(betas_.begin(), betas_.end(), 0.0);
}

std::vector<double> ParamVector::flat() const {
    std::vector<double> out;
    out.reserve(dim());
    out.push_back(omega_);
    out.insert(out.end(), alphas_.begin(), alphas_.end());
    out.insert(out.end(), betas_.begin(), betas_.end());
    return out;
}

const char* to_string(InitPolicy policy) noexcept {
    switch (policy) {
        case InitPolicy::observed: return "observed";
        case InitPolicy::constant_omega: return "constant_omega";
        case InitPolicy::unconditional: return "unconditional";
    }
    return "unknown";
}

InitPolicy init_policy_from_string(std::string_view name) {
    if (name == "observed") return InitPolicy::observed;
    if (name == "constant_omega") return InitPolicy::constant_omega;
    if (name == "unconditional") return InitPolicy::unconditional;
    throw Error(ErrorKind::config, "unknown init policy '" + std::string(name) + "'");
}

SeriesSample::SeriesSample(std::vector<double> observations, std::vector<double> presample_sq,
                           std::vector<double> initial_variances, InitPolicy policy)
    : obs_(std::move(observations)),
      presample_sq_(std::move(presample_sq)),
      initial_variances_(std::move(initial_variances)),
      policy_(policy) {
    if (obs_.empty()) throw Error(ErrorKind::dimension_mismatch, "observations must be non-empty");
    for (double x : obs_)
        if (!std::isfinite(x)) throw Error(ErrorKind::invalid_parameter, "observations must be finite");
    require_finite_nonneg(presample_sq_, "presample_sq");
    for (std::size_t i = 0; i < initial_variances_.size(); ++i) {
        if (!std::isfinite(initial_variances_[i]) || initial_variances_[i] <= 0.0) {
            throw Error(ErrorKind::invalid_parameter,
                        "initial_variances[" + std::to_string(i) + "] must be finite and > 0");
        }
    }
}

SeriesSample SeriesSample::with_policy(std::vector<double> observations, InitPolicy policy) {
    return SeriesSample(std::move(observations), {}, {}, policy);
}

SeriesSample SeriesSample::reinitialized(InitPolicy policy) const {
    return SeriesSample(obs_, presample_sq_, initial_variances_, policy);
}

InitialConditions resolve_initial_conditions(const ParamVector& theta, const SeriesSample& sample) {
    const std::size_t p = theta.alphas().size();
    const std::size_t q = theta.betas().size();
    const std::size_t d = theta.dim();
    InitialConditions init;
    init.presample_grad.assign(p * d, 0.0);
    init.variance_grad.assign(q * d, 0.0);

    switch (sample.policy()) {
        case InitPolicy::observed:
            require_size(sample.presample_sq().size(), p, "presample_sq");
            require_size(sample.initial_variances().size(), q, "initial_variances");
            init.presample_sq = sample.presample_sq();
            init.initial_variances = sample.initial_variances();
            break;
        case InitPolicy::constant_omega:
            init.presample_sq.assign(p, theta.omega());
            init.initial_variances.assign(q, theta.omega());
            for (std::size_t j = 0; j < p; ++j) init.presample_grad[j * d] = 1.0;
            for (std::size_t j = 0; j < q; ++j) init.variance_grad[j * d] = 1.0;
            break;
        case InitPolicy::unconditional: {
            const double eta = unconditional_variance(theta);
            const double slack = 1.0 - theta.persistence();
            std::vector<double> grad(d, theta.omega() / (slack * slack));
            grad[0] = 1.0 / slack;
            init.presample_sq.assign(p, eta);
            init.initial_variances.assign(q, eta);
            for (std::size_t j = 0; j < p; ++j)
                std::copy(grad.begin(), grad.end(), init.presample_grad.begin() + static_cast<std::ptrdiff_t>(j * d));
            for (std::size_t j = 0; j < q; ++j)
                std::copy(grad.begin(), grad.end(), init.variance_grad.begin() + static_cast<std::ptrdiff_t>(j * d));
            break;
        }
    }
    return init;
}

VariancePath variance_path(const ParamVector& theta, const SeriesSample& sample) {
    const auto init = resolve_initial_conditions(theta, sample);
    const auto& x = sample.observations();
    VariancePath path;
    path.values.resize(x.size());
    detail::filter<false>(theta, init, x.size(), [&](std::size_t t, double s2, const double*) {
        path.values[t] = s2;
        return x[t] * x[t];
    });
    return path;
}

double unconditional_variance(const ParamVector& theta) {
    if (!theta.is_stationary()) {
        throw Error(ErrorKind::not_stationary,
                    "persistence " + std::to_string(theta.persistence()) + " >= 1");
    }
    return theta.omega() / (1.0 - theta.persistence());
}

SimulationInit SimulationInit::unconditional(const ParamVector& theta) {
    return constant(theta.orders(), unconditional_variance(theta));
}

SimulationInit SimulationInit::constant(const ModelOrders& orders, double value) {
    return {std::vector<double>(orders.p(), value), std::vector<double>(orders.q(), value)};
}

SeriesSample simulate(const ParamVector& theta, std::span<const double> noise,
                      const SimulationInit& init, std::size_t burn_in) {
    const std::size_t p = theta.alphas().size();
    const std::size_t q = theta.betas().size();
    require_size(init.presample_sq.size(), p, "presample_sq");
    require_size(init.initial_variances.size(), q, "initial_variances");
    if (noise.size() <= burn_in) {
        throw Error(ErrorKind::dimension_mismatch, "noise length " + std::to_string(noise.size()) +
                                                       " leaves no samples after burn-in " +
                                                       std::to_string(burn_in));
    }

    const std::size_t total = noise.size();
    std::vector<double> x(total);
    std::vector<double> s2(total);
    InitialConditions seeds{init.presample_sq, init.initial_variances, {}, {}};
    detail::filter<false>(theta, seeds, total, [&](std::size_t t, double s, const double*) {
        s2[t] = s;
        x[t] = std::sqrt(s) * noise[t];
        return x[t] * x[t];
    });

    // Values at times burn_in - 1 - j (0-based) come from the prefix, older ones from init.
    std::vector<double> presample(p);
    for (std::size_t j = 0; j < p; ++j) {
        presample[j] = j < burn_in ? x[burn_in - 1 - j] * x[burn_in - 1 - j]
                                   : init.presample_sq[j - burn_in];
    }
    std::vector<double> variances(q);
    for (std::size_t j = 0; j < q; ++j) {
        variances[j] = j < burn_in ? s2[burn_in - 1 - j] : init.initial_variances[j - burn_in];
    }
    return SeriesSample(std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(burn_in), x.end()),
                        std::move(presample), std::move(variances), InitPolicy::observed);
}

std::vector<double> residuals(const ParamVector& theta, const SeriesSample& sample) {
    const auto init = resolve_initial_conditions(theta, sample);
    const auto& x = sample.observations();
    std::vector<double> eps(x.size());
    detail::filter<false>(theta, init, x.size(), [&](std::size_t t, double s2, const double*) {
        eps[t] = x[t] / std::sqrt(s2);
        return x[t] * x[t];
    });
    return eps;
}

std::vector<double> standardize(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw Error(ErrorKind::degenerate_sample, "standardize needs at least 2 values");
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    if (!(sd > 0.0) || !std::isfinite(sd))
        throw Error(ErrorKind::degenerate_sample, "sample standard deviation is zero");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (values[i] - mean) / sd;
    return out;
}

}  // namespace gscope::garch
