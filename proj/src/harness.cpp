#include "gscope/harness.hpp"

#include "gscope/baselines.hpp"
#include "gscope/error.hpp"
#include "gscope/parallel.hpp"
#include "gscope/qml.hpp"
#include "gscope/scope.hpp"

#include <charconv>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>

namespace gscope::harness {

namespace {

constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kRegionStream = 2;
constexpr std::uint64_t kAreaStream = 3;

struct TrialOutcome {
    bool ok = false;
    bool hit = false;
    double area = 0.0;
};

}  // namespace

std::string NoiseSpec::name() const {
    switch (family) {
        case NoiseFamily::gaussian: return "gaussian";
        case NoiseFamily::logistic: return "logistic";
        case NoiseFamily::laplace: return "laplace";
        case NoiseFamily::student_t: {
            char buf[32];
            const auto res = std::to_chars(buf, buf + sizeof buf, df);
            return "student_t(" + std::string(buf, res.ptr) + ")";
        }
    }
    return "unknown";
}

NoiseSpec NoiseSpec::parse(std::string_view text) {
    if (text == "gaussian") return {NoiseFamily::gaussian};
    if (text == "logistic") return {NoiseFamily::logistic};
    if (text == "laplace") return {NoiseFamily::laplace};
    constexpr std::string_view prefix = "student_t(";
    if (text.starts_with(prefix) && text.ends_with(")")) {
        const auto inner = text.substr(prefix.size(), text.size() - prefix.size() - 1);
        double df = 0.0;
        const auto res = std::from_chars(inner.data(), inner.data() + inner.size(), df);
        if (res.ec == std::errc{} && res.ptr == inner.data() + inner.size() && df > 0.0 && std::isfinite(df))
            return {NoiseFamily::student_t, df};
    }
    throw Error(ErrorKind::config, "unknown noise family '" + std::string(text) +
                                       "' (expected gaussian, logistic, laplace or student_t(<df>))");
}

std::vector<double> generate_noise(const NoiseSpec& spec, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw Error(ErrorKind::invalid_parameter, "noise length must be positive");
    Rng rng(seed);
    std::vector<double> out(n);
    switch (spec.family) {
        case NoiseFamily::gaussian: {
            std::normal_distribution<double> z;
            for (auto& v : out) v = z(rng);
            break;
        }
        case NoiseFamily::logistic: {
            const double scale = std::numbers::sqrt3 / std::numbers::pi;
            for (auto& v : out) {
                const double u = uniform_open(rng);
                v = scale * std::log(u / (1.0 - u));
            }
            break;
        }
        case NoiseFamily::laplace: {
            const double scale = 1.0 / std::numbers::sqrt2;
            for (auto& v : out) {
                const double u = uniform_open(rng) - 0.5;
                v = -scale * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
            }
            break;
        }
        case NoiseFamily::student_t: {
            if (!(spec.df > 0.0)) throw Error(ErrorKind::invalid_parameter, "student_t needs df > 0");
            std::student_t_distribution<double> t(spec.df);
            const double scale = spec.infinite_variance() ? 1.0 : std::sqrt((spec.df - 2.0) / spec.df);
            for (auto& v : out) v = scale * t(rng);
            break;
        }
    }
    return out;
}

const char* to_string(Method method) noexcept {
    switch (method) {
        case Method::scope: return "scope";
        case Method::asym_ellipsoid: return "asym_ellipsoid";
        case Method::res_bootstrap: return "res_bootstrap";
        case Method::lr_bootstrap: return "lr_bootstrap";
    }
    return "unknown";
}

Method method_from_string(std::string_view name) {
    for (auto m : {Method::scope, Method::asym_ellipsoid, Method::res_bootstrap, Method::lr_bootstrap})
        if (name == to_string(m)) return m;
    throw Error(ErrorKind::config, "unknown method '" + std::string(name) + "'");
}

void CoverageConfig::validate() const {
    if (n <= theta_star.dim()) throw Error(ErrorKind::config, "n must exceed the parameter dimension");
    if (trials == 0) throw Error(ErrorKind::config, "trials must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorKind::config, "level must lie in (0, 1)");
    if (!(max_failure_rate >= 0.0 && max_failure_rate <= 1.0))
        throw Error(ErrorKind::config, "max_failure_rate must lie in [0, 1]");
    if (method == Method::scope) scope::ScopeConfig{m, r}.validate();
    if (method == Method::res_bootstrap && bootstrap_b < 50)
        throw Error(ErrorKind::config, "bootstrap_b must be >= 50 for res_bootstrap");
    if (method == Method::lr_bootstrap && bootstrap_b < 19)
        throw Error(ErrorKind::config, "bootstrap_b must be >= 19 for lr_bootstrap");
}

garch::InitPolicy CoverageConfig::resolved_region_init() const {
    if (region_init) return *region_init;
    return burn_in == 0 ? garch::InitPolicy::observed : garch::InitPolicy::unconditional;
}

double CoverageConfig::nominal_level() const {
    return method == Method::scope ? scope::ScopeConfig{m, r}.level() : level;
}

ParamVector UnitVarianceSampler::draw(Rng& rng) const {
    // Normalized exponentials give a uniform point on the simplex with one slack coordinate.
    const std::size_t k = orders_.p() + orders_.q();
    std::vector<double> e(k + 1);
    double total = 0.0;
    for (auto& v : e) {
        v = -std::log(uniform_open(rng));
        total += v;
    }
    std::vector<double> flat(k + 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        flat[i + 1] = e[i] / total;
        sum += flat[i + 1];
    }
    flat[0] = 1.0 - sum;
    return ParamVector::from_flat(flat, orders_);
}

double relative_area(const Region& region, const UnitVarianceSampler& sampler, std::size_t samples,
                     std::uint64_t seed) {
    if (samples == 0) throw Error(ErrorKind::invalid_parameter, "relative_area needs samples >= 1");
    Rng rng(seed);
    std::size_t inside = 0;
    for (std::size_t i = 0; i < samples; ++i)
        if (region(sampler.draw(rng))) ++inside;
    return static_cast<double>(inside) / static_cast<double>(samples);
}

Region build_region(const CoverageConfig& config, const SeriesSample& sample, std::uint64_t seed) {
    const auto orders = config.theta_star.orders();
    switch (config.method) {
        case Method::scope: {
            const scope::ScopeConfig sc{config.m, config.r, config.standardize_residuals, seed};
            auto perms = std::make_shared<const scope::PermutationSet>(
                scope::PermutationSet::generate(sample.size(), config.m, seed));
            return [sample, perms, sc](const ParamVector& theta) { return scope::in_region(theta, sample, *perms, sc); };
        }
        case Method::asym_ellipsoid: {
            const auto fit = qml::qmle_fit_best(sample, orders);
            const auto cov = qml::asymptotic_covariance(fit.theta_hat, sample);
            auto e = std::make_shared<const baselines::Ellipsoid>(
                baselines::asymptotic_region(fit, cov, config.level, sample.size()));
            return [e](const ParamVector& theta) { return e->contains(theta); };
        }
        case Method::res_bootstrap: {
            const auto fit = qml::qmle_fit_best(sample, orders);
            baselines::BootstrapConfig bc;
            bc.b = config.bootstrap_b;
            bc.seed = seed;
            auto e = std::make_shared<const baselines::Ellipsoid>(
                baselines::bootstrap_region(baselines::residual_bootstrap(sample, fit, bc), config.level));
            return [e](const ParamVector& theta) { return e->contains(theta); };
        }
        case Method::lr_bootstrap: {
            const auto fit = qml::qmle_fit_best(sample, orders);
            baselines::BootstrapConfig bc;
            bc.b = config.bootstrap_b;
            bc.seed = seed;
            const double level = config.level;
            return [sample, fit, bc, level](const ParamVector& theta) {
                return baselines::lr_region_contains(baselines::lr_bootstrap(theta, sample, fit, bc).p_value, level);
            };
        }
    }
    throw Error(ErrorKind::config, "unknown method");
}

SeriesSample trial_sample(const CoverageConfig& config, std::size_t index) {
    const auto& theta = config.theta_star;
    const auto noise = generate_noise(config.noise, config.n + config.burn_in,
                                      derive_seed(config.seed, index, kNoiseStream));
    const auto init = theta.is_stationary() ? garch::SimulationInit::unconditional(theta)
                                            : garch::SimulationInit::constant(theta.orders(), theta.omega());
    auto sample = garch::simulate(theta, noise, init, config.burn_in);
    const auto policy = config.resolved_region_init();
    return policy == garch::InitPolicy::observed ? sample : sample.reinitialized(policy);
}

CoverageReport empirical_coverage(const CoverageConfig& config) {
    config.validate();
    std::vector<TrialOutcome> outcomes(config.trials);
    const UnitVarianceSampler sampler(config.theta_star.orders());

    parallel_for(config.trials, config.threads, [&](std::size_t i) {
        try {
            const auto sample = trial_sample(config, i);
            const auto region = build_region(config, sample, derive_seed(config.seed, i, kRegionStream));
            TrialOutcome out{true, region(config.theta_star), 0.0};
            if (config.area_samples > 0)
                out.area = relative_area(region, sampler, config.area_samples, derive_seed(config.seed, i, kAreaStream));
            outcomes[i] = out;
        } catch (const Error&) {
            outcomes[i] = TrialOutcome{};
        }
    });

    CoverageReport report{config, 0, 0, 0, 0.0, std::nullopt};
    double area_sum = 0.0;
    for (const auto& o : outcomes) {
        if (!o.ok) {
            ++report.failures;
            continue;
        }
        ++report.trials;
        if (o.hit) ++report.hits;
        area_sum += o.area;
    }
    if (static_cast<double>(report.failures) > config.max_failure_rate * static_cast<double>(config.trials)) {
        throw Error(ErrorKind::too_many_failures, std::to_string(report.failures) + " of " +
                                                      std::to_string(config.trials) + " trials failed");
    }
    if (report.trials > 0) {
        report.empirical_coverage = static_cast<double>(report.hits) / static_cast<double>(report.trials);
        if (config.area_samples > 0) report.relative_area = area_sum / static_cast<double>(report.trials);
    }
    return report;
}

}  // namespace gscope::harness
