#pragma once

#include "gscope/garch.hpp"
#include "gscope/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gscope::harness {

using garch::ParamVector;
using garch::SeriesSample;

enum class NoiseFamily { gaussian, logistic, laplace, student_t };

/// An i.i.d. innovation law normalized to mean 0 and variance 1.
struct NoiseSpec {
    NoiseFamily family = NoiseFamily::gaussian;
    /// Degrees of freedom; used by student_t only.
    double df = 0.0;

    /// Student-t with df <= 2 has no finite variance and is left unscaled.
    [[nodiscard]] bool infinite_variance() const noexcept { return family == NoiseFamily::student_t && df <= 2.0; }
    /// "gaussian", "logistic", "laplace" or "student_t(<df>)".
    [[nodiscard]] std::string name() const;
    /// Inverse of name(); throws a config error for anything else.
    static NoiseSpec parse(std::string_view text);
};

/// n i.i.d. draws; identical for identical (spec, n, seed).
[[nodiscard]] std::vector<double> generate_noise(const NoiseSpec& spec, std::size_t n, std::uint64_t seed);

enum class Method { scope, asym_ellipsoid, res_bootstrap, lr_bootstrap };

[[nodiscard]] const char* to_string(Method method) noexcept;
[[nodiscard]] Method method_from_string(std::string_view name);

struct CoverageConfig {
    Method method = Method::scope;
    ParamVector theta_star{0.23, {0.44}, {0.33}};
    NoiseSpec noise{};
    std::size_t n = 100;
    std::size_t trials = 1000;
    /// Discarded simulation prefix.
    std::size_t burn_in = 0;
    /// Initial values the regions are built with. With burn_in = 0 the default keeps the true
    /// ones (observed); otherwise it switches to the unconditional-variance initializer.
    std::optional<garch::InitPolicy> region_init;
    /// Confidence level of the non-ScoPe methods.
    double level = 0.9;
    std::size_t m = 100;
    std::size_t r = 10;
    bool standardize_residuals = false;
    /// Replications per bootstrap region.
    std::size_t bootstrap_b = 99;
    /// Uniform parameter draws per trial for the relative-area estimate; 0 disables it.
    std::size_t area_samples = 0;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    /// The run aborts with TooManyFailures when more than this fraction of trials throw.
    double max_failure_rate = 0.10;

    /// Throws a config error on inconsistent values.
    void validate() const;
    /// region_init if set, else observed for burn_in = 0 and unconditional otherwise.
    [[nodiscard]] garch::InitPolicy resolved_region_init() const;
    /// Nominal coverage of the configured method.
    [[nodiscard]] double nominal_level() const;
};

struct CoverageReport {
    CoverageConfig config;
    /// Completed trials (failed ones excluded).
    std::size_t trials = 0;
    std::size_t hits = 0;
    std::size_t failures = 0;
    /// hits / trials.
    double empirical_coverage = 0.0;
    /// Mean over trials of the per-trial relative area, when area_samples > 0.
    std::optional<double> relative_area;
};

using Region = std::function<bool(const ParamVector&)>;

/// Uniform sampler over the unit-variance slice of the stationary set:
/// alpha, beta >= 0 uniform on the simplex sum < 1, omega = 1 - sum.
class UnitVarianceSampler {
public:
    explicit UnitVarianceSampler(garch::ModelOrders orders) : orders_(orders) {}
    [[nodiscard]] ParamVector draw(Rng& rng) const;

private:
    garch::ModelOrders orders_;
};

/// Fraction of `samples` sampler draws inside `region`.
[[nodiscard]] double relative_area(const Region& region, const UnitVarianceSampler& sampler,
                                   std::size_t samples, std::uint64_t seed);

/// The configured method's region for one simulated sample; `seed` drives its internal randomness.
[[nodiscard]] Region build_region(const CoverageConfig& config, const SeriesSample& sample, std::uint64_t seed);

/// Sample for trial `index`, as used by empirical_coverage.
[[nodiscard]] SeriesSample trial_sample(const CoverageConfig& config, std::size_t index);

/// Simulates `trials` samples from theta_star, builds the method's region on each and counts
/// how often it contains theta_star. Bitwise reproducible for any thread count.
[[nodiscard]] CoverageReport empirical_coverage(const CoverageConfig& config);

}  // namespace gscope::harness
