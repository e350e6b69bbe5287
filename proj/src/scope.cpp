#include "gscope/scope.hpp"

#include "gscope/detail/filter.hpp"
#include "gscope/error.hpp"
#include "gscope/parallel.hpp"
#include "gscope/rng.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace gscope::scope {

namespace {

double squared_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

Permutation identity(std::size_t n) {
    Permutation p(n);
    std::iota(p.begin(), p.end(), 0u);
    return p;
}

}  // namespace

bool is_permutation_of_range(std::span<const std::uint32_t> perm) {
    std::vector<bool> seen(perm.size(), false);
    for (auto v : perm) {
        if (v >= perm.size() || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

PermutationSet::PermutationSet(std::size_t n, std::vector<Permutation> perms, Permutation nu,
                               std::uint64_t seed)
    : n_(n), perms_(std::move(perms)), nu_(std::move(nu)), seed_(seed) {
    if (nu_.size() != perms_.size() + 1 || nu_.size() < 2 || !is_permutation_of_range(nu_)) {
        throw Error(ErrorKind::invalid_parameter, "nu must be a permutation of {0..m-1} with m >= 2");
    }
    for (const auto& p : perms_) {
        if (p.size() != n_ || !is_permutation_of_range(p))
            throw Error(ErrorKind::invalid_parameter, "every perm must be a permutation of {0..n-1}");
    }
}

PermutationSet PermutationSet::generate(std::size_t n, std::size_t m, std::uint64_t seed) {
    if (m < 2) throw Error(ErrorKind::invalid_parameter, "m must be at least 2");
    Rng rng(seed);
    std::vector<Permutation> perms;
    perms.reserve(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        auto p = identity(n);
        std::shuffle(p.begin(), p.end(), rng);
        perms.push_back(std::move(p));
    }
    auto nu = identity(m);
    std::shuffle(nu.begin(), nu.end(), rng);
    return PermutationSet(n, std::move(perms), std::move(nu), seed);
}

void ScopeConfig::validate() const {
    if (!(m > r && r > 0)) {
        throw Error(ErrorKind::config, "ScoPe needs m > r > 0 (got m = " + std::to_string(m) +
                                           ", r = " + std::to_string(r) + ")");
    }
}

std::vector<double> scope_residuals(const ParamVector& theta, const SeriesSample& sample,
                                    const ScopeConfig& config) {
    auto eps = garch::residuals(theta, sample);
    if (config.standardize_residuals) eps = garch::standardize(eps);
    return eps;
}

std::vector<double> perturbed_score(const ParamVector& theta, const garch::InitialConditions& init,
                                    std::span<const double> residuals,
                                    std::span<const std::uint32_t> perm) {
    const std::size_t n = residuals.size();
    if (perm.size() != n) {
        throw Error(ErrorKind::dimension_mismatch, "permutation length " + std::to_string(perm.size()) +
                                                       " != residual count " + std::to_string(n));
    }
    const std::size_t d = theta.dim();
    std::vector<double> b(d, 0.0);
    garch::detail::filter<true>(theta, init, n, [&](std::size_t t, double s2, const double* g) {
        const double e = residuals[perm[t]];
        const double e2 = e * e;
        const double w = (1.0 - e2) / s2;
        for (std::size_t c = 0; c < d; ++c) b[c] += w * g[c];
        return s2 * e2;
    });
    for (double& v : b) v /= static_cast<double>(n);
    return b;
}

std::vector<double> perturbed_score(const ParamVector& theta, const SeriesSample& sample,
                                    std::span<const std::uint32_t> perm, const ScopeConfig& config) {
    const auto init = garch::resolve_initial_conditions(theta, sample);
    const auto eps = scope_residuals(theta, sample, config);
    return perturbed_score(theta, init, eps, perm);
}

std::size_t rank_of_reference(std::span<const double> values, std::span<const std::uint32_t> nu) {
    if (values.size() != nu.size() || values.empty())
        throw Error(ErrorKind::dimension_mismatch, "rank needs one tie-break entry per value");
    const double z0 = values[0];
    std::size_t r = 1;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (z0 > values[i] || (z0 == values[i] && nu[0] > nu[i])) ++r;
    }
    return r;
}

std::size_t rank(const ParamVector& theta, const garch::InitialConditions& init,
                 std::span<const double> residuals, const PermutationSet& perms) {
    if (perms.n() != residuals.size()) {
        throw Error(ErrorKind::dimension_mismatch, "PermutationSet was drawn for n = " +
                                                       std::to_string(perms.n()) + ", sample has n = " +
                                                       std::to_string(residuals.size()));
    }
    std::vector<double> z;
    z.reserve(perms.m());
    z.push_back(squared_norm(perturbed_score(theta, init, residuals, identity(residuals.size()))));
    for (const auto& p : perms.perms()) z.push_back(squared_norm(perturbed_score(theta, init, residuals, p)));
    return rank_of_reference(z, perms.nu());
}

std::size_t rank(const ParamVector& theta, const SeriesSample& sample, const PermutationSet& perms,
                 const ScopeConfig& config) {
    if (perms.m() != config.m) {
        throw Error(ErrorKind::dimension_mismatch, "PermutationSet has m = " + std::to_string(perms.m()) +
                                                       ", config has m = " + std::to_string(config.m));
    }
    const auto init = garch::resolve_initial_conditions(theta, sample);
    const auto eps = scope_residuals(theta, sample, config);
    return rank(theta, init, eps, perms);
}

bool in_region(const ParamVector& theta, const SeriesSample& sample, const PermutationSet& perms,
               const ScopeConfig& config) {
    config.validate();
    return rank(theta, sample, perms, config) <= config.m - config.r;
}

RankField rank_field(const SeriesSample& sample, std::span<const ParamVector> grid,
                     const PermutationSet& perms, const ScopeConfig& config, std::size_t threads) {
    config.validate();
    std::vector<std::size_t> ranks(grid.size());
    parallel_for(grid.size(), threads,
                 [&](std::size_t i) { ranks[i] = rank(grid[i], sample, perms, config); });
    RankField field{{}, config};
    field.points.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        field.points.push_back({grid[i], ranks[i], ranks[i] <= config.m - config.r});
    return field;
}

}  // namespace gscope::scope
