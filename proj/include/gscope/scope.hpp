#pragma once

#include "gscope/garch.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gscope::scope {

using garch::ParamVector;
using garch::SeriesSample;

/// A permutation of {0, ..., size-1}: element t names the source index placed at position t.
using Permutation = std::vector<std::uint32_t>;

/// The frozen randomness of one confidence region: m - 1 index permutations of the
/// residuals and the tie-break permutation nu of {0, ..., m-1}.
class PermutationSet {
public:
    PermutationSet(std::size_t n, std::vector<Permutation> perms, Permutation nu, std::uint64_t seed = 0);

    /// Uniform, independent draws from a generator seeded with `seed`; bit-identical on replay.
    static PermutationSet generate(std::size_t n, std::size_t m, std::uint64_t seed);

    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] std::size_t m() const noexcept { return perms_.size() + 1; }
    [[nodiscard]] const std::vector<Permutation>& perms() const noexcept { return perms_; }
    [[nodiscard]] const Permutation& nu() const noexcept { return nu_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

private:
    std::size_t n_;
    std::vector<Permutation> perms_;
    Permutation nu_;
    std::uint64_t seed_;
};

struct ScopeConfig {
    std::size_t m = 100;
    std::size_t r = 10;
    bool standardize_residuals = false;
    std::uint64_t seed = 0;

    /// Throws a config error unless m > r > 0.
    void validate() const;
    /// Nominal coverage 1 - r/m.
    [[nodiscard]] double level() const { return 1.0 - static_cast<double>(r) / static_cast<double>(m); }
};

/// True iff `perm` is a bijection of {0, ..., size-1}.
[[nodiscard]] bool is_permutation_of_range(std::span<const std::uint32_t> perm);

/// Residuals entering the perturbed scores: reconstructed at theta, optionally standardized.
[[nodiscard]] std::vector<double> scope_residuals(const ParamVector& theta, const SeriesSample& sample,
                                                  const ScopeConfig& config);

/// Score of the alternative trajectory driven by residuals[perm[t]], started from `init`.
[[nodiscard]] std::vector<double> perturbed_score(const ParamVector& theta,
                                                  const garch::InitialConditions& init,
                                                  std::span<const double> residuals,
                                                  std::span<const std::uint32_t> perm);

/// B(theta, perm) for an observed sample.
[[nodiscard]] std::vector<double> perturbed_score(const ParamVector& theta, const SeriesSample& sample,
                                                  std::span<const std::uint32_t> perm,
                                                  const ScopeConfig& config);

/// 1 + #{i >= 1 : values[0] beats values[i]} where a beats b if a > b, or a == b and
/// nu of a's index exceeds nu of b's index.
[[nodiscard]] std::size_t rank_of_reference(std::span<const double> values,
                                            std::span<const std::uint32_t> nu);

/// Rank of the squared reference score among the perturbed ones, in 1..m.
[[nodiscard]] std::size_t rank(const ParamVector& theta, const SeriesSample& sample,
                               const PermutationSet& perms, const ScopeConfig& config);

/// Same, from already reconstructed residuals and resolved initial conditions.
[[nodiscard]] std::size_t rank(const ParamVector& theta, const garch::InitialConditions& init,
                               std::span<const double> residuals, const PermutationSet& perms);

/// rank(...) <= m - r.
[[nodiscard]] bool in_region(const ParamVector& theta, const SeriesSample& sample,
                             const PermutationSet& perms, const ScopeConfig& config);

struct RankPoint {
    ParamVector theta;
    std::size_t rank;
    bool in_region;
};

struct RankField {
    std::vector<RankPoint> points;
    ScopeConfig config;
};

/// Ranks of every grid point under one shared PermutationSet. The output does not
/// depend on `threads`.
[[nodiscard]] RankField rank_field(const SeriesSample& sample, std::span<const ParamVector> grid,
                                   const PermutationSet& perms, const ScopeConfig& config,
                                   std::size_t threads = 1);

}  // namespace gscope::scope
