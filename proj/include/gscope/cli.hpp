#pragma once

#include "gscope/error.hpp"

#include <json.hpp>

#include <optional>
#include <set>
#include <string>

namespace gscope::cli {

inline constexpr const char* kVersion = "gscope 0.1.0";
inline constexpr int kSchemaVersion = 1;

/// Reads a flat JSON object key by key and remembers every value it handed out, defaults
/// included, so the fully resolved configuration can be echoed into outputs.
class ConfigReader {
public:
    /// Throws a config error unless `doc` is an object whose values are all scalars.
    explicit ConfigReader(nlohmann::json doc);

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback);
    [[nodiscard]] std::string require_string(const std::string& key);
    [[nodiscard]] double get_double(const std::string& key, double fallback);
    [[nodiscard]] std::size_t get_size(const std::string& key, std::size_t fallback);
    [[nodiscard]] std::uint64_t get_seed(const std::string& key, std::uint64_t fallback);
    [[nodiscard]] bool get_bool(const std::string& key, bool fallback);

    /// Throws a config error naming the first key that was never read.
    void reject_unknown() const;
    [[nodiscard]] const nlohmann::json& resolved() const noexcept { return resolved_; }

private:
    const nlohmann::json* find(const std::string& key);

    nlohmann::json doc_;
    nlohmann::json resolved_ = nlohmann::json::object();
    std::set<std::string> used_;
};

/// A command's text outputs: the primary document and, for scope-region, a JSON sidecar.
struct CommandOutput {
    std::string primary;
    std::optional<std::string> sidecar;
};

/// Rank field over a parameter grid as CSV, plus a sidecar with the resolved config and the QMLE.
[[nodiscard]] CommandOutput run_scope_region(const nlohmann::json& config);
/// Monte Carlo coverage (and optionally relative area) of one method as a JSON report.
[[nodiscard]] CommandOutput run_coverage(const nlohmann::json& config);
/// Price CSV -> compound returns -> standardized -> QMLE -> all four regions' relative areas.
[[nodiscard]] CommandOutput run_market(const nlohmann::json& config);
/// Synthetic `date,close` file whose log returns follow a simulated GARCH process.
[[nodiscard]] CommandOutput run_synth_prices(const nlohmann::json& config);

/// 2 for configuration errors, 3 for data errors, 4 for numerical failures.
[[nodiscard]] int exit_code_for(ErrorKind kind) noexcept;

/// Command-line entry point: `gscope <command> --config FILE [--out PATH] [--seed N]`.
int main(int argc, char** argv);

}  // namespace gscope::cli
