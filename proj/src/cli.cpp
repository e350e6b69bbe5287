#include "gscope/cli.hpp"

#include "gscope/garch.hpp"
#include "gscope/harness.hpp"
#include "gscope/io.hpp"
#include "gscope/qml.hpp"
#include "gscope/scope.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace gscope::cli {

using nlohmann::json;
using garch::ParamVector;

namespace {

constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kRegionStream = 2;
constexpr std::uint64_t kAreaStream = 3;

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
    throw Error(ErrorKind::config, "config key '" + key + "': " + what);
}

bool is_count(const json& v) { return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0); }

json header(const char* command, const ConfigReader& reader) {
    return json{{"schema_version", kSchemaVersion}, {"version", kVersion}, {"command", command},
                {"config", reader.resolved()}};
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

json theta_json(const ParamVector& theta) {
    json out{{"omega", theta.omega()}};
    if (theta.alphas().size() == 1 && theta.betas().size() == 1) {
        out["alpha"] = theta.alphas()[0];
        out["beta"] = theta.betas()[0];
    } else {
        out["alphas"] = theta.alphas();
        out["betas"] = theta.betas();
    }
    return out;
}

ParamVector read_theta(ConfigReader& reader, double omega, double alpha, double beta) {
    return ParamVector(reader.get_double("omega", omega), {reader.get_double("alpha", alpha)},
                       {reader.get_double("beta", beta)});
}

/// "auto" resolves to `fallback`.
garch::InitPolicy read_policy(ConfigReader& reader, garch::InitPolicy fallback) {
    const auto name = reader.get_string("region_init", "auto");
    if (name == "auto") return fallback;
    try {
        return garch::init_policy_from_string(name);
    } catch (const Error&) {
        config_error("region_init", "expected auto, observed, constant_omega or unconditional");
    }
}

harness::NoiseSpec read_noise(ConfigReader& reader, const std::string& fallback) {
    const auto name = reader.get_string("noise", fallback);
    try {
        return harness::NoiseSpec::parse(name);
    } catch (const Error& e) {
        config_error("noise", e.what());
    }
}

/// Standardized compound returns of a price file, tagged with `policy`.
garch::SeriesSample returns_sample(const std::string& path, garch::InitPolicy policy, std::string* symbol) {
    if (policy == garch::InitPolicy::observed)
        config_error("region_init", "price data has no observed initial values; use constant_omega or unconditional");
    const auto prices = io::read_price_csv(path);
    if (symbol) *symbol = prices.symbol;
    return garch::SeriesSample::with_policy(garch::standardize(io::compound_returns(prices)), policy);
}

std::vector<ParamVector> triangle_grid(std::size_t resolution) {
    std::vector<ParamVector> grid;
    const double step = 1.0 / static_cast<double>(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        for (std::size_t j = 0; j < resolution; ++j) {
            // Cell centers satisfy alpha + beta < 1 exactly when i + j + 1 < resolution.
            if (i + j + 1 >= resolution) continue;
            const double a = (static_cast<double>(i) + 0.5) * step;
            const double b = (static_cast<double>(j) + 0.5) * step;
            grid.emplace_back(1.0 - a - b, std::vector{a}, std::vector{b});
        }
    }
    return grid;
}

std::vector<ParamVector> fix_alpha_grid(double alpha, std::size_t resolution, double omega_max) {
    std::vector<ParamVector> grid;
    const double step = 1.0 / static_cast<double>(resolution);
    for (std::size_t j = 0; j < resolution; ++j) {
        for (std::size_t k = 0; k < resolution; ++k) {
            const double b = (static_cast<double>(j) + 0.5) * step * (1.0 - alpha);
            const double w = (static_cast<double>(k) + 0.5) * step * omega_max;
            grid.emplace_back(w, std::vector{alpha}, std::vector{b});
        }
    }
    return grid;
}

std::string add_business_days(const std::string& start, std::size_t count) {
    using namespace std::chrono;
    const int y = std::stoi(start.substr(0, 4));
    const unsigned mo = static_cast<unsigned>(std::stoi(start.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(std::stoi(start.substr(8, 2)));
    const year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok()) config_error("start_date", "'" + start + "' is not a valid date");
    sys_days day_point{ymd};
    std::size_t added = 0;
    while (added < count) {
        day_point += days{1};
        const auto wd = weekday{day_point}.c_encoding();
        if (wd != 0 && wd != 6) ++added;
    }
    const year_month_day out{day_point};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(out.year()), static_cast<unsigned>(out.month()),
                  static_cast<unsigned>(out.day()));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw Error(ErrorKind::data, "cannot write " + path);
}

std::string sidecar_path(const std::string& out) {
    std::filesystem::path p(out);
    p.replace_extension(".json");
    if (p.string() == out) p += ".meta.json";
    return p.string();
}

}  // namespace

ConfigReader::ConfigReader(json doc) : doc_(std::move(doc)) {
    if (!doc_.is_object()) throw Error(ErrorKind::config, "config must be a JSON object");
    for (const auto& [key, value] : doc_.items())
        if (value.is_structured()) config_error(key, "nested values are not allowed");
}

const json* ConfigReader::find(const std::string& key) {
    used_.insert(key);
    const auto it = doc_.find(key);
    return it == doc_.end() ? nullptr : &*it;
}

std::string ConfigReader::get_string(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (v && !v->is_string()) config_error(key, "expected a string");
    std::string out = v ? v->get<std::string>() : fallback;
    resolved_[key] = out;
    return out;
}

std::string ConfigReader::require_string(const std::string& key) {
    if (!doc_.contains(key)) config_error(key, "is required");
    return get_string(key, "");
}

double ConfigReader::get_double(const std::string& key, double fallback) {
    const json* v = find(key);
    if (v && !v->is_number()) config_error(key, "expected a number");
    const double out = v ? v->get<double>() : fallback;
    if (!std::isfinite(out)) config_error(key, "must be finite");
    resolved_[key] = out;
    return out;
}

std::size_t ConfigReader::get_size(const std::string& key, std::size_t fallback) {
    const json* v = find(key);
    if (v && !is_count(*v)) config_error(key, "expected a non-negative integer");
    const std::size_t out = v ? v->get<std::size_t>() : fallback;
    resolved_[key] = out;
    return out;
}

std::uint64_t ConfigReader::get_seed(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    if (v && !is_count(*v)) config_error(key, "expected a non-negative integer");
    const std::uint64_t out = v ? v->get<std::uint64_t>() : fallback;
    resolved_[key] = out;
    return out;
}

bool ConfigReader::get_bool(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (v && !v->is_boolean()) config_error(key, "expected true or false");
    const bool out = v ? v->get<bool>() : fallback;
    resolved_[key] = out;
    return out;
}

void ConfigReader::reject_unknown() const {
    for (const auto& [key, value] : doc_.items())
        if (!used_.count(key)) config_error(key, "unknown key");
}

CommandOutput run_scope_region(const json& config) {
    ConfigReader reader(config);
    const auto input = reader.get_string("input", "simulated");
    const auto seed = reader.get_seed("seed", 0);
    const auto m = reader.get_size("m", 100);
    const auto r = reader.get_size("r", 10);
    const bool standardize = reader.get_bool("standardize_residuals", false);
    const auto grid_mode = reader.get_string("grid", "triangle");
    const auto resolution = reader.get_size("resolution", 50);
    const auto threads = reader.get_size("threads", 1);

    std::optional<garch::SeriesSample> sample;
    if (input == "simulated") {
        const auto theta = read_theta(reader, 0.23, 0.44, 0.33);
        const auto noise = read_noise(reader, "logistic");
        const auto n = reader.get_size("n", 100);
        const auto burn_in = reader.get_size("burn_in", 0);
        const auto policy = read_policy(reader, burn_in == 0 ? garch::InitPolicy::observed
                                                             : garch::InitPolicy::unconditional);
        if (n < 5) config_error("n", "must be >= 5");
        const auto eps = harness::generate_noise(noise, n + burn_in, derive_seed(seed, 0, kDataStream));
        auto sim = garch::simulate(theta, eps, garch::SimulationInit::unconditional(theta), burn_in);
        sample = policy == garch::InitPolicy::observed ? sim : sim.reinitialized(policy);
    } else if (input == "prices") {
        const auto path = reader.require_string("input_path");
        sample = returns_sample(path, read_policy(reader, garch::InitPolicy::unconditional), nullptr);
    } else {
        config_error("input", "expected simulated or prices");
    }
    const double omega_max = grid_mode == "fix-alpha" ? reader.get_double("omega_max", 1.0) : 1.0;
    reader.reject_unknown();

    const scope::ScopeConfig sc{m, r, standardize, seed};
    try {
        sc.validate();
    } catch (const Error& e) {
        config_error("r", e.what());
    }
    if (resolution == 0) config_error("resolution", "must be >= 1");
    if (!(omega_max > 0.0)) config_error("omega_max", "must be > 0");

    const auto fit = qml::qmle_fit_best(*sample, {1, 1});
    std::vector<ParamVector> grid;
    if (grid_mode == "triangle") grid = triangle_grid(resolution);
    else if (grid_mode == "fix-alpha") grid = fix_alpha_grid(fit.theta_hat.alphas()[0], resolution, omega_max);
    else if (grid_mode == "point") grid = {fit.theta_hat};
    else config_error("grid", "expected triangle, fix-alpha or point");

    const auto perms = scope::PermutationSet::generate(sample->size(), m, derive_seed(seed, 0, kRegionStream));
    const auto field = scope::rank_field(*sample, grid, perms, sc, threads);
    const auto qmle_rank = scope::rank(fit.theta_hat, *sample, perms, sc);

    std::ostringstream csv;
    io::write_rank_field_csv(csv, io::rank_field_rows(field));

    auto meta = header("scope-region", reader);
    meta["theta_hat"] = theta_json(fit.theta_hat);
    meta["qmle_converged"] = fit.converged;
    meta["qmle_rank"] = qmle_rank;
    meta["qmle_in_region"] = qmle_rank <= m - r;
    meta["level"] = sc.level();
    meta["rows"] = field.points.size();
    meta["in_region_rows"] = std::count_if(field.points.begin(), field.points.end(),
                                           [](const scope::RankPoint& p) { return p.in_region; });
    return {csv.str(), dump(meta)};
}

CommandOutput run_coverage(const json& config) {
    ConfigReader reader(config);
    harness::CoverageConfig c;
    c.method = [&] {
        const auto name = reader.get_string("method", "scope");
        try {
            return harness::method_from_string(name);
        } catch (const Error& e) {
            config_error("method", e.what());
        }
    }();
    c.theta_star = read_theta(reader, 0.23, 0.44, 0.33);
    c.noise = read_noise(reader, "gaussian");
    c.n = reader.get_size("n", 100);
    c.trials = reader.get_size("trials", 1000);
    c.burn_in = reader.get_size("burn_in", 0);
    const auto name = reader.get_string("region_init", "auto");
    if (name != "auto") {
        try {
            c.region_init = garch::init_policy_from_string(name);
        } catch (const Error&) {
            config_error("region_init", "expected auto, observed, constant_omega or unconditional");
        }
    }
    c.level = reader.get_double("level", 0.9);
    c.m = reader.get_size("m", 100);
    c.r = reader.get_size("r", 10);
    c.standardize_residuals = reader.get_bool("standardize_residuals", false);
    c.bootstrap_b = reader.get_size("bootstrap_b", 99);
    c.area_samples = reader.get_size("area_samples", 0);
    c.seed = reader.get_seed("seed", 0);
    c.threads = reader.get_size("threads", 1);
    c.max_failure_rate = reader.get_double("max_failure_rate", 0.10);
    reader.reject_unknown();
    c.validate();

    const auto report = harness::empirical_coverage(c);
    auto doc = header("coverage", reader);
    doc["method"] = harness::to_string(c.method);
    doc["trials"] = report.trials;
    doc["hits"] = report.hits;
    doc["failures"] = report.failures;
    doc["empirical_coverage"] = report.empirical_coverage;
    doc["nominal_level"] = c.nominal_level();
    doc["region_init"] = garch::to_string(c.resolved_region_init());
    doc["relative_area"] = report.relative_area ? json(*report.relative_area) : json(nullptr);
    doc["area_samples"] = c.area_samples;
    doc["seed"] = c.seed;
    return {dump(doc), std::nullopt};
}

CommandOutput run_market(const json& config) {
    ConfigReader reader(config);
    const auto path = reader.require_string("input_path");
    const auto policy = read_policy(reader, garch::InitPolicy::unconditional);
    harness::CoverageConfig c;
    c.m = reader.get_size("m", 100);
    c.r = reader.get_size("r", 10);
    c.level = reader.get_double("level", 0.9);
    c.standardize_residuals = reader.get_bool("standardize_residuals", false);
    c.bootstrap_b = reader.get_size("bootstrap_b", 99);
    const auto area_samples = reader.get_size("area_samples", 1000);
    const auto lr_area_samples = reader.get_size("lr_area_samples", 100);
    c.seed = reader.get_seed("seed", 0);
    reader.reject_unknown();
    if (area_samples == 0) config_error("area_samples", "must be >= 1");

    std::string symbol;
    const auto sample = returns_sample(path, policy, &symbol);
    const auto fit = qml::qmle_fit_best(sample, {1, 1});

    auto doc = header("market", reader);
    doc["symbol"] = symbol;
    doc["returns"] = sample.size();
    doc["theta_hat"] = theta_json(fit.theta_hat);
    doc["qmle_converged"] = fit.converged;
    doc["qmle_score_norm"] = fit.score_norm;

    const harness::UnitVarianceSampler sampler({1, 1});
    json regions = json::object();
    for (auto method : {harness::Method::scope, harness::Method::asym_ellipsoid, harness::Method::res_bootstrap,
                        harness::Method::lr_bootstrap}) {
        c.method = method;
        c.validate();
        json entry;
        try {
            const auto region = harness::build_region(c, sample, derive_seed(c.seed, 0, kRegionStream));
            const auto samples = method == harness::Method::lr_bootstrap ? lr_area_samples : area_samples;
            entry["contains_qmle"] = region(fit.theta_hat);
            entry["area_samples"] = samples;
            entry["relative_area"] =
                samples > 0 ? json(harness::relative_area(region, sampler, samples, derive_seed(c.seed, 0, kAreaStream)))
                            : json(nullptr);
        } catch (const Error& e) {
            entry = json{{"error", to_string(e.kind())}, {"message", e.what()}};
        }
        regions[harness::to_string(method)] = entry;
    }
    doc["regions"] = regions;
    return {dump(doc), std::nullopt};
}

CommandOutput run_synth_prices(const json& config) {
    ConfigReader reader(config);
    const auto theta = read_theta(reader, 0.23, 0.44, 0.33);
    const auto noise = read_noise(reader, "gaussian");
    const auto n = reader.get_size("n", 252);
    const auto burn_in = reader.get_size("burn_in", 1000);
    const auto seed = reader.get_seed("seed", 0);
    const double start_price = reader.get_double("start_price", 100.0);
    const double scale = reader.get_double("return_scale", 0.01);
    const auto start_date = reader.get_string("start_date", "2014-01-02");
    reader.reject_unknown();
    if (n < 2) config_error("n", "must be >= 2");
    if (!(start_price > 0.0)) config_error("start_price", "must be > 0");
    if (!(scale > 0.0)) config_error("return_scale", "must be > 0");

    const auto eps = harness::generate_noise(noise, n - 1 + burn_in, derive_seed(seed, 0, kDataStream));
    const auto sim = garch::simulate(theta, eps, garch::SimulationInit::unconditional(theta), burn_in);
    io::PriceSeries prices;
    double cumulative = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        if (t > 0) cumulative += scale * sim.observations()[t - 1];
        prices.dates.push_back(t == 0 ? add_business_days(start_date, 0) : add_business_days(prices.dates.back(), 1));
        prices.closes.push_back(start_price * std::exp(cumulative));
    }
    std::ostringstream out;
    io::write_price_csv(out, prices);
    return {out.str(), std::nullopt};
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::config:
        case ErrorKind::invalid_parameter: return 2;
        case ErrorKind::data:
        case ErrorKind::invalid_price:
        case ErrorKind::degenerate_sample:
        case ErrorKind::degenerate_data:
        case ErrorKind::dimension_mismatch: return 3;
        case ErrorKind::not_stationary:
        case ErrorKind::did_not_converge:
        case ErrorKind::singular_information:
        case ErrorKind::too_many_failures: return 4;
    }
    return 4;
}

int main(int argc, char** argv) {
    CLI::App app{"Exact score-permutation confidence regions for GARCH models"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    struct Command {
        const char* name;
        const char* help;
        CommandOutput (*run)(const json&);
    };
    const Command commands[] = {
        {"scope-region", "rank field of the ScoPe region over a parameter grid (CSV + JSON sidecar)", run_scope_region},
        {"coverage", "Monte Carlo coverage and relative area of one method (JSON)", run_coverage},
        {"market", "relative areas of all four regions for a price file (JSON)", run_market},
        {"synth-prices", "synthetic date,close file from a simulated GARCH return process", run_synth_prices},
    };
    for (const auto& cmd : commands) {
        auto* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--out", out_path, "output path (stdout if omitted)");
        sub->add_option("--seed", seed, "overrides the config's seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const Command* chosen = nullptr;
        for (const auto& cmd : commands)
            if (app.got_subcommand(cmd.name)) chosen = &cmd;

        json config;
        try {
            config = json::parse(read_file(config_path));
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::config, config_path + ": " + e.what());
        }
        if (seed) {
            if (!config.is_object()) throw Error(ErrorKind::config, "config must be a JSON object");
            config["seed"] = *seed;
        }
        const auto output = chosen->run(config);
        if (out_path.empty()) {
            if (output.sidecar) throw Error(ErrorKind::config, "--out is required for this command");
            std::cout << output.primary;
        } else {
            write_file(out_path, output.primary);
            if (output.sidecar) write_file(sidecar_path(out_path), *output.sidecar);
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "gscope: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "gscope: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace gscope::cli
