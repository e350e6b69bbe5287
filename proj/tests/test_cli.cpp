#include <catch2/catch_amalgamated.hpp>

#include "gscope/cli.hpp"
#include "gscope/io.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace gscope;
using nlohmann::json;
using Catch::Approx;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
    const auto dir = std::filesystem::temp_directory_path() / "gscope_cli_tests";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream(path) << contents;
    return path;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an exception");
    return ErrorKind::data;
}

std::string message_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

int run_main(std::vector<std::string> args) {
    args.insert(args.begin(), "gscope");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli::main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("compound returns", "[cli]") {
    io::PriceSeries p{"x", {"2014-01-02", "2014-01-03", "2014-01-06"}, {1.0, std::exp(1.0), std::exp(2.0)}};
    const auto r = io::compound_returns(p);
    REQUIRE(r.size() == 2);
    CHECK(r[0] == Approx(1.0).epsilon(1e-15));
    CHECK(r[1] == Approx(1.0).epsilon(1e-15));

    p.closes = {5.0, 5.0, 5.0};
    for (double v : io::compound_returns(p)) CHECK(v == 0.0);

    io::PriceSeries year{"y", std::vector<std::string>(252), std::vector<double>(252, 10.0)};
    CHECK(io::compound_returns(year).size() == 251);

    p.closes = {5.0, 0.0, 5.0};
    CHECK(kind_of([&] { (void)io::compound_returns(p); }) == ErrorKind::invalid_price);
    CHECK(message_of([&] { (void)io::compound_returns(p); }).find("row 2") != std::string::npos);
}

TEST_CASE("price CSV parsing", "[cli]") {
    std::istringstream good("date,close\r\n2014-01-02,100.5\r\n2014-01-03,101\r\n");
    const auto p = io::parse_price_csv(good, "idx.csv");
    CHECK(p.symbol == "idx");
    CHECK(p.closes == std::vector<double>{100.5, 101.0});

    const std::pair<const char*, const char*> bad[] = {
        {"day,close\n2014-01-02,1\n2014-01-03,2\n", "idx.csv:1"},
        {"date,close\n2014-01-02,1\n2014-01-02,2\n", "idx.csv:3"},
        {"date,close\n2014-01-02,1\n2014/01/03,2\n", "idx.csv:3"},
        {"date,close\n2014-01-02,abc\n2014-01-03,2\n", "idx.csv:2"},
        {"date,close\n2014-01-02,1,7\n", "idx.csv:2"},
        {"date,close\n2014-01-02,1\n", "idx.csv"},
    };
    for (const auto& [text, where] : bad) {
        std::istringstream in(text);
        INFO(text);
        CHECK(kind_of([&] { (void)io::parse_price_csv(in, "idx.csv"); }) == ErrorKind::data);
        std::istringstream again(text);
        CHECK(message_of([&] { (void)io::parse_price_csv(again, "idx.csv"); }).find(where) != std::string::npos);
    }
}

TEST_CASE("shortest round-trip float formatting", "[cli][property]") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 10000; ++i) {
        const double v = std::ldexp(u(rng), static_cast<int>(rng() % 60) - 30);
        CHECK(std::stod(io::format_double(v)) == v);
    }
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(1.0) == "1");
}

TEST_CASE("scope-region output", "[cli]") {
    const json config{{"seed", 3}, {"resolution", 12}, {"m", 40}, {"r", 4}};
    const auto out = cli::run_scope_region(config);
    const auto again = cli::run_scope_region(config);
    CHECK(out.primary == again.primary);
    CHECK(out.sidecar == again.sidecar);

    std::istringstream in(out.primary);
    const auto rows = io::parse_rank_field_csv(in, "field.csv");
    CHECK(rows.size() == 12 * 11 / 2);
    std::ostringstream re;
    io::write_rank_field_csv(re, rows);
    CHECK(re.str() == out.primary);
    for (const auto& row : rows) {
        CHECK(row.alpha + row.beta < 1.0);
        CHECK(row.in_region == (row.rank <= 36));
    }

    const auto meta = json::parse(*out.sidecar);
    CHECK(meta["schema_version"] == cli::kSchemaVersion);
    CHECK(meta["version"] == cli::kVersion);
    CHECK(meta["qmle_rank"] == 1);
    CHECK(meta["config"]["resolution"] == 12);
    CHECK(meta["config"]["noise"] == "logistic");

    const auto point = cli::run_scope_region(json{{"seed", 3}, {"grid", "point"}});
    std::istringstream pin(point.primary);
    const auto prow = io::parse_rank_field_csv(pin, "point.csv");
    REQUIRE(prow.size() == 1);
    CHECK(prow[0].in_region);
    CHECK(prow[0].rank == 1);

    const auto fix = cli::run_scope_region(json{{"seed", 3}, {"grid", "fix-alpha"}, {"resolution", 5}, {"omega_max", 2.0}});
    std::istringstream fin(fix.primary);
    const auto frows = io::parse_rank_field_csv(fin, "fix.csv");
    CHECK(frows.size() == 25);
    for (const auto& row : frows) CHECK(row.alpha == frows.front().alpha);
}

TEST_CASE("rank-field CSV rejects malformed input", "[cli]") {
    for (const char* text : {"a,b\n", "alpha,beta,omega,rank,in_region\n0.1,0.2,0.7,3,yes\n",
                             "alpha,beta,omega,rank,in_region\n0.1,0.2,0.7,-3,true\n"}) {
        std::istringstream in(text);
        CHECK_THROWS_AS(io::parse_rank_field_csv(in, "f.csv"), Error);
    }
}

TEST_CASE("coverage command", "[cli]") {
    const json config{{"trials", 1}, {"m", 20}, {"r", 2}, {"seed", 5}};
    const auto out = cli::run_coverage(config);
    CHECK(out.primary == cli::run_coverage(config).primary);
    const auto doc = json::parse(out.primary);
    CHECK(doc["trials"] == 1);
    CHECK(doc["hits"].get<int>() <= 1);
    CHECK(doc["relative_area"].is_null());
    CHECK(doc["schema_version"] == cli::kSchemaVersion);
    CHECK(doc["method"] == "scope");
    CHECK(doc["nominal_level"] == 0.9);
}

TEST_CASE("config validation names the key", "[cli]") {
    CHECK(message_of([] { (void)cli::run_coverage(json{{"trails", 10}}); }).find("'trails'") != std::string::npos);
    CHECK(message_of([] { (void)cli::run_coverage(json{{"trials", "ten"}}); }).find("'trials'") != std::string::npos);
    CHECK(message_of([] { (void)cli::run_coverage(json{{"noise", "cauchy"}}); }).find("'noise'") != std::string::npos);
    CHECK(kind_of([] { (void)cli::run_coverage(json{{"m", 10}, {"r", 10}}); }) == ErrorKind::config);
    CHECK(kind_of([] { (void)cli::run_coverage(json{{"nested", json::object()}}); }) == ErrorKind::config);
    CHECK(kind_of([] { (void)cli::run_scope_region(json{{"grid", "circle"}, {"resolution", 2}}); }) == ErrorKind::config);
    CHECK(kind_of([] { (void)cli::run_market(json::object()); }) == ErrorKind::config);
    CHECK(kind_of([] { (void)cli::run_coverage(json::array()); }) == ErrorKind::config);
}

TEST_CASE("market pipeline", "[cli]") {
    const auto prices = cli::run_synth_prices(json{{"n", 300}, {"seed", 11}});
    std::istringstream pin(prices.primary);
    const auto parsed = io::parse_price_csv(pin, "synth.csv");
    CHECK(parsed.closes.size() == 300);
    CHECK(parsed.closes.front() == 100.0);
    const auto path = temp_file("synth.csv", prices.primary);

    const json config{{"input_path", path.string()}, {"area_samples", 400}, {"lr_area_samples", 0},
                      {"bootstrap_b", 60}, {"seed", 2}};
    const auto out = cli::run_market(config);
    const auto doc = json::parse(out.primary);
    CHECK(doc["returns"] == 299);
    CHECK(doc["symbol"] == "synth");
    for (const char* method : {"scope", "asym_ellipsoid", "res_bootstrap", "lr_bootstrap"}) {
        INFO(method);
        REQUIRE(doc["regions"].contains(method));
        CHECK_FALSE(doc["regions"][method].contains("error"));
    }
    const double scope_area = doc["regions"]["scope"]["relative_area"];
    const double boot_area = doc["regions"]["res_bootstrap"]["relative_area"];
    CHECK(scope_area > 0.0);
    CHECK(scope_area <= 2.0 * boot_area);
    CHECK(boot_area <= 2.0 * scope_area);
    CHECK(doc["regions"]["lr_bootstrap"]["relative_area"].is_null());

    const auto two_rows = temp_file("two.csv", "date,close\n2014-01-02,100\n2014-01-03,101\n");
    CHECK(kind_of([&] { (void)cli::run_market(json{{"input_path", two_rows.string()}}); }) ==
          ErrorKind::degenerate_sample);
    const auto zero = temp_file("zero.csv", "date,close\n2014-01-02,100\n2014-01-03,0\n2014-01-06,101\n");
    CHECK(kind_of([&] { (void)cli::run_market(json{{"input_path", zero.string()}}); }) == ErrorKind::invalid_price);
    CHECK(message_of([&] { (void)cli::run_market(json{{"input_path", zero.string()}}); }).find("row 2") !=
          std::string::npos);
}

TEST_CASE("command-line front end", "[cli]") {
    CHECK(cli::exit_code_for(ErrorKind::config) == 2);
    CHECK(cli::exit_code_for(ErrorKind::invalid_price) == 3);
    CHECK(cli::exit_code_for(ErrorKind::degenerate_sample) == 3);
    CHECK(cli::exit_code_for(ErrorKind::singular_information) == 4);
    CHECK(cli::exit_code_for(ErrorKind::did_not_converge) == 4);

    const auto good = temp_file("cov.json", R"({"trials": 3, "m": 20, "r": 2})");
    const auto bad = temp_file("bad.json", R"({"trials": 3, "colour": "red"})");
    const auto broken = temp_file("broken.json", R"({"trials": )");
    const auto out = std::filesystem::temp_directory_path() / "gscope_cli_tests" / "cov_out.json";
    CHECK(run_main({"coverage", "--config", good.string(), "--out", out.string(), "--seed", "9"}) == 0);
    const auto doc = json::parse(std::ifstream(out));
    CHECK(doc["seed"] == 9);
    CHECK(doc["config"]["seed"] == 9);
    CHECK(run_main({"coverage", "--config", bad.string()}) == 2);
    CHECK(run_main({"coverage", "--config", broken.string()}) == 2);
    CHECK(run_main({"coverage", "--config", "/nonexistent/config.json"}) == 2);
    CHECK(run_main({"frobnicate"}) == 2);

    const auto region_cfg = temp_file("region.json", R"({"resolution": 4, "m": 20, "r": 2})");
    const auto csv = std::filesystem::temp_directory_path() / "gscope_cli_tests" / "field.csv";
    CHECK(run_main({"scope-region", "--config", region_cfg.string(), "--out", csv.string()}) == 0);
    CHECK(std::filesystem::exists(csv.parent_path() / "field.json"));
    CHECK(run_main({"scope-region", "--config", region_cfg.string()}) == 2);

    const auto zero = temp_file("zero_px.csv", "date,close\n2014-01-02,100\n2014-01-03,0\n2014-01-06,101\n");
    const auto market_cfg = temp_file("market.json", json{{"input_path", zero.string()}}.dump());
    CHECK(run_main({"market", "--config", market_cfg.string()}) == 3);
}
