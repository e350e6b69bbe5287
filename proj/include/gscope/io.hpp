#pragma once

#include "gscope/scope.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace gscope::io {

/// Shortest decimal string that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

/// Daily closing prices with strictly increasing ISO-8601 dates.
struct PriceSeries {
    std::string symbol;
    std::vector<std::string> dates;
    std::vector<double> closes;
};

/// Parses a `date,close` CSV. Throws a data error naming `source` and the line on malformed
/// rows, non-ISO or non-increasing dates, and fewer than two rows. Prices are not checked
/// here; compound_returns reports non-positive ones.
[[nodiscard]] PriceSeries parse_price_csv(std::istream& in, const std::string& source);
[[nodiscard]] PriceSeries read_price_csv(const std::filesystem::path& path);
void write_price_csv(std::ostream& out, const PriceSeries& prices);

/// R_t = log(P_t / P_{t-1}); throws InvalidPrice naming the data row of a non-positive close.
[[nodiscard]] std::vector<double> compound_returns(const PriceSeries& prices);

/// One GARCH(1,1) grid point of a rank field.
struct RankFieldRow {
    double alpha;
    double beta;
    double omega;
    std::size_t rank;
    bool in_region;

    friend bool operator==(const RankFieldRow&, const RankFieldRow&) = default;
};

inline constexpr const char* kRankFieldHeader = "alpha,beta,omega,rank,in_region";

/// Rows of a GARCH(1,1) rank field; throws InvalidParameter for other orders.
[[nodiscard]] std::vector<RankFieldRow> rank_field_rows(const scope::RankField& field);
void write_rank_field_csv(std::ostream& out, const std::vector<RankFieldRow>& rows);
[[nodiscard]] std::vector<RankFieldRow> parse_rank_field_csv(std::istream& in, const std::string& source);

}  // namespace gscope::io
