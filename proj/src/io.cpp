#include "gscope/io.hpp"

#include "gscope/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace gscope::io {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

[[noreturn]] void data_error(const std::string& source, std::size_t line, const std::string& what) {
    throw Error(ErrorKind::data, source + ":" + std::to_string(line) + ": " + what);
}

bool parse_number(const std::string& text, double& value) {
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    return res.ec == std::errc{} && res.ptr == end;
}

bool parse_count(const std::string& text, std::size_t& value) {
    const char* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, value);
    return res.ec == std::errc{} && res.ptr == end;
}

bool is_iso_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9') return false;
    const int month = std::stoi(s.substr(5, 2));
    const int day = std::stoi(s.substr(8, 2));
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

PriceSeries parse_price_csv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != "date,close")
        data_error(source, 1, "expected header 'date,close'");
    PriceSeries prices;
    prices.symbol = std::filesystem::path(source).stem().string();
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 2) data_error(source, lineno, "expected 2 fields, got " + std::to_string(cells.size()));
        if (!is_iso_date(cells[0])) data_error(source, lineno, "date '" + cells[0] + "' is not YYYY-MM-DD");
        if (!prices.dates.empty() && !(prices.dates.back() < cells[0]))
            data_error(source, lineno, "dates must be strictly increasing");
        double close = 0.0;
        if (!parse_number(cells[1], close) || !std::isfinite(close))
            data_error(source, lineno, "close '" + cells[1] + "' is not a number");
        prices.dates.push_back(cells[0]);
        prices.closes.push_back(close);
    }
    if (prices.closes.size() < 2) data_error(source, lineno, "need at least two prices");
    return prices;
}

PriceSeries read_price_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::data, "cannot open " + path.string());
    return parse_price_csv(in, path.string());
}

void write_price_csv(std::ostream& out, const PriceSeries& prices) {
    out << "date,close\n";
    for (std::size_t i = 0; i < prices.closes.size(); ++i)
        out << prices.dates[i] << ',' << format_double(prices.closes[i]) << '\n';
}

std::vector<double> compound_returns(const PriceSeries& prices) {
    for (std::size_t i = 0; i < prices.closes.size(); ++i) {
        if (!(prices.closes[i] > 0.0)) {
            throw Error(ErrorKind::invalid_price, "non-positive close " + format_double(prices.closes[i]) +
                                                      " at data row " + std::to_string(i + 1) +
                                                      (i < prices.dates.size() ? " (" + prices.dates[i] + ")" : ""));
        }
    }
    std::vector<double> out;
    out.reserve(prices.closes.size() - 1);
    for (std::size_t i = 1; i < prices.closes.size(); ++i) out.push_back(std::log(prices.closes[i] / prices.closes[i - 1]));
    return out;
}

std::vector<RankFieldRow> rank_field_rows(const scope::RankField& field) {
    std::vector<RankFieldRow> rows;
    rows.reserve(field.points.size());
    for (const auto& pt : field.points) {
        if (pt.theta.alphas().size() != 1 || pt.theta.betas().size() != 1)
            throw Error(ErrorKind::invalid_parameter, "rank-field CSV supports GARCH(1,1) only");
        rows.push_back({pt.theta.alphas()[0], pt.theta.betas()[0], pt.theta.omega(), pt.rank, pt.in_region});
    }
    return rows;
}

void write_rank_field_csv(std::ostream& out, const std::vector<RankFieldRow>& rows) {
    out << kRankFieldHeader << '\n';
    for (const auto& r : rows) {
        out << format_double(r.alpha) << ',' << format_double(r.beta) << ',' << format_double(r.omega) << ','
            << r.rank << ',' << (r.in_region ? "true" : "false") << '\n';
    }
}

std::vector<RankFieldRow> parse_rank_field_csv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != kRankFieldHeader)
        data_error(source, 1, std::string("expected header '") + kRankFieldHeader + "'");
    std::vector<RankFieldRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        line = strip_cr(line);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != 5) data_error(source, lineno, "expected 5 fields, got " + std::to_string(cells.size()));
        RankFieldRow row{};
        if (!parse_number(cells[0], row.alpha) || !parse_number(cells[1], row.beta) ||
            !parse_number(cells[2], row.omega) || !parse_count(cells[3], row.rank)) {
            data_error(source, lineno, "malformed number");
        }
        if (cells[4] == "true") row.in_region = true;
        else if (cells[4] == "false") row.in_region = false;
        else data_error(source, lineno, "in_region must be true or false");
        rows.push_back(row);
    }
    return rows;
}

}  // namespace gscope::io
