#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bivex/stats.hpp"
#include "bivex/tail.hpp"

namespace bivex {

/// Two numeric columns pulled out of a delimited text file, with the rows
/// that failed to parse counted rather than kept.
struct BivariateSample {
    std::vector<std::pair<double, double>> rows;
    std::size_t dropped = 0;
    std::string label1;
    std::string label2;
};

/// Exceedance pattern counts produced by censoring at a threshold pair:
/// the first digit refers to coordinate 1, a 1 meaning "exceeds".
struct QuadrantCounts {
    std::size_t n00 = 0;
    std::size_t n10 = 0;
    std::size_t n01 = 0;
    std::size_t n11 = 0;
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    if (delim == ' ') {
        std::istringstream stream(line);
        std::string tok;
        while (stream >> tok) out.push_back(tok);
        return out;
    }
    std::string tok;
    std::istringstream stream(line);
    while (std::getline(stream, tok, delim)) out.push_back(tok);
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

inline bool parse_double(const std::string& raw, double& out) {
    const std::string tok = trim(raw);
    if (tok.empty()) return false;
    std::size_t used = 0;
    try {
        out = std::stod(tok, &used);
    } catch (const std::exception&) {
        return false;
    }
    if (used != tok.size()) return false;
    return std::isfinite(out);
}

inline char sniff_delimiter(const std::string& line) {
    const std::size_t commas = std::count(line.begin(), line.end(), ',');
    const std::size_t semis = std::count(line.begin(), line.end(), ';');
    const std::size_t tabs = std::count(line.begin(), line.end(), '\t');
    if (tabs >= commas && tabs >= semis && tabs > 0) return '\t';
    if (semis > commas) return ';';
    if (commas > 0) return ',';
    return ' ';
}

/// A selector made of digits only is a 1-based column index.
inline bool selector_is_index(const std::string& selector) {
    const std::string sel = trim(selector);
    if (sel.empty()) throw std::invalid_argument("ingest: empty column selector");
    for (char c : sel)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

/// Resolve a column selector -- a 1-based index or a header name -- against
/// the header tokens (empty when the file has none).
inline std::size_t resolve_column(const std::string& selector,
                                  const std::vector<std::string>& header,
                                  std::size_t width) {
    const std::string sel = trim(selector);
    if (selector_is_index(sel)) {
        const std::size_t idx = std::stoul(sel);
        if (idx < 1 || idx > width)
            throw std::invalid_argument("ingest: column index " + sel + " outside 1.." +
                                        std::to_string(width));
        return idx - 1;
    }
    for (std::size_t i = 0; i < header.size(); ++i)
        if (trim(header[i]) == sel) return i;
    throw std::invalid_argument("ingest: no column named '" + sel + "' in the header");
}

}  // namespace detail

/// Read two numeric columns from a delimited stream.  The delimiter is
/// sniffed from the first line (tab, semicolon, comma, or whitespace); a
/// first row whose selected cells are not numeric is treated as a header.
/// Columns are selected by 1-based index or by header name.  Rows whose
/// selected cells are missing or non-numeric are dropped and counted; at
/// least 20 usable rows must remain.
inline BivariateSample ingest(std::istream& in, const std::string& col1, const std::string& col2) {
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!detail::trim(line).empty()) lines.push_back(line);
    }
    if (lines.empty()) throw std::invalid_argument("ingest: the input holds no data");

    const char delim = detail::sniff_delimiter(lines.front());
    const auto first = detail::split_line(lines.front(), delim);
    const std::size_t width = first.size();

    // Name selectors require a header row; with pure index selectors the
    // first row is data exactly when the selected cells parse as numbers.
    bool has_header = !(detail::selector_is_index(col1) && detail::selector_is_index(col2));
    if (!has_header) {
        const std::size_t i1 = detail::resolve_column(col1, {}, width);
        const std::size_t i2 = detail::resolve_column(col2, {}, width);
        double ignored;
        if (!detail::parse_double(first[i1], ignored) || !detail::parse_double(first[i2], ignored))
            has_header = true;
    }

    const std::vector<std::string> header = has_header ? first : std::vector<std::string>{};
    const std::size_t i1 = detail::resolve_column(col1, header, width);
    const std::size_t i2 = detail::resolve_column(col2, header, width);
    if (i1 == i2) throw std::invalid_argument("ingest: the two column selectors coincide");

    BivariateSample sample;
    sample.label1 = has_header ? detail::trim(header[i1]) : "#" + std::to_string(i1 + 1);
    sample.label2 = has_header ? detail::trim(header[i2]) : "#" + std::to_string(i2 + 1);
    for (std::size_t r = has_header ? 1 : 0; r < lines.size(); ++r) {
        const auto cells = detail::split_line(lines[r], delim);
        double a, b;
        if (std::max(i1, i2) < cells.size() && detail::parse_double(cells[i1], a) &&
            detail::parse_double(cells[i2], b))
            sample.rows.emplace_back(a, b);
        else
            ++sample.dropped;
    }
    if (sample.rows.size() < 20)
        throw std::invalid_argument("ingest: only " + std::to_string(sample.rows.size()) +
                                    " usable rows; need at least 20");
    return sample;
}

inline BivariateSample ingest_file(const std::string& path, const std::string& col1,
                                   const std::string& col2) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("ingest: cannot open '" + path + "'");
    return ingest(in, col1, col2);
}

/// Marginal thresholds at a common sample-quantile level.
inline std::pair<double, double> quantile_thresholds(
    const std::vector<std::pair<double, double>>& rows, double level) {
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("quantile_thresholds: level must lie in (0,1)");
    if (rows.empty()) throw std::invalid_argument("quantile_thresholds: empty sample");
    std::vector<double> x1(rows.size()), x2(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        x1[i] = rows[i].first;
        x2[i] = rows[i].second;
    }
    std::sort(x1.begin(), x1.end());
    std::sort(x2.begin(), x2.end());
    return {quantile_sorted(x1, level), quantile_sorted(x2, level)};
}

/// Censor a bivariate sample from below at (u1, u2): strict exceedances keep
/// their coordinate, everything else collapses onto the threshold.  Fails
/// when the thresholds sit above the sample maximum in both coordinates,
/// because no observation then carries tail information.
inline CensoredSample censor_sample(const std::vector<std::pair<double, double>>& rows, double u1,
                                    double u2) {
    if (!(std::isfinite(u1) && std::isfinite(u2)))
        throw std::invalid_argument("censor_sample: thresholds must be finite");
    CensoredSample data;
    data.u1 = u1;
    data.u2 = u2;
    for (const auto& [a, b] : rows) {
        const bool d1 = a > u1, d2 = b > u2;
        if (d1 && d2)
            data.both.emplace_back(a, b);
        else if (d1)
            data.x1_only.push_back(a);
        else if (d2)
            data.x2_only.push_back(b);
        else
            ++data.n_neither;
    }
    if (data.n_exceed1() == 0 && data.n_exceed2() == 0)
        throw std::invalid_argument(
            "censor_sample: the thresholds exceed every observation in both coordinates");
    return data;
}

inline QuadrantCounts quadrant_counts(const CensoredSample& data) {
    return {data.n_neither, data.x1_only.size(), data.x2_only.size(), data.both.size()};
}

}  // namespace bivex
