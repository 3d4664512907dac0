#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "bivex/mcmc.hpp"
#include "bivex/predictive.hpp"
#include "bivex/version.hpp"

namespace bivex {

using ordered_json = nlohmann::ordered_json;

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc())
        throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

inline ordered_json trace_record_json(const TraceRecord& rec) {
    return ordered_json{{"iter", rec.iter},        {"m", rec.theta.m()},
                        {"h0", rec.theta.h0},      {"h1", rec.theta.h1},
                        {"ys", rec.theta.ys},      {"xi1", rec.g1.xi},
                        {"zeta1", rec.g1.zeta},    {"sigma1", rec.g1.sigma},
                        {"xi2", rec.g2.xi},        {"zeta2", rec.g2.zeta},
                        {"sigma2", rec.g2.sigma},  {"loglik", rec.log_lik}};
}

/// One JSON object per line, in recording order.
inline void write_trace_ndjson(std::ostream& out, const Trace& trace) {
    for (const auto& rec : trace.records) out << trace_record_json(rec).dump() << '\n';
}

inline void write_trace_ndjson_file(const std::string& path, const Trace& trace) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace to '" + path + "'");
    write_trace_ndjson(out, trace);
}

/// Rebuild a trace from its NDJSON lines.  The margin anchors are not part
/// of the line schema, so the thresholds travel separately (from the run
/// manifest).  Occupancy counts are rebuilt from the records.
inline Trace read_trace_ndjson(std::istream& in, double u1, double u2) {
    Trace trace;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + e.what());
        }
        TraceRecord rec;
        rec.iter = j.at("iter").get<std::uint64_t>();
        rec.theta.h0 = j.at("h0").get<double>();
        rec.theta.h1 = j.at("h1").get<double>();
        rec.theta.ys = j.at("ys").get<std::vector<double>>();
        if (j.at("m").get<std::size_t>() != rec.theta.ys.size())
            throw std::runtime_error("trace line " + std::to_string(lineno) +
                                     ": atom count disagrees with the atom list");
        rec.g1 = MarginParams{j.at("xi1").get<double>(), j.at("zeta1").get<double>(),
                              j.at("sigma1").get<double>(), u1};
        rec.g2 = MarginParams{j.at("xi2").get<double>(), j.at("zeta2").get<double>(),
                              j.at("sigma2").get<double>(), u2};
        rec.log_lik = j.at("loglik").get<double>();
        ++trace.occupancy[static_cast<int>(rec.theta.m())];
        trace.records.push_back(std::move(rec));
    }
    return trace;
}

inline Trace read_trace_ndjson_file(const std::string& path, double u1, double u2) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read trace from '" + path + "'");
    return read_trace_ndjson(in, u1, u2);
}

/// w, mean, lower, upper -- the pointwise posterior of H(w).
inline void write_estimate_csv(std::ostream& out, const BayesEstimate& est) {
    out << "w,mean,lower,upper\n";
    for (std::size_t i = 0; i < est.grid.size(); ++i)
        out << format_double(est.grid[i]) << ',' << format_double(est.mean[i]) << ','
            << format_double(est.lower[i]) << ',' << format_double(est.upper[i]) << '\n';
}

/// Long-format density surface: x1, x2, density.
inline void write_density_csv(std::ostream& out, const PredictiveGrid& grid) {
    out << "x1,x2,density\n";
    for (std::size_t i = 0; i < grid.x1.size(); ++i)
        for (std::size_t j = 0; j < grid.x2.size(); ++j)
            out << format_double(grid.x1[i]) << ',' << format_double(grid.x2[j]) << ','
                << format_double(grid.density[i][j]) << '\n';
}

struct QuantileCurvePoint {
    double x1 = 0.0;
    double quantile = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

inline void write_quantile_csv(std::ostream& out, const std::vector<QuantileCurvePoint>& curve) {
    out << "x1,quantile,lower_band,upper_band\n";
    for (const auto& p : curve)
        out << format_double(p.x1) << ',' << format_double(p.quantile) << ','
            << format_double(p.lower) << ',' << format_double(p.upper) << '\n';
}

/// Spectral state plus its CDF on a grid, e.g. for a posterior-mean summary.
inline ordered_json spectral_json(const SpectralParams& theta, const std::vector<double>& grid,
                                  const std::vector<double>& cdf) {
    return ordered_json{{"m", theta.m()}, {"h0", theta.h0}, {"h1", theta.h1},
                        {"ys", theta.ys}, {"grid", grid},   {"cdf", cdf}};
}

inline ordered_json mcmc_config_json(const McmcConfig& cfg) {
    return ordered_json{{"iterations", cfg.iterations},
                        {"burn_in", cfg.burn_in},
                        {"thin", cfg.thin},
                        {"seed", cfg.seed},
                        {"lambda", cfg.lambda},
                        {"quadrature_nodes", cfg.quadrature_nodes},
                        {"margin_scale", cfg.margin_scale},
                        {"prior_only", cfg.prior_only},
                        {"max_atoms", cfg.max_atoms}};
}

inline McmcConfig mcmc_config_from_json(const ordered_json& j) {
    McmcConfig cfg;
    cfg.iterations = j.at("iterations").get<std::uint64_t>();
    cfg.burn_in = j.at("burn_in").get<std::uint64_t>();
    cfg.thin = j.at("thin").get<std::uint64_t>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.lambda = j.at("lambda").get<double>();
    cfg.quadrature_nodes = j.at("quadrature_nodes").get<int>();
    cfg.margin_scale = j.at("margin_scale").get<double>();
    cfg.prior_only = j.at("prior_only").get<bool>();
    cfg.max_atoms = j.at("max_atoms").get<int>();
    return cfg;
}

inline void write_json_file(const std::string& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

inline ordered_json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read '" + path + "'");
    return ordered_json::parse(in);
}

}  // namespace bivex
