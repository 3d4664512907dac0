// Command-line front end: simulate synthetic tail samples, fit the
// censored-likelihood reversible-jump sampler, turn saved traces into
// predictive summaries, and visualize the prior on the spectral measure.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "bivex/data.hpp"
#include "bivex/io.hpp"
#include "bivex/mcmc.hpp"
#include "bivex/predictive.hpp"
#include "bivex/stats.hpp"
#include "bivex/synthetic.hpp"
#include "bivex/version.hpp"

namespace fs = std::filesystem;
using bivex::ordered_json;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

ordered_json version_block() {
    return ordered_json{{"bivex", BIVEX_VERSION}, {"trace_format", 1}};
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = a + (b - a) * i / (n - 1.0);
    return out;
}

fs::path prepare_dir(const std::string& dir) {
    fs::path out(dir);
    fs::create_directories(out);
    return out;
}

std::pair<std::string, std::string> split_columns(const std::string& arg) {
    const auto comma = arg.find(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == arg.size())
        throw std::invalid_argument("--columns expects two selectors separated by a comma");
    return {arg.substr(0, comma), arg.substr(comma + 1)};
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

// ---------------------------------------------------------------- simulate

struct SimulateOptions {
    double r = 0.5;
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    std::string outdir = ".";
};

void run_simulate(const SimulateOptions& opt) {
    Timer timer;
    const auto rows = bivex::sample_fr({opt.r, opt.n, opt.seed});
    const fs::path out = prepare_dir(opt.outdir);

    auto csv = open_out(out / "sample.csv");
    csv << "x1,x2\n";
    for (const auto& [a, b] : rows)
        csv << bivex::format_double(a) << ',' << bivex::format_double(b) << '\n';

    ordered_json manifest{{"command", "simulate"},
                          {"version", version_block()},
                          {"config", {{"r", opt.r}, {"n", opt.n}, {"seed", opt.seed}}},
                          {"outputs", {{"sample", "sample.csv"}}},
                          {"timings_ms", {{"total", timer.ms()}}}};
    bivex::write_json_file((out / "manifest.json").string(), manifest);
    std::cout << "wrote " << (out / "sample.csv").string() << " (" << rows.size() << " rows)\n";
}

// --------------------------------------------------------------------- fit

struct FitOptions {
    std::string input;
    std::string columns = "1,2";
    double threshold_quantile = 0.9;
    double u1 = std::numeric_limits<double>::quiet_NaN();
    double u2 = std::numeric_limits<double>::quiet_NaN();
    bool absolute_thresholds = false;
    bivex::McmcConfig cfg;
    std::size_t chains = 1;
    int grid_points = 201;
    std::string outdir = ".";
    std::string from_manifest;
};

ordered_json move_stats_json(const bivex::MoveStats& s) {
    return ordered_json{{"attempted", s.attempted}, {"accepted", s.accepted}, {"rate", s.rate()}};
}

void load_fit_manifest(FitOptions& opt) {
    const auto j = bivex::read_json_file(opt.from_manifest);
    if (j.at("command").get<std::string>() != "fit")
        throw std::invalid_argument("--from-manifest: '" + opt.from_manifest +
                                    "' is not a fit manifest");
    const auto& input = j.at("input");
    opt.input = input.at("path_absolute").get<std::string>();
    if (!fs::exists(opt.input)) opt.input = input.at("path").get<std::string>();
    opt.columns = input.at("columns").at("selector1").get<std::string>() + "," +
                  input.at("columns").at("selector2").get<std::string>();
    const auto& thresholds = j.at("thresholds");
    opt.u1 = thresholds.at("u1").get<double>();
    opt.u2 = thresholds.at("u2").get<double>();
    opt.absolute_thresholds = true;
    if (!thresholds.at("quantile").is_null())
        opt.threshold_quantile = thresholds.at("quantile").get<double>();
    opt.cfg = bivex::mcmc_config_from_json(j.at("mcmc"));
    opt.chains = j.at("chains").get<std::size_t>();
    opt.grid_points = j.at("grid_points").get<int>();
}

void run_fit(FitOptions opt) {
    Timer total;
    const bool rerun = !opt.from_manifest.empty();
    if (rerun) load_fit_manifest(opt);
    if (opt.input.empty()) throw std::invalid_argument("fit: --input is required");

    Timer ingest_timer;
    const auto [col1, col2] = split_columns(opt.columns);
    const auto sample = bivex::ingest_file(opt.input, col1, col2);
    double u1 = opt.u1, u2 = opt.u2;
    if (!opt.absolute_thresholds) {
        std::tie(u1, u2) = bivex::quantile_thresholds(sample.rows, opt.threshold_quantile);
    }
    const auto data = bivex::censor_sample(sample.rows, u1, u2);
    const auto quadrants = bivex::quadrant_counts(data);
    const double ingest_ms = ingest_timer.ms();

    Timer sampling_timer;
    const auto traces = bivex::run_chains(data, opt.cfg, opt.chains);
    const double sampling_ms = sampling_timer.ms();

    bivex::Trace pooled;
    pooled.config_fingerprint = opt.cfg.fingerprint();
    for (const auto& tr : traces) {
        pooled.records.insert(pooled.records.end(), tr.records.begin(), tr.records.end());
        for (const auto& [m, count] : tr.occupancy) pooled.occupancy[m] += count;
    }
    if (pooled.records.empty())
        throw std::runtime_error("fit: no recorded states; increase --iterations");

    Timer estimate_timer;
    const auto grid = linspace(0.0, 1.0, opt.grid_points);
    const auto estimate = bivex::bayes_estimate(pooled, grid);
    const double estimate_ms = estimate_timer.ms();

    const fs::path out = prepare_dir(opt.outdir);
    std::vector<std::string> trace_files;
    for (std::size_t c = 0; c < traces.size(); ++c) {
        const std::string name = c == 0 ? "trace.ndjson" : "trace_" + std::to_string(c + 1) + ".ndjson";
        bivex::write_trace_ndjson_file((out / name).string(), traces[c]);
        trace_files.push_back(name);
    }
    {
        auto csv = open_out(out / "estimate.csv");
        bivex::write_estimate_csv(csv, estimate);
    }
    {
        // representative single state: the recorded draw of highest log likelihood
        std::size_t best = 0;
        for (std::size_t i = 1; i < pooled.records.size(); ++i)
            if (pooled.records[i].log_lik > pooled.records[best].log_lik) best = i;
        const auto& rep = pooled.records[best];
        const bivex::SpectralMeasure H(rep.theta);
        std::vector<double> cdf(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) cdf[i] = H.cdf(grid[i]);
        bivex::write_json_file((out / "spectral.json").string(),
                               bivex::spectral_json(rep.theta, grid, cdf));
    }

    ordered_json acceptance = ordered_json::array();
    for (const auto& tr : traces)
        acceptance.push_back(ordered_json{{"seed", tr.seed},
                                          {"within", move_stats_json(tr.within)},
                                          {"birth", move_stats_json(tr.birth)},
                                          {"death", move_stats_json(tr.death)},
                                          {"margins", move_stats_json(tr.margins)}});

    ordered_json diagnostics;
    if (traces.size() > 1) {
        std::vector<std::vector<double>> h0_seq, ll_seq;
        for (const auto& tr : traces) {
            std::vector<double> h0, ll;
            for (const auto& rec : tr.records) {
                h0.push_back(rec.theta.h0);
                ll.push_back(rec.log_lik);
            }
            h0_seq.push_back(std::move(h0));
            ll_seq.push_back(std::move(ll));
        }
        diagnostics["split_rhat_h0"] = bivex::split_rhat(h0_seq);
        if (!opt.cfg.prior_only) diagnostics["split_rhat_loglik"] = bivex::split_rhat(ll_seq);
    }

    ordered_json occupancy;
    for (const auto& [m, count] : pooled.occupancy) occupancy[std::to_string(m)] = count;

    ordered_json manifest{
        {"command", "fit"},
        {"version", version_block()},
        {"input",
         {{"path", opt.input},
          {"path_absolute", fs::absolute(opt.input).string()},
          {"columns",
           {{"selector1", col1},
            {"selector2", col2},
            {"label1", sample.label1},
            {"label2", sample.label2}}},
          {"rows", sample.rows.size()},
          {"dropped", sample.dropped}}},
        {"thresholds",
         {{"quantile", opt.absolute_thresholds ? ordered_json(nullptr)
                                               : ordered_json(opt.threshold_quantile)},
          {"u1", u1},
          {"u2", u2}}},
        {"data",
         {{"n00", quadrants.n00}, {"n10", quadrants.n10}, {"n01", quadrants.n01},
          {"n11", quadrants.n11}}},
        {"mcmc", bivex::mcmc_config_json(opt.cfg)},
        {"chains", opt.chains},
        {"grid_points", opt.grid_points},
        {"acceptance", acceptance},
        {"occupancy", occupancy},
        {"diagnostics", diagnostics},
        {"margins",
         {{"xi1", estimate.g1.xi}, {"zeta1", estimate.g1.zeta}, {"sigma1", estimate.g1.sigma},
          {"xi2", estimate.g2.xi}, {"zeta2", estimate.g2.zeta}, {"sigma2", estimate.g2.sigma}}},
        {"outputs",
         {{"traces", trace_files}, {"estimate", "estimate.csv"}, {"spectral", "spectral.json"}}},
        {"timings_ms",
         {{"ingest", ingest_ms}, {"sampling", sampling_ms}, {"estimate", estimate_ms},
          {"total", total.ms()}}}};
    bivex::write_json_file((out / "manifest.json").string(), manifest);
    std::cout << "fit: " << pooled.records.size() << " recorded states across " << traces.size()
              << (traces.size() == 1 ? " chain" : " chains") << "; results in " << out.string()
              << '\n';
}

// ----------------------------------------------------------------- predict

struct PredictOptions {
    std::string manifest;
    std::string outdir = ".";
    std::vector<double> x1s;
    double p = 0.05;
    double band = 0.95;
    int grid = 0;
    double v1 = std::numeric_limits<double>::quiet_NaN();
    double v2 = std::numeric_limits<double>::quiet_NaN();
    bool have_v1 = false;
    bool have_v2 = false;
};

double band_quantile(std::vector<double> values, double level) {
    std::sort(values.begin(), values.end());
    return bivex::quantile_sorted(values, level);
}

void run_predict(const PredictOptions& opt) {
    Timer total;
    const auto fit_manifest = bivex::read_json_file(opt.manifest);
    if (fit_manifest.at("command").get<std::string>() != "fit")
        throw std::invalid_argument("predict: --manifest must point at a fit manifest");
    const double u1 = fit_manifest.at("thresholds").at("u1").get<double>();
    const double u2 = fit_manifest.at("thresholds").at("u2").get<double>();
    const fs::path base = fs::path(opt.manifest).parent_path();

    bivex::Trace trace;
    for (const auto& name : fit_manifest.at("outputs").at("traces")) {
        const auto one =
            bivex::read_trace_ndjson_file((base / name.get<std::string>()).string(), u1, u2);
        trace.records.insert(trace.records.end(), one.records.begin(), one.records.end());
        for (const auto& [m, count] : one.occupancy) trace.occupancy[m] += count;
    }
    if (trace.records.empty()) throw std::runtime_error("predict: the stored traces are empty");

    const fs::path out = prepare_dir(opt.outdir);
    const double lo_level = (1.0 - opt.band) / 2.0;
    const double hi_level = 1.0 - lo_level;

    ordered_json results = ordered_json::array();
    std::vector<bivex::QuantileCurvePoint> full_curve, exceed_curve;
    for (const double x1 : opt.x1s) {
        const auto cond = bivex::conditional_predictive(trace, x1, {u2});
        const double survival_u2 = 1.0 - cond.cdf.front();
        const double q_full = bivex::conditional_quantile(trace, x1, opt.p);
        const double q_exc = bivex::conditional_quantile(trace, x1, opt.p, true);
        const auto draws_full = bivex::conditional_quantile_per_draw(trace, x1, opt.p);
        const auto draws_exc = bivex::conditional_quantile_per_draw(trace, x1, opt.p, true);
        if (draws_full.empty() || draws_exc.empty())
            throw std::runtime_error("predict: no posterior draw admits the requested quantile");
        const bivex::QuantileCurvePoint pf{x1, q_full, band_quantile(draws_full, lo_level),
                                           band_quantile(draws_full, hi_level)};
        const bivex::QuantileCurvePoint pe{x1, q_exc, band_quantile(draws_exc, lo_level),
                                           band_quantile(draws_exc, hi_level)};
        full_curve.push_back(pf);
        exceed_curve.push_back(pe);
        results.push_back(ordered_json{
            {"x1", x1},
            {"survival_at_u2", survival_u2},
            {"below_threshold_mass", cond.below_threshold_mass},
            {"zero_marginal_draws", cond.zero_marginal_draws},
            {"full", {{"quantile", pf.quantile}, {"lower", pf.lower}, {"upper", pf.upper},
                      {"band_draws", draws_full.size()}}},
            {"given_exceedance",
             {{"quantile", pe.quantile}, {"lower", pe.lower}, {"upper", pe.upper},
              {"band_draws", draws_exc.size()}}}});
    }

    ordered_json outputs;
    if (!opt.x1s.empty()) {
        auto fcsv = open_out(out / "quantiles.csv");
        bivex::write_quantile_csv(fcsv, full_curve);
        auto ecsv = open_out(out / "quantiles_exceedance.csv");
        bivex::write_quantile_csv(ecsv, exceed_curve);
        outputs["quantiles"] = "quantiles.csv";
        outputs["quantiles_exceedance"] = "quantiles_exceedance.csv";
    }

    ordered_json rare;
    if (opt.have_v1 != opt.have_v2)
        throw std::invalid_argument("predict: --v1 and --v2 must be given together");
    if (opt.have_v1) {
        rare = ordered_json{{"v1", opt.v1},
                            {"v2", opt.v2},
                            {"probability", bivex::rare_event_probability(trace, opt.v1, opt.v2)}};
    }

    ordered_json density_info;
    if (opt.grid > 1) {
        double hi1 = u1, hi2 = u2;
        for (const auto& rec : trace.records) {
            hi1 = std::max(hi1, rec.g1.quantile(1.0 - 1e-3));
            hi2 = std::max(hi2, rec.g2.quantile(1.0 - 1e-3));
        }
        const auto surface =
            bivex::joint_predictive(trace, linspace(u1, hi1, opt.grid), linspace(u2, hi2, opt.grid));
        auto dcsv = open_out(out / "density.csv");
        bivex::write_density_csv(dcsv, surface);
        outputs["density"] = "density.csv";
        density_info = ordered_json{{"corner_mass", surface.corner_mass},
                                    {"x1_max", hi1},
                                    {"x2_max", hi2},
                                    {"points_per_axis", opt.grid}};
    }

    ordered_json manifest{{"command", "predict"},
                          {"version", version_block()},
                          {"source_manifest", fs::absolute(opt.manifest).string()},
                          {"thresholds", {{"u1", u1}, {"u2", u2}}},
                          {"draws", trace.records.size()},
                          {"p", opt.p},
                          {"band", opt.band},
                          {"results", results},
                          {"rare_event", rare},
                          {"density", density_info},
                          {"outputs", outputs},
                          {"timings_ms", {{"total", total.ms()}}}};
    bivex::write_json_file((out / "predict.json").string(), manifest);
    std::cout << "predict: " << trace.records.size() << " draws";
    if (!opt.x1s.empty()) std::cout << ", " << opt.x1s.size() << " quantile points";
    std::cout << "; results in " << out.string() << '\n';
}

// --------------------------------------------------------------- prior-viz

struct PriorVizOptions {
    bivex::McmcConfig cfg;
    int grid_points = 101;
    std::string outdir = ".";
};

void run_prior_viz(PriorVizOptions opt) {
    Timer total;
    opt.cfg.prior_only = true;
    bivex::CensoredSample blank;
    blank.u1 = 1.0;
    blank.u2 = 1.0;

    const auto trace = bivex::run_chain(blank, opt.cfg);
    if (trace.records.empty())
        throw std::runtime_error("prior-viz: no recorded states; increase --iterations");
    const auto grid = linspace(0.0, 1.0, opt.grid_points);
    const auto estimate = bivex::bayes_estimate(trace, grid);

    const fs::path out = prepare_dir(opt.outdir);
    {
        auto csv = open_out(out / "prior_bands.csv");
        bivex::write_estimate_csv(csv, estimate);
    }
    bivex::write_trace_ndjson_file((out / "trace.ndjson").string(), trace);

    ordered_json occupancy;
    for (const auto& [m, count] : trace.occupancy) occupancy[std::to_string(m)] = count;
    ordered_json manifest{{"command", "prior-viz"},
                          {"version", version_block()},
                          {"mcmc", bivex::mcmc_config_json(opt.cfg)},
                          {"grid_points", opt.grid_points},
                          {"occupancy", occupancy},
                          {"acceptance",
                           {{"within", move_stats_json(trace.within)},
                            {"birth", move_stats_json(trace.birth)},
                            {"death", move_stats_json(trace.death)}}},
                          {"outputs", {{"bands", "prior_bands.csv"}, {"trace", "trace.ndjson"}}},
                          {"timings_ms", {{"total", total.ms()}}}};
    bivex::write_json_file((out / "manifest.json").string(), manifest);
    std::cout << "prior-viz: " << trace.records.size() << " recorded states; results in "
              << out.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian nonparametric inference for bivariate tail dependence"};
    app.set_version_flag("--version", BIVEX_VERSION);
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* sim_cmd = app.add_subcommand("simulate", "draw a synthetic sample with known tail law");
    sim_cmd->add_option("--r", sim.r, "dependence parameter in [0,1]")
        ->required()
        ->check(CLI::Range(0.0, 1.0));
    sim_cmd->add_option("--n", sim.n, "sample size")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", sim.seed, "random seed");
    sim_cmd->add_option("--output-dir", sim.outdir, "output directory");

    FitOptions fit;
    auto* fit_cmd = app.add_subcommand("fit", "run the reversible-jump sampler on censored data");
    fit_cmd->add_option("--input", fit.input, "delimited file with the two data columns");
    fit_cmd->add_option("--columns", fit.columns, "two selectors: names or 1-based indices");
    fit_cmd->add_option("--threshold-quantile", fit.threshold_quantile,
                        "marginal quantile level for the thresholds")
        ->check(CLI::Range(std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0)));
    auto* u1_opt = fit_cmd->add_option("--u1", fit.u1, "absolute threshold for the first margin");
    auto* u2_opt = fit_cmd->add_option("--u2", fit.u2, "absolute threshold for the second margin");
    fit_cmd->add_option("--iterations", fit.cfg.iterations, "total iterations including burn-in");
    fit_cmd->add_option("--burn-in", fit.cfg.burn_in, "iterations discarded before recording");
    fit_cmd->add_option("--thin", fit.cfg.thin, "record every k-th state")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--seed", fit.cfg.seed, "random seed (chain c uses seed + c - 1)");
    fit_cmd->add_option("--lambda", fit.cfg.lambda, "atom-count prior intensity")
        ->check(CLI::PositiveNumber);
    fit_cmd->add_option("--chains", fit.chains, "independent parallel chains")
        ->check(CLI::PositiveNumber);
    fit_cmd->add_flag("--prior-only", fit.cfg.prior_only, "ignore the likelihood");
    fit_cmd->add_option("--grid-points", fit.grid_points, "grid resolution for the estimate")
        ->check(CLI::Range(2, 100000));
    fit_cmd->add_option("--output-dir", fit.outdir, "output directory");
    fit_cmd->add_option("--from-manifest", fit.from_manifest,
                        "rerun the configuration stored in a fit manifest");

    PredictOptions pred;
    auto* pred_cmd = app.add_subcommand("predict", "predictive summaries from a saved fit");
    pred_cmd->add_option("--manifest", pred.manifest, "manifest.json written by fit")->required();
    pred_cmd->add_option("--x1", pred.x1s, "conditioning values (repeatable)");
    pred_cmd->add_option("--p", pred.p, "conditional exceedance probability")
        ->check(CLI::Range(std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0)));
    pred_cmd->add_option("--band", pred.band, "credible-band mass for the quantile bands")
        ->check(CLI::Range(std::nextafter(0.0, 1.0), std::nextafter(1.0, 0.0)));
    pred_cmd->add_option("--grid", pred.grid, "points per axis for the density surface");
    auto* v1_opt = pred_cmd->add_option("--v1", pred.v1, "rare-event corner, first coordinate");
    auto* v2_opt = pred_cmd->add_option("--v2", pred.v2, "rare-event corner, second coordinate");
    pred_cmd->add_option("--output-dir", pred.outdir, "output directory");

    PriorVizOptions prior;
    auto* prior_cmd = app.add_subcommand("prior-viz", "prior band of the spectral distribution");
    prior.cfg.iterations = 200000;
    prior.cfg.burn_in = 20000;
    prior.cfg.thin = 50;
    prior_cmd->add_option("--lambda", prior.cfg.lambda, "atom-count prior intensity")
        ->check(CLI::PositiveNumber);
    prior_cmd->add_option("--iterations", prior.cfg.iterations, "total iterations");
    prior_cmd->add_option("--burn-in", prior.cfg.burn_in, "iterations discarded before recording");
    prior_cmd->add_option("--thin", prior.cfg.thin, "record every k-th state")
        ->check(CLI::PositiveNumber);
    prior_cmd->add_option("--seed", prior.cfg.seed, "random seed");
    prior_cmd->add_option("--grid-points", prior.grid_points, "grid resolution for the bands")
        ->check(CLI::Range(2, 100000));
    prior_cmd->add_option("--output-dir", prior.outdir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim_cmd->parsed()) run_simulate(sim);
        if (fit_cmd->parsed()) {
            if (u1_opt->count() != u2_opt->count())
                throw std::invalid_argument("fit: --u1 and --u2 must be given together");
            fit.absolute_thresholds = u1_opt->count() > 0;
            run_fit(fit);
        }
        if (pred_cmd->parsed()) {
            pred.have_v1 = v1_opt->count() > 0;
            pred.have_v2 = v2_opt->count() > 0;
            run_predict(pred);
        }
        if (prior_cmd->parsed()) run_prior_viz(prior);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
