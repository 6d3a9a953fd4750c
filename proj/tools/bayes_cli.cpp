#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "bayes/chain.hpp"
#include "bayes/csv.hpp"
#include "bayes/dpmm_cgs.hpp"
#include "bayes/dpmm_vi.hpp"
#include "bayes/errors.hpp"
#include "bayes/hier.hpp"
#include "bayes/mtd.hpp"
#include "bayes/simulate.hpp"
#include "bayes/spatial.hpp"
#include "bayes/special.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

struct Manifest {
    json config;
    std::map<std::string, double> stage_seconds;
    std::vector<std::string> files;

    void add_file(const fs::path& p) { files.push_back(p.filename().string()); }

    void write(const fs::path& out_dir, std::uint64_t seed) const {
        json m;
        m["version"] = kVersion;
        m["seed"] = seed;
        m["config"] = config;
        m["wall_seconds"] = stage_seconds;
        m["outputs"] = files;
        for (const auto& f : files)
            if (!fs::exists(out_dir / f))
                throw bayes::numerical_error("manifest lists a missing file: " + f);
        const fs::path tmp = out_dir / "manifest.json.tmp";
        {
            std::ofstream os(tmp);
            os << m.dump(2) << "\n";
        }
        fs::rename(tmp, out_dir / "manifest.json");
    }
};

fs::path prepare_out(const std::string& out) {
    if (out.empty()) throw bayes::config_error("missing required --out directory");
    fs::path p(out);
    fs::create_directories(p);
    return p;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream os(path);
    os << j.dump(2) << "\n";
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string tok = text.substr(pos, comma - pos);
        try {
            std::size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw bayes::config_error("cannot parse numeric list entry '" + tok + "'");
        }
        pos = comma + 1;
    }
    return out;
}

json summaries_json(const bayes::PosteriorChain& chain) {
    json arr = json::array();
    const auto sums = bayes::summarize(chain);
    for (std::size_t i = 0; i < sums.size(); ++i) {
        json s;
        s["name"] = sums[i].name;
        s["mean"] = sums[i].mean;
        s["sd"] = sums[i].sd;
        s["q025"] = sums[i].q025;
        s["q50"] = sums[i].q50;
        s["q975"] = sums[i].q975;
        try {
            s["ess"] = bayes::ess(chain.draws.col(static_cast<Eigen::Index>(i)));
        } catch (const bayes::data_error&) {
            s["ess"] = nullptr;
        }
        arr.push_back(s);
    }
    return arr;
}

void write_chain_csv(const fs::path& path, const bayes::PosteriorChain& chain) {
    bayes::write_csv(path.string(), chain.names, chain.draws);
}

// ---------------------------------------------------------------- hier

int run_hier(const std::string& input, const std::string& out, std::uint64_t seed,
             std::uint64_t burn_in, std::uint64_t iters, std::uint64_t thin,
             bool paper_literal) {
    const fs::path out_dir = prepare_out(out);
    Manifest manifest;
    manifest.config = {{"subcommand", "hier"},    {"input", input},
                       {"seed", seed},            {"burn_in", burn_in},
                       {"iters", iters},          {"thin", thin},
                       {"paper_literal", paper_literal}};

    Stopwatch ingest_sw;
    const bayes::CsvTable table = bayes::load_csv(
        input, {{"device_id"}, {"group"}, {"y_mean"}, {"n_records"}});
    bayes::HierData data;
    data.y = table.numeric("y_mean");
    data.n = table.numeric("n_records");
    const std::vector<double> raw_group = table.numeric("group");
    std::vector<double> levels = raw_group;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    for (double g : raw_group) {
        const auto it = std::lower_bound(levels.begin(), levels.end(), g);
        data.group.push_back(static_cast<int>(it - levels.begin()));
    }
    data.num_groups = static_cast<int>(levels.size());
    manifest.stage_seconds["ingest"] = ingest_sw.seconds();

    Stopwatch fit_sw;
    bayes::HierHyper hyper;
    hyper.paper_literal_sigma2 = paper_literal;
    const bayes::PosteriorChain chain =
        bayes::hier_run(data, hyper, burn_in, iters, thin, seed);
    manifest.stage_seconds["fit"] = fit_sw.seconds();

    Stopwatch out_sw;
    write_chain_csv(out_dir / "chain.csv", chain);
    manifest.add_file(out_dir / "chain.csv");

    json summary;
    summary["parameters"] = summaries_json(chain);
    json outliers = json::array();
    for (const auto& o : bayes::detect_outliers(chain, data.num_devices())) {
        outliers.push_back({{"device_id", table.numeric("device_id")[o.device]},
                            {"lambda_mean", o.lambda_mean},
                            {"lambda_median", o.lambda_median}});
    }
    summary["outliers"] = outliers;
    bayes::RngStream prng(seed + 1);
    const bayes::BayesianPValues pv = bayes::bayesian_p_value(chain, data, prng);
    summary["bayesian_p_values"] = pv.per_device;
    summary["average_bayesian_p_value"] = pv.average;
    write_json(out_dir / "summary.json", summary);
    manifest.add_file(out_dir / "summary.json");
    manifest.stage_seconds["output"] = out_sw.seconds();

    manifest.write(out_dir, seed);
    return 0;
}

// ---------------------------------------------------------------- spatial

int run_spatial(const std::string& input, const std::string& grid_path,
                const std::string& out, std::uint64_t seed, std::uint64_t burn_in,
                std::uint64_t iters, std::uint64_t thin, const std::string& phi_grid,
                const std::string& gamma2_grid, double threshold) {
    const fs::path out_dir = prepare_out(out);
    Manifest manifest;
    manifest.config = {{"subcommand", "spatial"}, {"input", input},
                       {"grid", grid_path},       {"seed", seed},
                       {"burn_in", burn_in},      {"iters", iters},
                       {"thin", thin},            {"phi_grid", phi_grid},
                       {"gamma2_grid", gamma2_grid}, {"threshold_mm", threshold}};

    Stopwatch ingest_sw;
    const bayes::CsvTable table =
        bayes::load_csv(input, {{"site_id"},
                                {"x_km"},
                                {"y_km"},
                                {"altitude_km"},
                                {"year"},
                                {"rainfall_mm", true}});
    bayes::SpatialData data;
    const std::vector<double> sid = table.numeric("site_id");
    for (double s : sid) data.site_id.push_back(static_cast<int>(s));
    const std::vector<double> xs = table.numeric("x_km");
    const std::vector<double> ys = table.numeric("y_km");
    const std::vector<double> alt = table.numeric("altitude_km");
    const std::vector<double> yr = table.numeric("year");
    const Eigen::Index n = static_cast<Eigen::Index>(xs.size());
    data.x = Eigen::Map<const Eigen::VectorXd>(xs.data(), n);
    data.y = Eigen::Map<const Eigen::VectorXd>(ys.data(), n);
    data.altitude = Eigen::Map<const Eigen::VectorXd>(alt.data(), n);
    double year_min = std::numeric_limits<double>::infinity();
    for (double v : yr) year_min = std::min(year_min, v);
    data.year.resize(n);
    for (Eigen::Index i = 0; i < n; ++i)
        data.year[i] = static_cast<int>(yr[static_cast<std::size_t>(i)] - year_min) + 1;
    data.rainfall.resize(n);
    const auto& rain = table.column("rainfall_mm");
    for (Eigen::Index i = 0; i < n; ++i)
        data.rainfall[i] = rain.values[static_cast<std::size_t>(i)].value_or(
            std::numeric_limits<double>::quiet_NaN());
    manifest.stage_seconds["ingest"] = ingest_sw.seconds();

    Stopwatch fit_sw;
    bayes::SpatialOptions opts;
    opts.burn_in = burn_in;
    opts.iters = iters;
    opts.thin = thin;
    opts.seed = seed;
    if (!phi_grid.empty() || !gamma2_grid.empty()) {
        bayes::PsiGrid g = bayes::PsiGrid::default_for(data);
        if (!phi_grid.empty()) g.phi = parse_list(phi_grid);
        if (!gamma2_grid.empty()) g.gamma2 = parse_list(gamma2_grid);
        opts.grid = g;
    }
    const bayes::PosteriorChain chain = bayes::spatial_run(data, opts);
    manifest.stage_seconds["fit"] = fit_sw.seconds();

    Stopwatch out_sw;
    write_chain_csv(out_dir / "chain.csv", chain);
    manifest.add_file(out_dir / "chain.csv");
    json summary;
    summary["parameters"] = summaries_json(chain);
    summary["num_missing"] = static_cast<std::int64_t>(data.num_missing());
    write_json(out_dir / "summary.json", summary);
    manifest.add_file(out_dir / "summary.json");

    if (!grid_path.empty()) {
        const bayes::CsvTable gt =
            bayes::load_csv(grid_path, {{"x_km"}, {"y_km"}, {"year"}});
        bayes::NewSites sites;
        const std::vector<double> gx = gt.numeric("x_km");
        const std::vector<double> gy = gt.numeric("y_km");
        const std::vector<double> gyr = gt.numeric("year");
        const Eigen::Index m = static_cast<Eigen::Index>(gx.size());
        sites.x = Eigen::Map<const Eigen::VectorXd>(gx.data(), m);
        sites.y = Eigen::Map<const Eigen::VectorXd>(gy.data(), m);
        sites.year.resize(m);
        for (Eigen::Index i = 0; i < m; ++i)
            sites.year[i] =
                static_cast<int>(gyr[static_cast<std::size_t>(i)] - year_min) + 1;
        const bayes::PredictionMaps maps =
            bayes::spatial_predict(data, chain, sites, threshold, 2.5, seed + 1);
        Eigen::MatrixXd pred(m, 5);
        pred.col(0) = sites.x;
        pred.col(1) = sites.y;
        pred.col(2) = maps.mean;
        pred.col(3) = maps.variance;
        pred.col(4) = maps.exceedance;
        bayes::write_csv((out_dir / "predictions.csv").string(),
                         {"x", "y", "mean", "variance", "exceedance"}, pred);
        manifest.add_file(out_dir / "predictions.csv");
    }
    manifest.stage_seconds["output"] = out_sw.seconds();

    manifest.write(out_dir, seed);
    return 0;
}

// ---------------------------------------------------------------- mtd

int run_mtd(const std::string& input, const std::string& out, std::uint64_t seed,
            std::uint64_t burn_in, std::uint64_t iters, int order_max, int horizon,
            bool states) {
    const fs::path out_dir = prepare_out(out);
    Manifest manifest;
    manifest.config = {{"subcommand", "mtd"}, {"input", input},   {"seed", seed},
                       {"burn_in", burn_in},  {"iters", iters},   {"order_max", order_max},
                       {"horizon", horizon},  {"states", states}};
    if (order_max < 1) throw bayes::config_error("--order-max must be positive");

    Stopwatch ingest_sw;
    const bayes::CsvTable table = bayes::load_csv(input, {{"value"}});
    const std::vector<double> values = table.numeric("value");
    bayes::ChainData data;
    if (states) {
        data.lmax = order_max;
        int m = 0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double v = values[i];
            if (v != std::floor(v) || v < 1.0)
                throw bayes::ingestion_error("state column: row " + std::to_string(i + 1) +
                                             " is not a positive integer state");
            data.x.push_back(static_cast<int>(v));
            m = std::max(m, static_cast<int>(v));
        }
        data.m = m;
    } else {
        data = bayes::encode_changes(values, order_max);
    }
    data.validate();
    manifest.stage_seconds["ingest"] = ingest_sw.seconds();

    Stopwatch fit_sw;
    const std::vector<double> uniform_prior(static_cast<std::size_t>(order_max),
                                            1.0 / order_max);
    const bayes::OrderReport report =
        bayes::order_probs(data, order_max, iters, uniform_prior, burn_in, seed);

    bayes::RngStream fit_rng(seed + 1);
    const bayes::MTDFit fit =
        bayes::mtd_fit(data, report.modal_order, bayes::MTDPriors{}, burn_in, iters, fit_rng);

    // posterior predictive loss: modal-order mixture model vs the fully
    // parameterized chain of the same order
    bayes::RngStream ppl_rng(seed + 2);
    const Eigen::MatrixXd mtd_pred = bayes::mtd_predictive_draws(fit, data, ppl_rng);
    const std::vector<Eigen::MatrixXd> full_draws =
        bayes::fit_full_markov(data, report.modal_order, fit.draws.size(), ppl_rng);
    const Eigen::MatrixXd full_pred =
        bayes::full_markov_predictive_draws(full_draws, data, report.modal_order, ppl_rng);
    std::vector<double> observed;
    for (int t = data.lmax; t < static_cast<int>(data.x.size()); ++t)
        observed.push_back(static_cast<double>(data.x[static_cast<std::size_t>(t)]));
    const double inf = std::numeric_limits<double>::infinity();
    const bayes::PplResult mtd_r1 = bayes::ppl(mtd_pred, observed, 1.0);
    const bayes::PplResult mtd_rinf = bayes::ppl(mtd_pred, observed, inf);
    const bayes::PplResult full_r1 = bayes::ppl(full_pred, observed, 1.0);
    const bayes::PplResult full_rinf = bayes::ppl(full_pred, observed, inf);

    const Eigen::MatrixXd fc = bayes::forecast(fit, data, horizon);
    manifest.stage_seconds["fit"] = fit_sw.seconds();

    Stopwatch out_sw;
    json order_json;
    order_json["mean_log_posterior_likelihood"] = report.mean_log_posterior_likelihood;
    order_json["posterior_probability"] = report.posterior_probability;
    order_json["modal_order"] = report.modal_order;
    write_json(out_dir / "order_report.json", order_json);
    manifest.add_file(out_dir / "order_report.json");

    std::vector<std::string> fc_header = {"month"};
    for (int s = 1; s <= data.m; ++s) fc_header.push_back("p_state" + std::to_string(s));
    Eigen::MatrixXd fc_table(fc.rows(), fc.cols() + 1);
    for (Eigen::Index h = 0; h < fc.rows(); ++h) fc_table(h, 0) = static_cast<double>(h + 1);
    fc_table.rightCols(fc.cols()) = fc;
    bayes::write_csv((out_dir / "forecast.csv").string(), fc_header, fc_table);
    manifest.add_file(out_dir / "forecast.csv");

    json ppl_json;
    ppl_json["order"] = report.modal_order;
    ppl_json["mixture"] = {{"penalty", mtd_r1.penalty},
                           {"fit", mtd_r1.fit},
                           {"d_1", mtd_r1.d_r},
                           {"d_inf", mtd_rinf.d_r}};
    ppl_json["full_markov"] = {{"penalty", full_r1.penalty},
                               {"fit", full_r1.fit},
                               {"d_1", full_r1.d_r},
                               {"d_inf", full_rinf.d_r}};
    write_json(out_dir / "ppl.json", ppl_json);
    manifest.add_file(out_dir / "ppl.json");
    manifest.stage_seconds["output"] = out_sw.seconds();

    manifest.write(out_dir, seed);
    return 0;
}

// ---------------------------------------------------------------- dpmm

std::vector<double> load_observations(const std::string& input) {
    const bayes::CsvTable table = bayes::load_csv(input, {{"value"}});
    return table.numeric("value");
}

Eigen::MatrixXd density_table(const std::vector<double>& grid,
                              const std::vector<double>& dens) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(grid.size()), 2);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        out(static_cast<Eigen::Index>(i), 0) = grid[i];
        out(static_cast<Eigen::Index>(i), 1) = dens[i];
    }
    return out;
}

std::vector<double> make_grid(double lo, double hi, int points) {
    if (points < 2 || hi <= lo) throw bayes::config_error("invalid density grid settings");
    std::vector<double> grid;
    for (int i = 0; i < points; ++i)
        grid.push_back(lo + (hi - lo) * i / static_cast<double>(points - 1));
    return grid;
}

int run_dpmm_vi(const std::string& input, const std::string& out, std::uint64_t seed,
                int truncation, int init_clusters, int max_iters, double grid_lo,
                double grid_hi, int grid_points) {
    const fs::path out_dir = prepare_out(out);
    Manifest manifest;
    manifest.config = {{"subcommand", "dpmm-vi"},       {"input", input},
                       {"seed", seed},                  {"truncation", truncation},
                       {"init_clusters", init_clusters}, {"max_iters", max_iters},
                       {"grid_lo", grid_lo},            {"grid_hi", grid_hi},
                       {"grid_points", grid_points}};

    Stopwatch ingest_sw;
    const std::vector<double> y = load_observations(input);
    const bayes::Standardized std_y = bayes::standardize(y);
    manifest.stage_seconds["ingest"] = ingest_sw.seconds();

    Stopwatch fit_sw;
    bayes::DpmmHyper hyper;
    hyper.truncation = truncation;
    const auto [params, trace] = bayes::vi_fit(std_y.z, hyper, init_clusters, max_iters);
    manifest.stage_seconds["fit"] = fit_sw.seconds();

    Stopwatch out_sw;
    json fit_json;
    fit_json["hyper"] = {{"a_phi", hyper.a_phi}, {"b_phi", hyper.b_phi},
                         {"psi", hyper.psi},     {"nu", hyper.nu},
                         {"alpha", hyper.alpha}, {"truncation", hyper.truncation},
                         {"tol", hyper.tol}};
    fit_json["k_init"] = init_clusters;
    fit_json["iterations"] = trace.iterations;
    fit_json["converged"] = trace.converged;
    fit_json["elbo_trace"] = trace.elbo;
    const double final_elbo = trace.elbo.empty() ? 0.0 : trace.elbo.back();
    fit_json["final_elbo"] = final_elbo;
    // bound on the marginal likelihood of the unstandardized input (change
    // of variables adds -n log sd)
    fit_json["final_elbo_data_scale"] =
        final_elbo - static_cast<double>(std_y.z.size()) * std::log(std_y.sd);
    fit_json["standardize"] = {{"mean", std_y.mean}, {"sd", std_y.sd}};
    fit_json["expected_weights"] = bayes::expected_weights(params.gamma, hyper.truncation);
    json comps = json::array();
    for (Eigen::Index l = 0; l < params.eta.rows(); ++l)
        comps.push_back({{"mean", params.eta(l, 0)}, {"variance", params.eta(l, 1)}});
    fit_json["components"] = comps;
    fit_json["phi"] = {{"shape", params.xi1}, {"rate", params.xi2}};
    json resp = json::array();
    for (Eigen::Index i = 0; i < params.varpi.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index l = 0; l < params.varpi.cols(); ++l)
            row.push_back(params.varpi(i, l));
        resp.push_back(row);
    }
    fit_json["responsibilities"] = resp;
    write_json(out_dir / "fit.json", fit_json);
    manifest.add_file(out_dir / "fit.json");

    const std::vector<double> grid = make_grid(grid_lo, grid_hi, grid_points);
    const std::vector<double> dens = bayes::predictive_density(params, hyper, grid);
    bayes::write_csv((out_dir / "density.csv").string(), {"z", "density"},
                     density_table(grid, dens));
    manifest.add_file(out_dir / "density.csv");
    manifest.stage_seconds["output"] = out_sw.seconds();

    manifest.write(out_dir, seed);
    return 0;
}

int run_dpmm_cgs(const std::string& input, const std::string& out, std::uint64_t seed,
                 std::uint64_t burn_in, std::uint64_t samples, double grid_lo,
                 double grid_hi, int grid_points) {
    const fs::path out_dir = prepare_out(out);
    Manifest manifest;
    manifest.config = {{"subcommand", "dpmm-cgs"}, {"input", input}, {"seed", seed},
                       {"burn_in", burn_in},       {"samples", samples},
                       {"grid_lo", grid_lo},       {"grid_hi", grid_hi},
                       {"grid_points", grid_points}};

    Stopwatch ingest_sw;
    const std::vector<double> y = load_observations(input);
    const bayes::Standardized std_y = bayes::standardize(y);
    manifest.stage_seconds["ingest"] = ingest_sw.seconds();

    Stopwatch fit_sw;
    bayes::DpmmHyper hyper;
    const bayes::CGSDraws draws = bayes::cgs_run(std_y.z, hyper, burn_in, samples, seed);
    manifest.stage_seconds["fit"] = fit_sw.seconds();

    Stopwatch out_sw;
    const std::size_t n = std_y.z.size();
    std::vector<std::string> a_header;
    for (std::size_t i = 1; i <= n; ++i) a_header.push_back("L_" + std::to_string(i));
    a_header.push_back("phi");
    Eigen::MatrixXd a_table(static_cast<Eigen::Index>(draws.assignments.size()),
                            static_cast<Eigen::Index>(n + 1));
    for (std::size_t d = 0; d < draws.assignments.size(); ++d) {
        for (std::size_t i = 0; i < n; ++i)
            a_table(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(i)) =
                static_cast<double>(draws.assignments[d][i]);
        a_table(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n)) =
            draws.phi[d];
    }
    bayes::write_csv((out_dir / "assignments.csv").string(), a_header, a_table);
    manifest.add_file(out_dir / "assignments.csv");

    std::vector<std::string> i_header;
    for (std::size_t i = 1; i <= n; ++i) i_header.push_back("p_" + std::to_string(i));
    bayes::write_csv((out_dir / "incidence.csv").string(), i_header,
                     bayes::incidence(draws.assignments));
    manifest.add_file(out_dir / "incidence.csv");

    const std::vector<double> grid = make_grid(grid_lo, grid_hi, grid_points);
    const std::vector<double> dens = bayes::cgs_predictive(draws, std_y.z, hyper, grid);
    bayes::write_csv((out_dir / "density.csv").string(), {"z", "density"},
                     density_table(grid, dens));
    manifest.add_file(out_dir / "density.csv");
    manifest.stage_seconds["output"] = out_sw.seconds();

    manifest.write(out_dir, seed);
    return 0;
}

// ---------------------------------------------------------------- simulate

int run_simulate(const std::string& model, const std::string& out, std::uint64_t seed,
                 const json& opts) {
    const fs::path out_dir = prepare_out(out);
    Manifest manifest;
    manifest.config = opts;
    manifest.config["subcommand"] = "simulate";
    manifest.config["model"] = model;
    manifest.config["seed"] = seed;

    Stopwatch sim_sw;
    json truth;
    if (model == "hier") {
        const bayes::HierSim sim = bayes::simulate_hier(
            opts.at("groups").get<int>(), opts.at("devices").get<int>(),
            opts.at("records").get<double>(), opts.at("mu").get<double>(),
            opts.at("tau2").get<double>(), opts.at("sigma2").get<double>(),
            opts.at("alpha").get<double>(), 5.0, seed);
        Eigen::MatrixXd table(static_cast<Eigen::Index>(sim.data.y.size()), 4);
        for (std::size_t i = 0; i < sim.data.y.size(); ++i) {
            const Eigen::Index r = static_cast<Eigen::Index>(i);
            table(r, 0) = static_cast<double>(i + 1);
            table(r, 1) = static_cast<double>(sim.data.group[i] + 1);
            table(r, 2) = sim.data.y[i];
            table(r, 3) = sim.data.n[i];
        }
        bayes::write_csv((out_dir / "data.csv").string(),
                         {"device_id", "group", "y_mean", "n_records"}, table);
        truth = {{"mu", sim.mu},       {"tau2", sim.tau2},
                 {"sigma2", sim.sigma2}, {"theta", sim.theta},
                 {"sigma2_group", sim.sigma2_group}, {"lambda", sim.lambda}};
    } else if (model == "spatial") {
        const std::vector<double> beta_list = parse_list(opts.at("beta").get<std::string>());
        if (beta_list.size() != 7)
            throw bayes::config_error("--beta needs exactly 7 comma-separated values");
        Eigen::VectorXd beta(7);
        for (int i = 0; i < 7; ++i) beta[i] = beta_list[static_cast<std::size_t>(i)];
        const bayes::SpatialSim sim = bayes::simulate_spatial(
            opts.at("sites").get<int>(), opts.at("years").get<int>(),
            opts.at("extent").get<double>(), beta, opts.at("sigma2").get<double>(),
            opts.at("phi").get<double>(), opts.at("gamma2").get<double>(),
            opts.at("missing_frac").get<double>(), 2.5, seed);
        const Eigen::Index n = sim.data.n();
        Eigen::MatrixXd table(n, 6);
        for (Eigen::Index i = 0; i < n; ++i) {
            table(i, 0) = static_cast<double>(sim.data.site_id[static_cast<std::size_t>(i)]);
            table(i, 1) = sim.data.x[i];
            table(i, 2) = sim.data.y[i];
            table(i, 3) = sim.data.altitude[i];
            table(i, 4) = static_cast<double>(sim.data.year[i]);
            table(i, 5) = sim.data.rainfall[i];
        }
        bayes::write_csv((out_dir / "data.csv").string(),
                         {"site_id", "x_km", "y_km", "altitude_km", "year", "rainfall_mm"},
                         table);
        truth = {{"beta", beta_list},
                 {"sigma2", sim.sigma2},
                 {"phi", sim.phi},
                 {"gamma2", sim.gamma2},
                 {"num_missing", static_cast<std::int64_t>(sim.data.num_missing())}};
    } else if (model == "mtd") {
        const std::vector<double> lambda = parse_list(opts.at("lambda").get<std::string>());
        const std::string q_text = opts.at("q").get<std::string>();
        std::vector<std::vector<double>> q_rows;
        std::size_t pos = 0;
        while (pos <= q_text.size()) {
            std::size_t semi = q_text.find(';', pos);
            if (semi == std::string::npos) semi = q_text.size();
            q_rows.push_back(parse_list(q_text.substr(pos, semi - pos)));
            pos = semi + 1;
        }
        const int m = static_cast<int>(q_rows.size());
        bayes::MTDParams params;
        params.lambda = lambda;
        params.Q.resize(m, m);
        for (int i = 0; i < m; ++i) {
            if (static_cast<int>(q_rows[static_cast<std::size_t>(i)].size()) != m)
                throw bayes::config_error("--q rows must form a square matrix");
            for (int j = 0; j < m; ++j)
                params.Q(i, j) = q_rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        const bayes::MtdSim sim =
            bayes::simulate_mtd(params, opts.at("length").get<int>(), seed);
        Eigen::MatrixXd table(static_cast<Eigen::Index>(sim.data.x.size()), 1);
        for (std::size_t i = 0; i < sim.data.x.size(); ++i)
            table(static_cast<Eigen::Index>(i), 0) = static_cast<double>(sim.data.x[i]);
        bayes::write_csv((out_dir / "data.csv").string(), {"value"}, table);
        json q_json = json::array();
        for (int i = 0; i < m; ++i) {
            json row = json::array();
            for (int j = 0; j < m; ++j) row.push_back(params.Q(i, j));
            q_json.push_back(row);
        }
        truth = {{"lambda", lambda}, {"q", q_json}, {"m", m}};
    } else if (model == "dpmm") {
        const std::vector<double> weights = parse_list(opts.at("weights").get<std::string>());
        const std::vector<double> means = parse_list(opts.at("means").get<std::string>());
        const bayes::DpmmSim sim = bayes::simulate_dpmm(
            weights, means, opts.at("phi").get<double>(), opts.at("n").get<int>(), seed);
        Eigen::MatrixXd table(static_cast<Eigen::Index>(sim.y.size()), 1);
        for (std::size_t i = 0; i < sim.y.size(); ++i)
            table(static_cast<Eigen::Index>(i), 0) = sim.y[i];
        bayes::write_csv((out_dir / "data.csv").string(), {"value"}, table);
        truth = {{"weights", weights}, {"means", means},
                 {"phi", opts.at("phi").get<double>()}, {"component", sim.component}};
    } else {
        throw bayes::config_error("unknown simulation model '" + model + "'");
    }
    manifest.add_file(out_dir / "data.csv");
    truth["seed"] = seed;
    write_json(out_dir / "truth.json", truth);
    manifest.add_file(out_dir / "truth.json");
    manifest.stage_seconds["simulate"] = sim_sw.seconds();

    manifest.write(out_dir, seed);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian modeling workbench"};
    app.require_subcommand(1);

    std::string input, out, grid_path;
    std::uint64_t seed = 0;

    // hier
    auto* hier = app.add_subcommand("hier", "Hierarchical grouped-measurement sampler");
    std::uint64_t h_burn = 10000, h_iters = 50000, h_thin = 10;
    bool h_literal = false;
    hier->add_option("--input", input)->required();
    hier->add_option("--out", out)->required();
    hier->add_option("--seed", seed);
    hier->add_option("--burn-in", h_burn);
    hier->add_option("--iters", h_iters);
    hier->add_option("--thin", h_thin);
    hier->add_flag("--paper-literal", h_literal);

    // spatial
    auto* spatial = app.add_subcommand("spatial", "Gaussian-process rainfall sampler");
    std::uint64_t s_burn = 500, s_iters = 1000, s_thin = 1;
    std::string phi_grid, gamma2_grid;
    double threshold = 1200.0;
    spatial->add_option("--input", input)->required();
    spatial->add_option("--out", out)->required();
    spatial->add_option("--grid", grid_path);
    spatial->add_option("--seed", seed);
    spatial->add_option("--burn-in", s_burn);
    spatial->add_option("--iters", s_iters);
    spatial->add_option("--thin", s_thin);
    spatial->add_option("--phi-grid", phi_grid);
    spatial->add_option("--gamma2-grid", gamma2_grid);
    spatial->add_option("--threshold-mm", threshold);

    // mtd
    auto* mtd = app.add_subcommand("mtd", "Mixture-transition Markov chain");
    std::uint64_t m_burn = 1000, m_iters = 5000;
    int order_max = 5, horizon = 12;
    bool m_states = false;
    mtd->add_option("--input", input)->required();
    mtd->add_option("--out", out)->required();
    mtd->add_option("--seed", seed);
    mtd->add_option("--burn-in", m_burn);
    mtd->add_option("--iters", m_iters);
    mtd->add_option("--order-max", order_max);
    mtd->add_option("--horizon", horizon);
    mtd->add_flag("--states", m_states,
                  "input column holds 1-based states rather than rates to encode");

    // dpmm-vi
    auto* vi = app.add_subcommand("dpmm-vi", "Variational DP mixture fit");
    int truncation = 20, init_clusters = 3, vi_max_iters = 1000, grid_points = 241;
    double grid_lo = -3.0, grid_hi = 3.0;
    vi->add_option("--input", input)->required();
    vi->add_option("--out", out)->required();
    vi->add_option("--seed", seed);
    vi->add_option("--truncation", truncation);
    vi->add_option("--init-clusters", init_clusters);
    vi->add_option("--iters", vi_max_iters);
    vi->add_option("--grid-lo", grid_lo);
    vi->add_option("--grid-hi", grid_hi);
    vi->add_option("--grid-points", grid_points);

    // dpmm-cgs
    auto* cgs = app.add_subcommand("dpmm-cgs", "Collapsed Gibbs DP mixture");
    std::uint64_t c_burn = 1000, c_samples = 10000;
    cgs->add_option("--input", input)->required();
    cgs->add_option("--out", out)->required();
    cgs->add_option("--seed", seed);
    cgs->add_option("--burn-in", c_burn);
    cgs->add_option("--iters", c_samples);
    cgs->add_option("--grid-lo", grid_lo);
    cgs->add_option("--grid-hi", grid_hi);
    cgs->add_option("--grid-points", grid_points);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Synthetic dataset generators");
    std::string model;
    int sim_groups = 4, sim_devices = 20, sim_sites = 50, sim_years = 4;
    int sim_length = 500, sim_n = 200;
    double sim_records = 5.0, sim_mu = 20.0, sim_tau2 = 1.0, sim_sigma2 = 2.0;
    double sim_alpha = 2.0, sim_extent = 100.0, sim_phi = 30.0, sim_gamma2 = 3.0;
    double sim_missing = 0.1, sim_sp_sigma2 = 4.0, sim_dp_phi = 4.0;
    std::string sim_beta = "100,0.5,0.5,5,1,0.01,0.05";
    std::string sim_lambda = "0.6,0.4";
    std::string sim_q = "0.7,0.2,0.1;0.2,0.6,0.2;0.1,0.2,0.7";
    std::string sim_weights = "0.3,0.5,0.2";
    std::string sim_means = "-2,0,2";
    sim->add_option("--model", model)->required();
    sim->add_option("--out", out)->required();
    sim->add_option("--seed", seed);
    sim->add_option("--groups", sim_groups);
    sim->add_option("--devices", sim_devices);
    sim->add_option("--records", sim_records);
    sim->add_option("--mu", sim_mu);
    sim->add_option("--tau2", sim_tau2);
    sim->add_option("--sigma2", sim_sigma2);
    sim->add_option("--alpha", sim_alpha);
    sim->add_option("--sites", sim_sites);
    sim->add_option("--years", sim_years);
    sim->add_option("--extent", sim_extent);
    sim->add_option("--beta", sim_beta);
    sim->add_option("--sp-sigma2", sim_sp_sigma2);
    sim->add_option("--phi", sim_phi);
    sim->add_option("--gamma2", sim_gamma2);
    sim->add_option("--missing-frac", sim_missing);
    sim->add_option("--length", sim_length);
    sim->add_option("--lambda", sim_lambda);
    sim->add_option("--q", sim_q);
    sim->add_option("--weights", sim_weights);
    sim->add_option("--means", sim_means);
    sim->add_option("--dp-phi", sim_dp_phi);
    sim->add_option("--n", sim_n);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (hier->parsed())
            return run_hier(input, out, seed, h_burn, h_iters, h_thin, h_literal);
        if (spatial->parsed())
            return run_spatial(input, grid_path, out, seed, s_burn, s_iters, s_thin,
                               phi_grid, gamma2_grid, threshold);
        if (mtd->parsed())
            return run_mtd(input, out, seed, m_burn, m_iters, order_max, horizon, m_states);
        if (vi->parsed())
            return run_dpmm_vi(input, out, seed, truncation, init_clusters, vi_max_iters,
                               grid_lo, grid_hi, grid_points);
        if (cgs->parsed())
            return run_dpmm_cgs(input, out, seed, c_burn, c_samples, grid_lo, grid_hi,
                                grid_points);
        if (sim->parsed()) {
            json opts = {{"groups", sim_groups},     {"devices", sim_devices},
                         {"records", sim_records},   {"mu", sim_mu},
                         {"tau2", sim_tau2},
                         {"sigma2", model == "spatial" ? sim_sp_sigma2 : sim_sigma2},
                         {"alpha", sim_alpha},       {"sites", sim_sites},
                         {"years", sim_years},       {"extent", sim_extent},
                         {"beta", sim_beta},         {"phi", model == "dpmm" ? sim_dp_phi : sim_phi},
                         {"gamma2", sim_gamma2},     {"missing_frac", sim_missing},
                         {"length", sim_length},     {"lambda", sim_lambda},
                         {"q", sim_q},               {"weights", sim_weights},
                         {"means", sim_means},       {"n", sim_n}};
            return run_simulate(model, out, seed, opts);
        }
        throw bayes::config_error("no subcommand selected");
    } catch (const bayes::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const bayes::parameter_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const bayes::ingestion_error& e) {
        std::fprintf(stderr, "ingestion error: %s\n", e.what());
        return 3;
    } catch (const bayes::data_error& e) {
        std::fprintf(stderr, "ingestion error: %s\n", e.what());
        return 3;
    } catch (const bayes::convergence_error& e) {
        std::fprintf(stderr, "non-convergence: %s\n", e.what());
        return 5;
    } catch (const bayes::numerical_error& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}
