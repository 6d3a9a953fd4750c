#include "bayes/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

namespace bayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kTrendCols = 7;

Eigen::MatrixXd distance_matrix(const SpatialData& data) {
    const Eigen::Index n = data.n();
    Eigen::MatrixXd dist(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        dist(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dx = data.x[i] - data.x[j];
            const double dy = data.y[i] - data.y[j];
            dist(i, j) = dist(j, i) = std::sqrt(dx * dx + dy * dy);
        }
    }
    return dist;
}

void split_indices(const SpatialData& data, std::vector<int>& obs, std::vector<int>& mis) {
    obs.clear();
    mis.clear();
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (std::isnan(data.rainfall[i]))
            mis.push_back(static_cast<int>(i));
        else
            obs.push_back(static_cast<int>(i));
    }
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<int>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    return out;
}

Eigen::VectorXd select(const Eigen::VectorXd& v, const std::vector<int>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[idx[i]];
    return out;
}

Eigen::MatrixXd select_block(const Eigen::MatrixXd& m, const std::vector<int>& rows,
                             const std::vector<int>& cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                m(rows[i], cols[j]);
    return out;
}

} // namespace

Eigen::Index SpatialData::num_missing() const {
    Eigen::Index m = 0;
    for (Eigen::Index i = 0; i < rainfall.size(); ++i)
        if (std::isnan(rainfall[i])) ++m;
    return m;
}

void SpatialData::validate() const {
    const Eigen::Index sz = n();
    if (sz == 0) throw data_error("spatial data: no records");
    if (y.size() != sz || altitude.size() != sz || year.size() != sz ||
        rainfall.size() != sz || static_cast<Eigen::Index>(site_id.size()) != sz)
        throw data_error("spatial data: column lengths differ");
    for (Eigen::Index i = 0; i < sz; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i]) || !std::isfinite(altitude[i]))
            throw data_error("spatial data: non-finite coordinate at record " +
                             std::to_string(i + 1));
        if (year[i] < 1)
            throw data_error("spatial data: year must be a positive recode at record " +
                             std::to_string(i + 1));
    }
    if (sz - num_missing() < kTrendCols + 2)
        throw data_error("spatial data: need at least " +
                         std::to_string(kTrendCols + 2) + " observed responses");
}

double matern_corr(double d, double phi, double nu) {
    if (phi <= 0.0) throw parameter_error("matern_corr: phi must be positive");
    if (d < 0.0) throw parameter_error("matern_corr: negative distance");
    const double t = std::sqrt(2.0 * nu) * d / phi;
    if (nu == 0.5) return std::exp(-t);
    if (nu == 1.5) return (1.0 + t) * std::exp(-t);
    if (nu == 2.5) return (1.0 + t + t * t / 3.0) * std::exp(-t);
    throw parameter_error("matern_corr: order must be 0.5, 1.5 or 2.5");
}

Eigen::MatrixXd build_trend(const SpatialData& data) {
    const Eigen::Index n = data.n();
    Eigen::MatrixXd d(n, kTrendCols);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double yr = static_cast<double>(data.year[i]);
        d(i, 0) = 1.0;
        d(i, 1) = data.x[i];
        d(i, 2) = data.y[i];
        d(i, 3) = data.altitude[i];
        d(i, 4) = yr;
        d(i, 5) = data.y[i] * data.y[i];
        d(i, 6) = yr * yr;
    }

    std::vector<int> obs, mis;
    split_indices(data, obs, mis);
    const Eigen::MatrixXd d_obs = obs.empty() ? d : select_rows(d, obs);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d_obs);
    qr.setThreshold(1e-10);
    if (qr.rank() < kTrendCols) {
        static const char* col_names[kTrendCols] = {
            "intercept", "x", "y", "altitude", "year", "y^2", "year^2"};
        std::string dep;
        const auto perm = qr.colsPermutation().indices();
        for (Eigen::Index j = qr.rank(); j < kTrendCols; ++j) {
            if (!dep.empty()) dep += ", ";
            dep += col_names[perm[j]];
        }
        throw data_error("trend design is rank deficient; dependent columns: " + dep);
    }
    return d;
}

void PsiGrid::validate() const {
    if (phi.empty() || gamma2.empty()) throw parameter_error("psi grid: empty axis");
    for (std::size_t i = 0; i < phi.size(); ++i) {
        if (phi[i] <= 0.0) throw parameter_error("psi grid: phi must be positive");
        if (i > 0 && phi[i] <= phi[i - 1])
            throw parameter_error("psi grid: phi not strictly increasing");
    }
    for (std::size_t i = 0; i < gamma2.size(); ++i) {
        if (gamma2[i] < 2.0 || gamma2[i] > 4.0)
            throw parameter_error("psi grid: gamma2 outside [2,4]");
        if (i > 0 && gamma2[i] <= gamma2[i - 1])
            throw parameter_error("psi grid: gamma2 not strictly increasing");
    }
}

PsiGrid PsiGrid::default_for(const SpatialData& data) {
    std::vector<double> dists;
    for (Eigen::Index i = 0; i < data.n(); ++i)
        for (Eigen::Index j = i + 1; j < data.n(); ++j) {
            const double dx = data.x[i] - data.x[j];
            const double dy = data.y[i] - data.y[j];
            const double d = std::sqrt(dx * dx + dy * dy);
            if (d > 0.0) dists.push_back(d);
        }
    double lo = 1e-3, hi = 1.0;
    if (!dists.empty()) {
        lo = quantile(dists, 0.05);
        hi = quantile(dists, 0.95);
        if (lo <= 0.0) lo = hi / 100.0;
        if (hi <= lo) hi = lo * 10.0;
    }
    PsiGrid g;
    const int np = 20;
    for (int i = 0; i < np; ++i)
        g.phi.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i /
                                                    static_cast<double>(np - 1)));
    for (int i = 0; i <= 8; ++i) g.gamma2.push_back(2.0 + 0.25 * i);
    return g;
}

Eigen::MatrixXd assemble_v(const Eigen::MatrixXd& dist, double phi, double gamma2,
                           double nu) {
    const Eigen::Index n = dist.rows();
    Eigen::MatrixXd v(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i, i) = 1.0 + gamma2;
        for (Eigen::Index j = i + 1; j < n; ++j)
            v(i, j) = v(j, i) = matern_corr(dist(i, j), phi, nu);
    }
    return v;
}

GlsResult gls_profile(const Eigen::MatrixXd& v, const Eigen::VectorXd& x,
                      const Eigen::MatrixXd& d) {
    const Eigen::Index n = v.rows();
    const Eigen::Index k = d.cols();
    if (x.size() != n || d.rows() != n) throw parameter_error("gls_profile: shape mismatch");
    if (n <= k) throw parameter_error("gls_profile: need more rows than trend columns");

    Eigen::LLT<Eigen::MatrixXd> llt(v);
    if (llt.info() != Eigen::Success) {
        Eigen::MatrixXd vj = v;
        const double jitter = 1e-10 * v.diagonal().mean();
        vj.diagonal().array() += jitter;
        llt.compute(vj);
        if (llt.info() != Eigen::Success)
            throw decomposition_error("gls_profile: covariance not positive definite");
    }
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::VectorXd xw = l.triangularView<Eigen::Lower>().solve(x);
    const Eigen::MatrixXd dw = l.triangularView<Eigen::Lower>().solve(d);

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(dw);
    GlsResult out;
    out.beta_hat = qr.solve(xw);
    out.s2 = (xw - dw * out.beta_hat).squaredNorm();
    out.logdet_v = 2.0 * l.diagonal().array().log().sum();
    out.r_factor = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    out.logdet_dtvd = 2.0 * out.r_factor.diagonal().array().abs().log().sum();
    if (!std::isfinite(out.logdet_dtvd))
        throw decomposition_error("gls_profile: whitened design is singular");
    return out;
}

double log_post_psi(double phi, double gamma2, const Eigen::MatrixXd& dist,
                    const Eigen::VectorXd& x, const Eigen::MatrixXd& d, double nu) {
    if (phi <= 0.0 || gamma2 < 2.0 || gamma2 > 4.0) return kNegInf;
    const GlsResult g = gls_profile(assemble_v(dist, phi, gamma2, nu), x, d);
    const double n = static_cast<double>(x.size());
    const double k = static_cast<double>(d.cols());
    const double s2 = std::max(g.s2, 1e-300);
    return -0.5 * g.logdet_v - 0.5 * g.logdet_dtvd - 0.5 * (n - k) * std::log(s2) -
           std::log(phi);
}

bool block_mh_step(PsiState& state, const PsiGrid& grid, const Eigen::MatrixXd& dist,
                   const Eigen::VectorXd& x, const Eigen::MatrixXd& d, double nu,
                   RngStream& rng, GlsResult& gls) {
    const int ip = static_cast<int>(rng.uniform_index(grid.phi.size()));
    const int ig = static_cast<int>(rng.uniform_index(grid.gamma2.size()));

    const double lp_cur = log_post_psi(grid.phi[static_cast<std::size_t>(state.phi_idx)],
                                       grid.gamma2[static_cast<std::size_t>(state.gamma2_idx)],
                                       dist, x, d, nu);
    const double lp_prop = log_post_psi(grid.phi[static_cast<std::size_t>(ip)],
                                        grid.gamma2[static_cast<std::size_t>(ig)],
                                        dist, x, d, nu);
    bool accepted = false;
    if (std::log(rng.uniform()) < lp_prop - lp_cur) {
        state.phi_idx = ip;
        state.gamma2_idx = ig;
        accepted = true;
    }
    gls = gls_profile(
        assemble_v(dist, grid.phi[static_cast<std::size_t>(state.phi_idx)],
                   grid.gamma2[static_cast<std::size_t>(state.gamma2_idx)], nu),
        x, d);
    return accepted;
}

Eigen::VectorXd impute_missing(const Eigen::VectorXd& beta, double sigma2,
                               const Eigen::MatrixXd& v, const Eigen::MatrixXd& d,
                               const Eigen::VectorXd& x,
                               const std::vector<int>& obs_idx,
                               const std::vector<int>& mis_idx, RngStream& rng) {
    if (mis_idx.empty()) return Eigen::VectorXd(0);
    const Eigen::MatrixXd v_oo = select_block(v, obs_idx, obs_idx);
    const Eigen::MatrixXd v_mo = select_block(v, mis_idx, obs_idx);
    const Eigen::MatrixXd v_mm = select_block(v, mis_idx, mis_idx);
    const Eigen::VectorXd x_o = select(x, obs_idx);
    const Eigen::MatrixXd d_o = select_rows(d, obs_idx);
    const Eigen::MatrixXd d_m = select_rows(d, mis_idx);

    Eigen::LLT<Eigen::MatrixXd> llt(v_oo);
    if (llt.info() != Eigen::Success)
        throw decomposition_error("impute_missing: observed covariance not positive definite");
    const Eigen::VectorXd resid = x_o - d_o * beta;
    const Eigen::VectorXd mean = d_m * beta + v_mo * llt.solve(resid);
    Eigen::MatrixXd cov = sigma2 * (v_mm - v_mo * llt.solve(v_mo.transpose()));
    cov = 0.5 * (cov + cov.transpose()).eval();
    return rng.mvnormal(mean, cov);
}

PosteriorChain spatial_run(const SpatialData& data, const SpatialOptions& opts) {
    data.validate();
    if (opts.iters == 0 || opts.thin == 0 || opts.iters % opts.thin != 0)
        throw config_error("spatial_run: iters must be a positive multiple of thin");

    const Eigen::MatrixXd d = build_trend(data);
    const Eigen::MatrixXd dist = distance_matrix(data);
    PsiGrid grid = opts.grid;
    if (grid.phi.empty() && grid.gamma2.empty()) grid = PsiGrid::default_for(data);
    grid.validate();

    std::vector<int> obs_idx, mis_idx;
    split_indices(data, obs_idx, mis_idx);
    const Eigen::Index n = data.n();
    const Eigen::Index k = d.cols();
    const std::size_t nmis = mis_idx.size();

    Eigen::VectorXd x = data.rainfall;
    if (nmis > 0) {
        const double obs_mean = select(x, obs_idx).mean();
        for (int i : mis_idx) x[i] = obs_mean;
    }

    RngStream rng(opts.seed);
    PsiState psi;
    psi.phi_idx = static_cast<int>(grid.phi.size() / 2);
    psi.gamma2_idx = static_cast<int>(grid.gamma2.size() / 2);

    const std::uint64_t kept = opts.iters / opts.thin;
    PosteriorChain chain;
    chain.burn_in = opts.burn_in;
    chain.thin = opts.thin;
    chain.seed = opts.seed;
    for (Eigen::Index j = 0; j < k; ++j)
        chain.names.push_back("beta_" + std::to_string(j + 1));
    chain.names.push_back("sigma2");
    chain.names.push_back("phi");
    chain.names.push_back("gamma2");
    for (std::size_t m = 0; m < nmis; ++m)
        chain.names.push_back("xmis_" + std::to_string(m + 1));
    chain.draws.resize(static_cast<Eigen::Index>(kept),
                       static_cast<Eigen::Index>(chain.names.size()));

    GlsResult gls;
    Eigen::Index row = 0;
    for (std::uint64_t it = 0; it < opts.burn_in + opts.iters; ++it) {
        block_mh_step(psi, grid, dist, x, d, opts.nu, rng, gls);
        const double phi = grid.phi[static_cast<std::size_t>(psi.phi_idx)];
        const double gamma2 = grid.gamma2[static_cast<std::size_t>(psi.gamma2_idx)];

        const double sigma2 =
            rng.inv_gamma(0.5 * static_cast<double>(n - k), 0.5 * std::max(gls.s2, 1e-300));
        Eigen::VectorXd eta(k);
        for (Eigen::Index j = 0; j < k; ++j) eta[j] = rng.normal(0.0, 1.0);
        const Eigen::VectorXd beta =
            gls.beta_hat + std::sqrt(sigma2) *
                               gls.r_factor.triangularView<Eigen::Upper>().solve(eta);

        Eigen::VectorXd xmis(0);
        if (nmis > 0) {
            const Eigen::MatrixXd v = assemble_v(dist, phi, gamma2, opts.nu);
            xmis = impute_missing(beta, sigma2, v, d, x, obs_idx, mis_idx, rng);
            for (std::size_t m = 0; m < nmis; ++m) x[mis_idx[m]] = xmis[static_cast<Eigen::Index>(m)];
        }

        if (it >= opts.burn_in && (it - opts.burn_in + 1) % opts.thin == 0) {
            Eigen::Index c = 0;
            for (Eigen::Index j = 0; j < k; ++j) chain.draws(row, c++) = beta[j];
            chain.draws(row, c++) = sigma2;
            chain.draws(row, c++) = phi;
            chain.draws(row, c++) = gamma2;
            for (std::size_t m = 0; m < nmis; ++m)
                chain.draws(row, c++) = xmis[static_cast<Eigen::Index>(m)];
            ++row;
        }
    }
    return chain;
}

PredictionMaps spatial_predict(const SpatialData& data, const PosteriorChain& chain,
                               const NewSites& sites, double threshold, double nu,
                               std::uint64_t seed) {
    data.validate();
    const Eigen::Index m = sites.x.size();
    if (m == 0 || sites.y.size() != m || sites.year.size() != m)
        throw data_error("spatial_predict: malformed prediction grid");
    if (chain.rows() == 0) throw data_error("spatial_predict: empty chain");

    const Eigen::MatrixXd d = build_trend(data);
    const Eigen::MatrixXd dist = distance_matrix(data);
    const Eigen::Index n = data.n();
    const Eigen::Index k = d.cols();

    // nearest-site altitude and trend rows for the new locations
    Eigen::MatrixXd d_hat(m, k);
    Eigen::MatrixXd cross_dist(m, n);
    for (Eigen::Index i = 0; i < m; ++i) {
        double best = std::numeric_limits<double>::infinity();
        double alt = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double dx = sites.x[i] - data.x[j];
            const double dy = sites.y[i] - data.y[j];
            const double dd = std::sqrt(dx * dx + dy * dy);
            cross_dist(i, j) = dd;
            if (dd < best) {
                best = dd;
                alt = data.altitude[j];
            }
        }
        const double yr = static_cast<double>(sites.year[i]);
        d_hat(i, 0) = 1.0;
        d_hat(i, 1) = sites.x[i];
        d_hat(i, 2) = sites.y[i];
        d_hat(i, 3) = alt;
        d_hat(i, 4) = yr;
        d_hat(i, 5) = sites.y[i] * sites.y[i];
        d_hat(i, 6) = yr * yr;
    }
    Eigen::MatrixXd new_dist(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        new_dist(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double dx = sites.x[i] - sites.x[j];
            const double dy = sites.y[i] - sites.y[j];
            new_dist(i, j) = new_dist(j, i) = std::sqrt(dx * dx + dy * dy);
        }
    }

    std::vector<int> obs_idx, mis_idx;
    split_indices(data, obs_idx, mis_idx);

    const int c_sigma2 = chain.column_index("sigma2");
    const int c_phi = chain.column_index("phi");
    const int c_gamma2 = chain.column_index("gamma2");

    RngStream rng(seed);
    Eigen::VectorXd mean_acc = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd sq_acc = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd exceed_acc = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd x = data.rainfall;

    for (Eigen::Index r = 0; r < chain.rows(); ++r) {
        Eigen::VectorXd beta(k);
        for (Eigen::Index j = 0; j < k; ++j) beta[j] = chain.draws(r, j);
        const double sigma2 = chain.draws(r, c_sigma2);
        const double phi = chain.draws(r, c_phi);
        const double gamma2 = chain.draws(r, c_gamma2);
        for (std::size_t q = 0; q < mis_idx.size(); ++q)
            x[mis_idx[q]] = chain.draws(r, c_gamma2 + 1 + static_cast<Eigen::Index>(q));

        const Eigen::MatrixXd v = assemble_v(dist, phi, gamma2, nu);
        Eigen::LLT<Eigen::MatrixXd> llt(v);
        if (llt.info() != Eigen::Success)
            throw decomposition_error("spatial_predict: covariance not positive definite");

        Eigen::MatrixXd cross(m, n);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                cross(i, j) = matern_corr(cross_dist(i, j), phi, nu);
        const Eigen::MatrixXd v_hat = assemble_v(new_dist, phi, gamma2, nu);

        const Eigen::VectorXd pmean = d_hat * beta + cross * llt.solve(x - d * beta);
        Eigen::MatrixXd pcov = sigma2 * (v_hat - cross * llt.solve(cross.transpose()));
        pcov = 0.5 * (pcov + pcov.transpose()).eval();
        const Eigen::VectorXd draw = rng.mvnormal(pmean, pcov);

        mean_acc += draw;
        sq_acc += draw.cwiseProduct(draw);
        for (Eigen::Index i = 0; i < m; ++i)
            if (draw[i] > threshold) exceed_acc[i] += 1.0;
    }

    const double b = static_cast<double>(chain.rows());
    PredictionMaps maps;
    maps.mean = mean_acc / b;
    maps.exceedance = exceed_acc / b;
    maps.variance.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double v = b > 1.0
                             ? (sq_acc[i] - b * maps.mean[i] * maps.mean[i]) / (b - 1.0)
                             : 0.0;
        maps.variance[i] = std::max(v, 0.0);
    }
    return maps;
}

std::vector<VariogramFit> variogram_ls(const SpatialData& data,
                                       const std::vector<double>& nu_candidates,
                                       int bins) {
    data.validate();
    if (nu_candidates.empty()) throw parameter_error("variogram_ls: no candidate orders");
    if (bins < 2) throw parameter_error("variogram_ls: need at least 2 bins");

    const Eigen::MatrixXd d_full = build_trend(data);
    std::vector<int> obs_idx, mis_idx;
    split_indices(data, obs_idx, mis_idx);
    const Eigen::MatrixXd d_o = select_rows(d_full, obs_idx);
    const Eigen::VectorXd x_o = select(data.rainfall, obs_idx);
    const Eigen::VectorXd resid = x_o - d_o * d_o.colPivHouseholderQr().solve(x_o);

    struct Pair {
        double dist;
        double gamma;
    };
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < obs_idx.size(); ++i)
        for (std::size_t j = i + 1; j < obs_idx.size(); ++j) {
            const double dx = data.x[obs_idx[i]] - data.x[obs_idx[j]];
            const double dy = data.y[obs_idx[i]] - data.y[obs_idx[j]];
            const double diff = resid[static_cast<Eigen::Index>(i)] -
                                resid[static_cast<Eigen::Index>(j)];
            pairs.push_back({std::sqrt(dx * dx + dy * dy), 0.5 * diff * diff});
        }
    if (pairs.size() < 30) throw data_error("variogram_ls: need at least 30 observed pairs");
    std::sort(pairs.begin(), pairs.end(),
              [](const Pair& a, const Pair& b) { return a.dist < b.dist; });

    const int nb = std::min<int>(bins, static_cast<int>(pairs.size()));
    std::vector<double> bin_d, bin_g;
    const std::size_t per = pairs.size() / static_cast<std::size_t>(nb);
    for (int b = 0; b < nb; ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * per;
        const std::size_t hi = (b == nb - 1) ? pairs.size() : lo + per;
        double sd = 0.0, sg = 0.0;
        for (std::size_t q = lo; q < hi; ++q) {
            sd += pairs[q].dist;
            sg += pairs[q].gamma;
        }
        bin_d.push_back(sd / static_cast<double>(hi - lo));
        bin_g.push_back(sg / static_cast<double>(hi - lo));
    }

    const double d_max = pairs.back().dist;
    const double phi_lo = std::max(d_max * 1e-3, 1e-6);
    const double phi_hi = 4.0 * d_max;

    std::vector<VariogramFit> fits;
    for (double nu : nu_candidates) {
        // at fixed phi the model gamma(d) = c0 + c1 (1 - rho(d)) is linear
        auto sse_at = [&](double phi, VariogramFit* best) {
            double s_a = 0.0, s_aa = 0.0, s_g = 0.0, s_ag = 0.0;
            const double nbin = static_cast<double>(bin_d.size());
            std::vector<double> a(bin_d.size());
            for (std::size_t q = 0; q < bin_d.size(); ++q) {
                a[q] = 1.0 - matern_corr(bin_d[q], phi, nu);
                s_a += a[q];
                s_aa += a[q] * a[q];
                s_g += bin_g[q];
                s_ag += a[q] * bin_g[q];
            }
            const double det = nbin * s_aa - s_a * s_a;
            double c0, c1;
            if (std::abs(det) < 1e-14) {
                c1 = 0.0;
                c0 = s_g / nbin;
            } else {
                c0 = (s_aa * s_g - s_a * s_ag) / det;
                c1 = (nbin * s_ag - s_a * s_g) / det;
            }
            if (c1 < 0.0) {
                c1 = 0.0;
                c0 = s_g / nbin;
            }
            if (c0 < 0.0) {
                c0 = 0.0;
                c1 = s_aa > 0.0 ? std::max(s_ag / s_aa, 0.0) : 0.0;
            }
            double sse = 0.0;
            for (std::size_t q = 0; q < bin_d.size(); ++q) {
                const double e = bin_g[q] - c0 - c1 * a[q];
                sse += e * e;
            }
            if (best) {
                best->nu = nu;
                best->sigma2 = c1;
                best->phi = phi;
                best->nugget = c0;
                best->sse = sse;
            }
            return sse;
        };

        // golden-section search on log phi
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double lo = std::log(phi_lo), hi = std::log(phi_hi);
        double p1 = hi - gr * (hi - lo), p2 = lo + gr * (hi - lo);
        double f1 = sse_at(std::exp(p1), nullptr), f2 = sse_at(std::exp(p2), nullptr);
        for (int iter = 0; iter < 200 && hi - lo > 1e-10; ++iter) {
            if (f1 < f2) {
                hi = p2;
                p2 = p1;
                f2 = f1;
                p1 = hi - gr * (hi - lo);
                f1 = sse_at(std::exp(p1), nullptr);
            } else {
                lo = p1;
                p1 = p2;
                f1 = f2;
                p2 = lo + gr * (hi - lo);
                f2 = sse_at(std::exp(p2), nullptr);
            }
        }
        VariogramFit fit;
        sse_at(std::exp(0.5 * (lo + hi)), &fit);
        fits.push_back(fit);
    }
    return fits;
}

} // namespace bayes
