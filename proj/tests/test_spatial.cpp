#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "bayes/simulate.hpp"
#include "bayes/spatial.hpp"

using namespace bayes;

namespace {

Eigen::MatrixXd pairwise_dist(const Eigen::VectorXd& px, const Eigen::VectorXd& py) {
    const Eigen::Index n = px.size();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dx = px[i] - px[j], dy = py[i] - py[j];
            d(i, j) = d(j, i) = std::sqrt(dx * dx + dy * dy);
        }
    return d;
}

struct ToyField {
    Eigen::MatrixXd dist;
    Eigen::VectorXd x; // response
};

ToyField toy_field(int n, std::uint64_t seed) {
    RngStream rng(seed);
    Eigen::VectorXd px(n), py(n);
    for (int i = 0; i < n; ++i) {
        px[i] = rng.uniform(0.0, 10.0);
        py[i] = rng.uniform(0.0, 10.0);
    }
    ToyField f;
    f.dist = pairwise_dist(px, py);
    const Eigen::MatrixXd v = assemble_v(f.dist, 3.0, 2.5);
    f.x = rng.mvnormal(Eigen::VectorXd::Constant(n, 5.0), 2.0 * v);
    return f;
}

// Brute-force log of the sigma2- and beta-integrated marginal for an
// intercept-only trend, up to the same additive constant for every psi.
double numeric_log_marginal(const Eigen::MatrixXd& v, const Eigen::VectorXd& x) {
    const Eigen::Index n = x.size();
    const Eigen::MatrixXd vinv = v.inverse();
    const double logdet_v = std::log(v.determinant());
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const double r0 = x.dot(vinv * x);
    const double r1 = ones.dot(vinv * x);
    const double r2 = ones.dot(vinv * ones);
    const double bhat = r1 / r2;

    const double blo = bhat - 40.0, bhi = bhat + 40.0;
    const int nb = 1600, ns = 1200;
    const double db = (bhi - blo) / nb;
    const double llo = std::log(1e-3), lhi = std::log(1e4);
    const double dl = (lhi - llo) / ns;

    double acc = 0.0;
    for (int is = 0; is <= ns; ++is) {
        const double s2 = std::exp(llo + is * dl);
        double inner = 0.0;
        for (int ib = 0; ib <= nb; ++ib) {
            const double b = blo + ib * db;
            const double quad = r0 - 2.0 * b * r1 + b * b * r2;
            inner += std::exp(-0.5 * quad / s2);
        }
        inner *= db;
        // N(x; b 1, s2 V) normalizer, reciprocal prior 1/s2, and the
        // log-scale substitution d(s2) = s2 d(log s2)
        acc += inner * std::exp(-0.5 * (n * std::log(2.0 * std::numbers::pi * s2) + logdet_v));
    }
    return std::log(acc * dl);
}

} // namespace

TEST_CASE("matern correlation closed forms") {
    CHECK(matern_corr(0.0, 7.0) == 1.0);
    CHECK(matern_corr(1e6, 50.0) < 1e-10);
    // order 1/2 is the exponential kernel with sqrt(2 nu) = 1 scaling
    CHECK(matern_corr(2.0, 3.0, 0.5) == doctest::Approx(std::exp(-2.0 / 3.0)).epsilon(1e-14));
    const double t = std::sqrt(3.0) * 2.0 / 3.0;
    CHECK(matern_corr(2.0, 3.0, 1.5) == doctest::Approx((1.0 + t) * std::exp(-t)).epsilon(1e-14));

    double prev = 1.0;
    for (double d = 0.5; d < 40.0; d += 0.5) {
        const double c = matern_corr(d, 8.0);
        CHECK(c < prev);
        CHECK(c > 0.0);
        prev = c;
    }
    CHECK_THROWS_AS(matern_corr(1.0, 0.0), parameter_error);
    CHECK_THROWS_AS(matern_corr(-1.0, 1.0), parameter_error);
    CHECK_THROWS_AS(matern_corr(1.0, 1.0, 2.0), parameter_error);
}

TEST_CASE("trend design layout and rank checking") {
    const auto sim = simulate_spatial(8, 3, 50.0,
                                      Eigen::VectorXd::Ones(7), 4.0, 20.0, 3.0, 0.0,
                                      2.5, 21);
    const Eigen::MatrixXd d = build_trend(sim.data);
    REQUIRE(d.rows() == sim.data.n());
    REQUIRE(d.cols() == 7);
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        CHECK(d(i, 0) == 1.0);
        CHECK(d(i, 1) == sim.data.x[i]);
        CHECK(d(i, 2) == sim.data.y[i]);
        CHECK(d(i, 3) == sim.data.altitude[i]);
        CHECK(d(i, 4) == double(sim.data.year[i]));
        CHECK(d(i, 5) == sim.data.y[i] * sim.data.y[i]);
        CHECK(d(i, 6) == double(sim.data.year[i]) * double(sim.data.year[i]));
    }

    // a single observation year makes year and year^2 collinear with the
    // intercept; the error must name the dependent columns
    const auto flat = simulate_spatial(12, 1, 50.0, Eigen::VectorXd::Ones(7), 4.0,
                                       20.0, 3.0, 0.0, 2.5, 22);
    CHECK_THROWS_WITH_AS(build_trend(flat.data),
                         doctest::Contains("rank deficient"), data_error);
}

TEST_CASE("covariance assembly has an exact unit-plus-nugget diagonal") {
    const auto f = toy_field(6, 3);
    const Eigen::MatrixXd v = assemble_v(f.dist, 2.0, 3.25);
    CHECK(v == v.transpose());
    for (Eigen::Index i = 0; i < v.rows(); ++i) CHECK(v(i, i) == 4.25);
}

TEST_CASE("profile GLS reduces to ordinary least squares at V = I") {
    Eigen::VectorXd x(5);
    x << 1.0, 2.0, 4.0, 4.5, 6.0;
    const Eigen::MatrixXd d = Eigen::MatrixXd::Ones(5, 1);
    const auto g = gls_profile(Eigen::MatrixXd::Identity(5, 5), x, d);
    const double xbar = x.mean();
    CHECK(g.beta_hat[0] == doctest::Approx(xbar).epsilon(1e-14));
    CHECK(g.s2 == doctest::Approx((x.array() - xbar).square().sum()).epsilon(1e-12));
    CHECK(g.logdet_v == doctest::Approx(0.0));
}

TEST_CASE("profile GLS is shift invariant with an intercept") {
    const auto f = toy_field(7, 5);
    Eigen::MatrixXd d(7, 2);
    d.col(0).setOnes();
    d.col(1) = Eigen::VectorXd::LinSpaced(7, 0.0, 6.0);
    const Eigen::MatrixXd v = assemble_v(f.dist, 2.0, 2.5);
    const auto g0 = gls_profile(v, f.x, d);
    const auto g1 = gls_profile(v, f.x.array() + 17.0, d);
    CHECK(g1.s2 == doctest::Approx(g0.s2).epsilon(1e-10));
    CHECK(g1.beta_hat[0] - g0.beta_hat[0] == doctest::Approx(17.0).epsilon(1e-10));
    CHECK(g1.beta_hat[1] == doctest::Approx(g0.beta_hat[1]).epsilon(1e-10));
}

TEST_CASE("profile GLS matches the dense-inverse oracle") {
    const auto f = toy_field(6, 9);
    Eigen::MatrixXd d(6, 3);
    d.col(0).setOnes();
    d.col(1) = Eigen::VectorXd::LinSpaced(6, -1.0, 1.0);
    d.col(2) = d.col(1).cwiseProduct(d.col(1));
    const Eigen::MatrixXd v = assemble_v(f.dist, 2.5, 2.25);

    const auto g = gls_profile(v, f.x, d);
    const Eigen::MatrixXd vinv = v.inverse();
    const Eigen::MatrixXd a = d.transpose() * vinv * d;
    const Eigen::VectorXd beta = a.inverse() * d.transpose() * vinv * f.x;
    const Eigen::VectorXd r = f.x - d * beta;
    const double s2 = r.dot(vinv * r);

    CHECK((g.beta_hat - beta).cwiseAbs().maxCoeff() < 1e-8 * beta.cwiseAbs().maxCoeff());
    CHECK(g.s2 == doctest::Approx(s2).epsilon(1e-8));
    CHECK(g.logdet_v == doctest::Approx(std::log(v.determinant())).epsilon(1e-8));
    CHECK(g.logdet_dtvd == doctest::Approx(std::log(a.determinant())).epsilon(1e-8));
}

TEST_CASE("marginal psi posterior support and determinism") {
    const auto f = toy_field(6, 13);
    const Eigen::MatrixXd d = Eigen::MatrixXd::Ones(6, 1);
    const double ninf = -std::numeric_limits<double>::infinity();
    CHECK(log_post_psi(2.0, 5.0, f.dist, f.x, d) == ninf);
    CHECK(log_post_psi(2.0, 1.5, f.dist, f.x, d) == ninf);
    CHECK(std::isfinite(log_post_psi(2.0, 2.0, f.dist, f.x, d))); // closed endpoints
    CHECK(std::isfinite(log_post_psi(2.0, 4.0, f.dist, f.x, d)));
    CHECK(log_post_psi(2.0, 3.0, f.dist, f.x, d) ==
          log_post_psi(2.0, 3.0, f.dist, f.x, d));
}

TEST_CASE("marginal psi posterior matches a numerical-integration oracle") {
    const auto f = toy_field(5, 17);
    const Eigen::MatrixXd d = Eigen::MatrixXd::Ones(5, 1);
    const double lp1 = log_post_psi(1.5, 2.5, f.dist, f.x, d) + std::log(1.5);
    const double lp2 = log_post_psi(4.0, 3.5, f.dist, f.x, d) + std::log(4.0);
    const double nm1 = numeric_log_marginal(assemble_v(f.dist, 1.5, 2.5), f.x);
    const double nm2 = numeric_log_marginal(assemble_v(f.dist, 4.0, 3.5), f.x);
    CHECK(std::abs((lp1 - lp2) - (nm1 - nm2)) < 0.05);
}

TEST_CASE("grid sampler on a single cell always accepts") {
    const auto f = toy_field(8, 19);
    const Eigen::MatrixXd d = Eigen::MatrixXd::Ones(8, 1);
    PsiGrid grid;
    grid.phi = {2.0};
    grid.gamma2 = {3.0};
    PsiState st;
    RngStream rng(1);
    GlsResult gls;
    for (int i = 0; i < 20; ++i) {
        CHECK(block_mh_step(st, grid, f.dist, f.x, d, 2.5, rng, gls));
        CHECK(st.phi_idx == 0);
        CHECK(st.gamma2_idx == 0);
    }
    CHECK(gls.beta_hat.size() == 1);
    CHECK(gls.s2 >= 0.0);
}

TEST_CASE("grid sampler long-run frequencies match the exact discrete posterior") {
    const auto f = toy_field(12, 23);
    const Eigen::MatrixXd d = Eigen::MatrixXd::Ones(12, 1);
    PsiGrid grid;
    grid.phi = {1.0, 3.0, 8.0};
    grid.gamma2 = {2.5, 3.0, 3.5};

    double probs[9];
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            probs[3 * i + j] = log_post_psi(grid.phi[static_cast<std::size_t>(i)],
                                            grid.gamma2[static_cast<std::size_t>(j)],
                                            f.dist, f.x, d);
            mx = std::max(mx, probs[3 * i + j]);
        }
    double total = 0.0;
    for (double& p : probs) {
        p = std::exp(p - mx);
        total += p;
    }
    for (double& p : probs) p /= total;

    PsiState st;
    RngStream rng(77);
    GlsResult gls;
    for (int it = 0; it < 2000; ++it) block_mh_step(st, grid, f.dist, f.x, d, 2.5, rng, gls);

    const int batches = 20, batch_len = 2000;
    double freq[9] = {0.0};
    double batch_freq[20][9] = {{0.0}};
    for (int b = 0; b < batches; ++b) {
        for (int it = 0; it < batch_len; ++it) {
            block_mh_step(st, grid, f.dist, f.x, d, 2.5, rng, gls);
            const int cell = 3 * st.phi_idx + st.gamma2_idx;
            freq[cell] += 1.0;
            batch_freq[b][cell] += 1.0;
        }
        for (int c = 0; c < 9; ++c) batch_freq[b][c] /= batch_len;
    }
    const double nsteps = double(batches) * batch_len;
    for (int c = 0; c < 9; ++c) {
        const double fr = freq[c] / nsteps;
        double var = 0.0;
        for (int b = 0; b < batches; ++b)
            var += (batch_freq[b][c] - fr) * (batch_freq[b][c] - fr);
        var /= (batches - 1);
        const double se = std::sqrt(var / batches);
        INFO("cell ", c, ": freq ", fr, " exact ", probs[c], " se ", se);
        CHECK(std::abs(fr - probs[c]) < std::max(3.0 * se, 0.01));
    }
}

TEST_CASE("imputation draws") {
    SUBCASE("no missing entries gives an empty draw") {
        const auto f = toy_field(5, 29);
        RngStream rng(2);
        const Eigen::VectorXd out = impute_missing(
            Eigen::VectorXd::Ones(1), 1.0, assemble_v(f.dist, 2.0, 3.0),
            Eigen::MatrixXd::Ones(5, 1), f.x, {0, 1, 2, 3, 4}, {}, rng);
        CHECK(out.size() == 0);
    }
    SUBCASE("noiseless duplicate site interpolates the observed value") {
        // record 3 duplicates record 0; with zero nugget the conditional is
        // degenerate at the observed value
        Eigen::VectorXd px(4), py(4);
        px << 0.0, 4.0, 9.0, 0.0;
        py << 0.0, 3.0, 1.0, 0.0;
        const Eigen::MatrixXd dist = pairwise_dist(px, py);
        const Eigen::MatrixXd v = assemble_v(dist, 3.0, 0.0);
        Eigen::VectorXd x(4);
        x << 2.7, 1.0, -0.5, 0.0;
        const Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 1);
        RngStream rng(3);
        const Eigen::VectorXd out =
            impute_missing(Eigen::VectorXd::Zero(1), 2.0, v, d, x, {0, 1, 2}, {3}, rng);
        REQUIRE(out.size() == 1);
        CHECK(std::abs(out[0] - 2.7) < 1e-8);
    }
    SUBCASE("conditional moments match the dense-formula oracle") {
        const auto f = toy_field(4, 31);
        const Eigen::MatrixXd v = assemble_v(f.dist, 2.0, 2.5);
        const Eigen::MatrixXd d = Eigen::MatrixXd::Ones(4, 1);
        Eigen::VectorXd beta(1);
        beta << 3.0;
        const double sigma2 = 1.7;
        const std::vector<int> obs{0, 2, 3}, mis{1};

        Eigen::MatrixXd v_oo(3, 3), v_mo(1, 3);
        Eigen::VectorXd x_o(3);
        for (int a = 0; a < 3; ++a) {
            x_o[a] = f.x[obs[static_cast<std::size_t>(a)]];
            v_mo(0, a) = v(1, obs[static_cast<std::size_t>(a)]);
            for (int b = 0; b < 3; ++b)
                v_oo(a, b) = v(obs[static_cast<std::size_t>(a)], obs[static_cast<std::size_t>(b)]);
        }
        const Eigen::MatrixXd v_oo_inv = v_oo.inverse();
        const double cmean =
            beta[0] + (v_mo * v_oo_inv * (x_o.array() - beta[0]).matrix())(0, 0);
        const double cvar = sigma2 * (v(1, 1) - (v_mo * v_oo_inv * v_mo.transpose())(0, 0));

        const int reps = 200000;
        double s = 0.0, ss = 0.0;
        RngStream rng(97);
        for (int r = 0; r < reps; ++r) {
            const Eigen::VectorXd out =
                impute_missing(beta, sigma2, v, d, f.x, obs, mis, rng);
            s += out[0];
            ss += out[0] * out[0];
        }
        const double mean = s / reps;
        const double var = ss / reps - mean * mean;
        CHECK(std::abs(mean - cmean) < 5.0 * std::sqrt(cvar / reps));
        CHECK(std::abs(var - cvar) < 0.05 * cvar + 1e-12);
    }
}

TEST_CASE("posterior chain bookkeeping and shift equivariance") {
    Eigen::VectorXd beta(7);
    beta << 100.0, 0.5, 0.5, 5.0, 1.0, 0.01, 0.05;
    const auto sim = simulate_spatial(12, 3, 80.0, beta, 4.0, 25.0, 3.0, 0.0, 2.5, 41);

    SpatialOptions opts;
    opts.burn_in = 50;
    opts.iters = 100;
    opts.seed = 5;
    const auto a = spatial_run(sim.data, opts);
    CHECK(a.rows() == 100);
    CHECK(a.names.front() == "beta_1");
    CHECK(a.column_index("sigma2") == 7);
    CHECK(a.draws.col(a.column_index("sigma2")).minCoeff() > 0.0);

    SUBCASE("same seed reproduces the chain") {
        const auto b = spatial_run(sim.data, opts);
        CHECK(a.draws == b.draws);
    }
    SUBCASE("adding a constant shifts only the intercept") {
        SpatialSim shifted = sim;
        shifted.data.rainfall.array() += 250.0;
        const auto b = spatial_run(shifted.data, opts);
        CHECK(b.draws.col(a.column_index("phi")) == a.draws.col(a.column_index("phi")));
        CHECK(b.draws.col(a.column_index("gamma2")) ==
              a.draws.col(a.column_index("gamma2")));
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
            CHECK(b.draws(r, 0) - a.draws(r, 0) == doctest::Approx(250.0).epsilon(1e-8));
            for (int j = 1; j < 7; ++j)
                CHECK(b.draws(r, j) == doctest::Approx(a.draws(r, j)).epsilon(1e-8));
        }
    }
}

TEST_CASE("kriging prediction maps") {
    Eigen::VectorXd beta(7);
    beta << 100.0, 0.5, 0.5, 5.0, 1.0, 0.01, 0.05;
    const auto sim = simulate_spatial(12, 3, 80.0, beta, 4.0, 25.0, 3.0, 0.0, 2.5, 43);
    SpatialOptions opts;
    opts.burn_in = 100;
    opts.iters = 400;
    opts.seed = 6;
    const auto chain = spatial_run(sim.data, opts);

    NewSites sites;
    sites.x = Eigen::VectorXd(2);
    sites.y = Eigen::VectorXd(2);
    sites.year = Eigen::VectorXi(2);
    sites.x << 40.0, 40.0 + 1e7;
    sites.y << 40.0, 40.0;
    sites.year << 1, 1;

    SUBCASE("threshold at negative infinity gives exceedance one") {
        const auto maps = spatial_predict(sim.data, chain, sites, -1e300, 2.5, 9);
        CHECK(maps.exceedance[0] == 1.0);
        CHECK(maps.exceedance[1] == 1.0);
        CHECK(maps.variance.minCoeff() >= 0.0);
    }
    SUBCASE("a site far beyond the range reverts to the trend mean") {
        const auto maps = spatial_predict(sim.data, chain, sites, 1200.0, 2.5, 9);
        // rebuild the across-draw trend mean at the far site (nearest-site altitude)
        Eigen::Index nearest = 0;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < sim.data.n(); ++j) {
            const double dx = sites.x[1] - sim.data.x[j];
            const double dy = sites.y[1] - sim.data.y[j];
            if (std::hypot(dx, dy) < best) {
                best = std::hypot(dx, dy);
                nearest = j;
            }
        }
        Eigen::VectorXd row(7);
        row << 1.0, sites.x[1], sites.y[1], sim.data.altitude[nearest], 1.0,
            sites.y[1] * sites.y[1], 1.0;
        double trend = 0.0, var_acc = 0.0;
        for (Eigen::Index r = 0; r < chain.rows(); ++r) {
            double m = 0.0;
            for (int j = 0; j < 7; ++j) m += row[j] * chain.draws(r, j);
            trend += m;
            var_acc += chain.draws(r, chain.column_index("sigma2")) *
                       (1.0 + chain.draws(r, chain.column_index("gamma2")));
        }
        trend /= double(chain.rows());
        var_acc /= double(chain.rows());
        const double tol = 5.0 * std::sqrt(var_acc / double(chain.rows()));
        CHECK(std::abs(maps.mean[1] - trend) < tol);
    }
}

TEST_CASE("default psi grid spans the distance distribution") {
    const auto sim = simulate_spatial(15, 2, 60.0, Eigen::VectorXd::Ones(7), 4.0, 20.0,
                                      3.0, 0.0, 2.5, 47);
    const PsiGrid g = PsiGrid::default_for(sim.data);
    g.validate();
    REQUIRE(g.gamma2.size() == 9);
    CHECK(g.gamma2.front() == 2.0);
    CHECK(g.gamma2.back() == 4.0);
    CHECK(g.phi.size() == 20);
    for (std::size_t i = 1; i < g.phi.size(); ++i) CHECK(g.phi[i] > g.phi[i - 1]);

    PsiGrid bad = g;
    bad.gamma2.push_back(4.5);
    CHECK_THROWS_AS(bad.validate(), parameter_error);
    bad = g;
    bad.phi[0] = bad.phi[1];
    CHECK_THROWS_AS(bad.validate(), parameter_error);
}

TEST_CASE("variogram least squares") {
    SUBCASE("pure nugget data give a flat fit across orders") {
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(7);
        beta[0] = 10.0;
        const auto sim = simulate_spatial(14, 3, 100.0, beta, 1.0, 10.0, 400.0, 0.0,
                                          2.5, 51);
        const auto fits = variogram_ls(sim.data, {0.5, 1.5, 2.5});
        REQUIRE(fits.size() == 3);
        double lo = fits[0].sse, hi = fits[0].sse;
        for (const auto& f : fits) {
            lo = std::min(lo, f.sse);
            hi = std::max(hi, f.sse);
        }
        CHECK(hi - lo <= 0.05 * hi);
    }
    SUBCASE("a noiseless trend leaves no semivariance") {
        RngStream rng(55);
        SpatialData d;
        const int n = 12;
        d.x.resize(n);
        d.y.resize(n);
        d.altitude.resize(n);
        d.year.resize(n);
        d.rainfall.resize(n);
        d.site_id.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            d.site_id[static_cast<std::size_t>(i)] = i + 1;
            d.x[i] = rng.uniform(0.0, 50.0);
            d.y[i] = rng.uniform(0.0, 50.0);
            d.altitude[i] = rng.uniform(0.0, 2.0);
            d.year[i] = 1 + int(rng.uniform_index(3));
            d.rainfall[i] = 4.0 + 2.0 * d.x[i] - d.y[i] + 0.5 * d.altitude[i];
        }
        const auto fits = variogram_ls(d, {2.5});
        CHECK(fits[0].sse < 1e-12);
        CHECK(fits[0].nugget + fits[0].sigma2 < 1e-6);
    }
    SUBCASE("the generating smoothness attains the smallest error most of the time") {
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(7);
        beta[0] = 10.0;
        int wins = 0;
        for (int rep = 0; rep < 10; ++rep) {
            const auto sim = simulate_spatial(60, 3, 200.0, beta, 1.0, 50.0, 0.05, 0.0,
                                              2.5, 600 + static_cast<std::uint64_t>(rep));
            const auto fits = variogram_ls(sim.data, {0.5, 1.5, 2.5});
            int best = 0;
            for (int c = 1; c < 3; ++c)
                if (fits[static_cast<std::size_t>(c)].sse <
                    fits[static_cast<std::size_t>(best)].sse)
                    best = c;
            if (fits[static_cast<std::size_t>(best)].nu == 2.5) ++wins;
        }
        CHECK(wins >= 8);
    }
}
