// End-to-end acceptance gate: one pass/fail line per criterion, exit code
// equal to the number of failures. Each criterion is self-contained and uses
// independently coded oracles (closed forms, eigen decompositions, exact grid
// posteriors) rather than the library's own implementations.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bayes/chain.hpp"
#include "bayes/csv.hpp"
#include "bayes/dpmm_cgs.hpp"
#include "bayes/dpmm_vi.hpp"
#include "bayes/hier.hpp"
#include "bayes/mtd.hpp"
#include "bayes/rng.hpp"
#include "bayes/simulate.hpp"
#include "bayes/spatial.hpp"
#include "bayes/special.hpp"

using namespace bayes;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> load_galaxies() {
    const auto table =
        load_csv(std::string(BAYES_DATA_DIR) + "/galaxies.csv", {{"value", false}});
    return table.numeric("value");
}

Eigen::MatrixXd pairwise_dist(const SpatialData& d) {
    const Eigen::Index n = d.n();
    Eigen::MatrixXd dist(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            dist(i, j) = std::hypot(d.x[i] - d.x[j], d.y[i] - d.y[j]);
    return dist;
}

// ------------------------------------------------------------------ 1

bool criterion_conjugate() {
    const auto t0 = Clock::now();
    RngStream rng(101);
    bool ok = true;

    for (int rep = 0; rep < 1000; ++rep) {
        const double a = rng.uniform(0.05, 10.0);
        const double b = rng.uniform(0.05, 10.0);
        const int n = 1 + static_cast<int>(rng.uniform_index(50));
        const double p = rng.uniform(0.05, 0.95);
        std::vector<int> xs;
        int heads = 0;
        for (int i = 0; i < n; ++i) {
            const int x = rng.uniform() < p ? 1 : 0;
            heads += x;
            xs.push_back(x);
        }
        const auto post = beta_bernoulli_posterior(a, b, xs);
        ok = ok && std::abs(post.a - (a + heads)) <= 1e-12 &&
             std::abs(post.b - (b + (n - heads))) <= 1e-12;
    }

    for (int rep = 0; rep < 1000; ++rep) {
        const double mu = rng.uniform(-5.0, 5.0);
        const double tau2 = rng.uniform(0.1, 10.0);
        const double sigma2 = rng.uniform(0.1, 10.0);
        const int n = 1 + static_cast<int>(rng.uniform_index(30));
        std::vector<double> xs;
        double sum = 0.0;
        for (int i = 0; i < n; ++i) {
            xs.push_back(rng.normal(mu, std::sqrt(sigma2)));
            sum += xs.back();
        }
        const double prec = 1.0 / tau2 + n / sigma2;
        const double want_var = 1.0 / prec;
        const double want_mean = want_var * (mu / tau2 + sum / sigma2);
        const auto post = normal_normal_posterior(mu, tau2, sigma2, xs);
        ok = ok && std::abs(post.mean - want_mean) <= 1e-12 * std::max(1.0, std::abs(want_mean)) &&
             std::abs(post.variance - want_var) <= 1e-12;
    }

    const double el = seconds_since(t0);
    std::fprintf(stderr, "  [1] 2000 cases in %.3f s\n", el);
    return ok && el < 1.0;
}

// ------------------------------------------------------------------ 2

bool criterion_hier() {
    const auto t0 = Clock::now();
    bool ok = true;

    // (a) prior recovery: Gibbs sweep alternated with a data redraw from the
    // likelihood leaves the proper prior invariant
    {
        HierData data;
        const int J = 4, per_group = 3;
        for (int j = 0; j < J; ++j)
            for (int i = 0; i < per_group; ++i) {
                data.y.push_back(0.0);
                data.n.push_back(1.0);
                data.group.push_back(j);
            }
        data.num_groups = J;
        HierHyper hyper;
        hyper.proper_level2 = ProperLevel2Prior{};

        RngStream rng(2101);
        HierState st = hier_init(data, hyper);
        auto redraw = [&] {
            for (std::size_t i = 0; i < data.y.size(); ++i) {
                const int j = data.group[i];
                const double sd =
                    std::sqrt(st.sigma2_group(j) /
                              (data.n[i] * st.lambda(static_cast<Eigen::Index>(i))));
                data.y[i] = rng.normal(st.theta(j), sd);
            }
        };
        for (int it = 0; it < 2000; ++it) {
            hier_sweep(st, data, hyper, rng);
            redraw();
        }
        const int batches = 30, batch_len = 1200;
        std::vector<double> mu_b(batches, 0.0), tau2_b(batches, 0.0), s2_b(batches, 0.0);
        for (int b = 0; b < batches; ++b) {
            for (int it = 0; it < batch_len; ++it) {
                hier_sweep(st, data, hyper, rng);
                redraw();
                mu_b[b] += st.mu;
                tau2_b[b] += st.tau2;
                s2_b[b] += st.sigma2;
            }
            mu_b[b] /= batch_len;
            tau2_b[b] /= batch_len;
            s2_b[b] /= batch_len;
        }
        auto within_5se = [&](const std::vector<double>& bm, double prior_mean,
                              const char* name) {
            double m = 0.0;
            for (double v : bm) m += v;
            m /= batches;
            double var = 0.0;
            for (double v : bm) var += (v - m) * (v - m);
            var /= (batches - 1);
            const double se = std::sqrt(var / batches);
            std::fprintf(stderr, "  [2] prior recovery %s: mean %.4f target %.1f se %.4f\n",
                         name, m, prior_mean, se);
            return std::abs(m - prior_mean) < 5.0 * se;
        };
        ok = ok && within_5se(mu_b, 0.0, "mu") && within_5se(tau2_b, 1.0, "tau2") &&
             within_5se(s2_b, 1.0, "sigma2");
    }

    // (b) coverage and predictive calibration on 20 synthetic replicates
    {
        int covered = 0, total = 0;
        double pval_acc = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const auto sim = simulate_hier(4, 20, 5.0, 20.0, 1.0, 2.0, 2.0, 5.0,
                                           2200 + static_cast<std::uint64_t>(rep));
            const HierHyper hyper;
            const auto chain = hier_run(sim.data, hyper, 2000, 10000, 10,
                                        2300 + static_cast<std::uint64_t>(rep));
            for (int j = 0; j < 4; ++j) {
                const int c = chain.column_index("theta_" + std::to_string(j + 1));
                std::vector<double> col(chain.draws.col(c).data(),
                                        chain.draws.col(c).data() + chain.rows());
                const double lo = quantile(col, 0.025);
                const double hi = quantile(col, 0.975);
                ++total;
                if (sim.theta[static_cast<std::size_t>(j)] >= lo &&
                    sim.theta[static_cast<std::size_t>(j)] <= hi)
                    ++covered;
            }
            RngStream prng(2400 + static_cast<std::uint64_t>(rep));
            pval_acc += bayesian_p_value(chain, sim.data, prng).average;
        }
        const double cov = double(covered) / total;
        const double pbar = pval_acc / 20.0;
        std::fprintf(stderr, "  [2] theta coverage %d/%d, mean bayesian p %.3f\n",
                     covered, total, pbar);
        ok = ok && cov >= 0.8 && pbar >= 0.3 && pbar <= 0.7;
    }

    // (c) an injected 6-sd outlier gets the smallest posterior-mean lambda
    {
        int hits = 0;
        for (int rep = 0; rep < 10; ++rep) {
            // near-homogeneous device weights (high simulation dof), so the
            // injected shift is the only outlier rather than competing with
            // natural heavy-tail draws
            auto sim = simulate_hier(4, 10, 5.0, 20.0, 1.0, 2.0, 2.0, 30.0,
                                     2500 + static_cast<std::uint64_t>(rep));
            // shift by 6 device-level standard deviations at the nominal
            // weight, so the injected discrepancy is what lambda must absorb
            const int g = sim.data.group[0];
            const double sd = std::sqrt(sim.sigma2_group[static_cast<std::size_t>(g)] /
                                        sim.data.n[0]);
            sim.data.y[0] += 6.0 * sd;
            const HierHyper hyper;
            const auto chain = hier_run(sim.data, hyper, 2000, 10000, 10,
                                        2600 + static_cast<std::uint64_t>(rep));
            int argmin = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t d = 0; d < sim.data.num_devices(); ++d) {
                const int c = chain.column_index("lambda_" + std::to_string(d + 1));
                const double m = chain.draws.col(c).mean();
                if (m < best) {
                    best = m;
                    argmin = static_cast<int>(d);
                }
            }
            if (argmin == 0) ++hits;
        }
        std::fprintf(stderr, "  [2] outlier detected in %d/10 runs\n", hits);
        ok = ok && hits >= 9;
    }

    const double el = seconds_since(t0);
    std::fprintf(stderr, "  [2] total %.1f s\n", el);
    return ok && el < 300.0;
}

// ------------------------------------------------------------------ 3

bool criterion_spatial() {
    const auto t0 = Clock::now();
    bool ok = true;
    Eigen::VectorXd beta(7);
    beta << 100.0, 0.5, 0.5, 5.0, 1.0, 0.01, 0.05;

    // (a) with psi fixed, the conjugate (sigma2, beta) draws center on the
    // generalized-least-squares solution
    {
        const auto sim = simulate_spatial(10, 5, 100.0, beta, 4.0, 20.0, 3.0, 0.0,
                                          2.5, 3101);
        const Eigen::MatrixXd dist = pairwise_dist(sim.data);
        const Eigen::MatrixXd v = assemble_v(dist, 20.0, 3.0);
        const Eigen::MatrixXd d = build_trend(sim.data);
        const GlsResult gls = gls_profile(v, sim.data.rainfall, d);
        const Eigen::Index n = sim.data.n(), k = d.cols();

        RngStream rng(3102);
        const int B = 4000;
        Eigen::MatrixXd draws(B, k);
        for (int b = 0; b < B; ++b) {
            const double sigma2 =
                rng.inv_gamma(0.5 * double(n - k), 0.5 * gls.s2);
            Eigen::VectorXd eta(k);
            for (Eigen::Index j = 0; j < k; ++j) eta[j] = rng.normal(0.0, 1.0);
            draws.row(b) =
                (gls.beta_hat + std::sqrt(sigma2) *
                                    gls.r_factor.triangularView<Eigen::Upper>().solve(eta))
                    .transpose();
        }
        for (Eigen::Index j = 0; j < k; ++j) {
            const double m = draws.col(j).mean();
            const double sd = sample_sd(draws.col(j));
            const double mcse = sd / std::sqrt(double(B));
            if (std::abs(m - gls.beta_hat[j]) >= 3.0 * mcse) {
                std::fprintf(stderr, "  [3] beta_%ld off: %.4g vs %.4g (mcse %.4g)\n",
                             long(j), m, gls.beta_hat[j], mcse);
                ok = false;
            }
        }
    }

    // (b) MH long-run frequencies on a 3x3 grid match the exact normalized
    // grid posterior
    {
        const auto sim = simulate_spatial(8, 3, 100.0, beta, 4.0, 20.0, 3.0, 0.0,
                                          2.5, 3201);
        const Eigen::MatrixXd dist = pairwise_dist(sim.data);
        const Eigen::MatrixXd d = build_trend(sim.data);
        PsiGrid grid;
        grid.phi = {10.0, 20.0, 40.0};
        grid.gamma2 = {2.5, 3.0, 3.5};

        double logp[9];
        double mx = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                logp[i * 3 + j] = log_post_psi(grid.phi[static_cast<std::size_t>(i)],
                                               grid.gamma2[static_cast<std::size_t>(j)],
                                               dist, sim.data.rainfall, d);
                mx = std::max(mx, logp[i * 3 + j]);
            }
        double z = 0.0;
        for (double& lp : logp) {
            lp = std::exp(lp - mx);
            z += lp;
        }
        for (double& lp : logp) lp /= z;

        RngStream rng(3202);
        PsiState st;
        GlsResult gls;
        for (int it = 0; it < 500; ++it)
            block_mh_step(st, grid, dist, sim.data.rainfall, d, 2.5, rng, gls);
        const int batches = 30, batch_len = 500;
        Eigen::MatrixXd freq = Eigen::MatrixXd::Zero(batches, 9);
        for (int b = 0; b < batches; ++b) {
            for (int it = 0; it < batch_len; ++it) {
                block_mh_step(st, grid, dist, sim.data.rainfall, d, 2.5, rng, gls);
                freq(b, st.phi_idx * 3 + st.gamma2_idx) += 1.0 / batch_len;
            }
        }
        for (int c = 0; c < 9; ++c) {
            const double m = freq.col(c).mean();
            const double se = sample_sd(freq.col(c)) / std::sqrt(double(batches));
            if (std::abs(m - logp[c]) >= std::max(3.0 * se, 0.01)) {
                std::fprintf(stderr, "  [3] cell %d: freq %.4f vs exact %.4f (se %.4f)\n",
                             c, m, logp[c], se);
                ok = false;
            }
        }
    }

    // (c) noiseless interpolation at a duplicated site reproduces the
    // observed value
    {
        // hand-placed distinct observed points with a detrended response;
        // the final (missing) record duplicates the first one exactly, and
        // with zero nugget the kriging weights collapse to that record
        const int n = 6;
        const double px[] = {3.0, 40.0, 71.0, 18.0, 55.0, 90.0, 3.0};
        const double py[] = {7.0, 61.0, 12.0, 88.0, 33.0, 74.0, 7.0};
        RngStream gen(3301);
        Eigen::MatrixXd dist(n + 1, n + 1);
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j)
                dist(i, j) = std::hypot(px[i] - px[j], py[i] - py[j]);
        const Eigen::MatrixXd v = assemble_v(dist, 20.0, 0.0); // no nugget
        Eigen::VectorXd resid(n + 1);
        {
            // draw the observed residual field from the noiseless process
            const Eigen::MatrixXd v_oo = v.topLeftCorner(n, n);
            Eigen::VectorXd eta(n);
            for (int i = 0; i < n; ++i) eta[i] = gen.normal(0.0, 1.0);
            resid.head(n) =
                Eigen::LLT<Eigen::MatrixXd>(4.0 * v_oo).matrixL() * eta;
            resid[n] = std::numeric_limits<double>::quiet_NaN();
        }
        const Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n + 1, 1);
        const Eigen::VectorXd b0 = Eigen::VectorXd::Zero(1);
        std::vector<int> obs_idx, mis_idx;
        for (int i = 0; i < n; ++i) obs_idx.push_back(i);
        mis_idx.push_back(n);
        RngStream rng(3302);
        const Eigen::VectorXd imp =
            impute_missing(b0, 4.0, v, d, resid, obs_idx, mis_idx, rng);
        std::fprintf(stderr, "  [3] duplicate-site gap %.2e\n",
                     std::abs(imp[0] - resid[0]));
        ok = ok && std::abs(imp[0] - resid[0]) < 1e-6;
    }

    // (d) 95% predictive coverage of a held-out record
    {
        int covered = 0;
        for (int rep = 0; rep < 20; ++rep) {
            auto sim = simulate_spatial(12, 3, 100.0, beta, 4.0, 20.0, 3.0, 0.0,
                                        2.5, 3400 + static_cast<std::uint64_t>(rep));
            const Eigen::Index hold = 5;
            const double truth = sim.data.rainfall[hold];
            sim.data.rainfall[hold] = std::numeric_limits<double>::quiet_NaN();
            SpatialOptions opts;
            opts.burn_in = 300;
            opts.iters = 600;
            opts.seed = 3500 + static_cast<std::uint64_t>(rep);
            const auto chain = spatial_run(sim.data, opts);
            const int c = chain.column_index("xmis_1");
            std::vector<double> col(chain.draws.col(c).data(),
                                    chain.draws.col(c).data() + chain.rows());
            const double lo = quantile(col, 0.025);
            const double hi = quantile(col, 0.975);
            if (truth >= lo && truth <= hi) ++covered;
        }
        std::fprintf(stderr, "  [3] held-out coverage %d/20\n", covered);
        ok = ok && covered >= 18;
    }

    // (e) full run at n = 200 stays under the time budget
    {
        const auto t1 = Clock::now();
        const auto sim = simulate_spatial(50, 4, 100.0, beta, 4.0, 20.0, 3.0, 0.1,
                                          2.5, 3601);
        SpatialOptions opts;
        opts.seed = 3602;
        const auto chain = spatial_run(sim.data, opts);
        const double el = seconds_since(t1);
        std::fprintf(stderr, "  [3] n=200 run: %ld kept rows in %.1f s\n",
                     long(chain.rows()), el);
        ok = ok && chain.rows() == 1000 && el < 300.0;
    }

    std::fprintf(stderr, "  [3] total %.1f s\n", seconds_since(t0));
    return ok;
}

// ------------------------------------------------------------------ 4

bool criterion_mtd() {
    const auto t0 = Clock::now();
    bool ok = true;
    RngStream rng(4101);

    // (a) reconstructed transition arrays are row stochastic
    for (int rep = 0; rep < 1000; ++rep) {
        MTDParams p;
        p.lambda = rng.dirichlet({1.0, 1.0});
        p.Q.resize(3, 3);
        for (int i = 0; i < 3; ++i) {
            const auto row = rng.dirichlet({1.0, 1.0, 1.0});
            for (int j = 0; j < 3; ++j) p.Q(i, j) = row[static_cast<std::size_t>(j)];
        }
        const Eigen::MatrixXd P = reconstruct_P(p);
        for (Eigen::Index r = 0; r < P.rows(); ++r)
            if (std::abs(P.row(r).sum() - 1.0) > 1e-12) ok = false;
    }

    // (b) power-iteration stationary law matches an eigen oracle
    for (int rep = 0; rep < 20; ++rep) {
        MTDParams p;
        p.lambda = rng.dirichlet({2.0, 2.0});
        p.Q.resize(3, 3);
        for (int i = 0; i < 3; ++i) {
            const auto row = rng.dirichlet({2.0, 2.0, 2.0});
            for (int j = 0; j < 3; ++j) p.Q(i, j) = row[static_cast<std::size_t>(j)];
        }
        const Eigen::MatrixXd P = reconstruct_P(p);
        const Eigen::VectorXd pi = stationary(P, 3, 2);
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(9, 9);
        for (int i2 = 0; i2 < 3; ++i2)
            for (int i1 = 0; i1 < 3; ++i1)
                for (int i0 = 0; i0 < 3; ++i0)
                    T(i1 + 3 * i2, i0 + 3 * i1) = P(i1 + 3 * i2, i0);
        Eigen::EigenSolver<Eigen::MatrixXd> es(T.transpose());
        int best = 0;
        for (int i = 1; i < 9; ++i)
            if (std::abs(es.eigenvalues()[i].real() - 1.0) <
                std::abs(es.eigenvalues()[best].real() - 1.0))
                best = i;
        Eigen::VectorXd v = es.eigenvectors().col(best).real();
        v /= v.sum();
        if ((pi - v).cwiseAbs().maxCoeff() >= 1e-10) ok = false;
    }

    // (c) order selection recovers the true second order
    {
        MTDParams truth;
        truth.lambda = {0.2, 0.8};
        truth.Q = Eigen::MatrixXd::Constant(3, 3, 0.05);
        truth.Q.diagonal().setConstant(0.9);
        int hits = 0;
        for (int rep = 0; rep < 10; ++rep) {
            auto sim = simulate_mtd(truth, 503, 4200 + static_cast<std::uint64_t>(rep));
            sim.data.lmax = 3;
            const auto report = order_probs(sim.data, 3, 300, {}, 300,
                                            4300 + static_cast<std::uint64_t>(rep));
            if (report.modal_order == 2) ++hits;
        }
        std::fprintf(stderr, "  [4] modal order 2 in %d/10 chains\n", hits);
        ok = ok && hits >= 8;
    }

    // (d) predictive-loss arithmetic: draws {a-s, a, a+s} have sample
    // variance exactly s^2, so penalty and fit can be dialed in exactly
    {
        auto check_row = [&](double pen, double fit, double d1, double dinf) {
            const double s = std::sqrt(pen);
            const double a = 10.0;
            Eigen::MatrixXd draws(1, 3);
            draws << a - s, a, a + s;
            const std::vector<double> obs{a + std::sqrt(fit)};
            const PplResult r1 = ppl(draws, obs, 1.0);
            const PplResult rinf =
                ppl(draws, obs, std::numeric_limits<double>::infinity());
            const bool good = std::abs(r1.penalty - pen) < 1e-9 &&
                              std::abs(r1.fit - fit) < 1e-9 &&
                              std::abs(r1.d_r - d1) < 1e-9 &&
                              std::abs(rinf.d_r - dinf) < 1e-9;
            std::fprintf(stderr,
                         "  [4] ppl P=%.2f G=%.2f -> D1=%.4f (want %.2f) Dinf=%.4f (want %.2f)\n",
                         r1.penalty, r1.fit, r1.d_r, d1, rinf.d_r, dinf);
            return good;
        };
        ok = ok && check_row(21.46, 20.88, 31.90, 42.34);
        ok = ok && check_row(23.21, 20.38, 33.40, 43.59);
    }

    const double el = seconds_since(t0);
    std::fprintf(stderr, "  [4] total %.1f s\n", el);
    return ok && el < 120.0;
}

// ------------------------------------------------------------------ 5

bool criterion_vi() {
    const auto t0 = Clock::now();
    bool ok = true;
    const auto y = load_galaxies();
    const auto std_y = standardize(y);
    const DpmmHyper h;

    for (int k = 1; k <= 20; ++k) {
        const auto [p, trace] = vi_fit(std_y.z, h, k);
        bool mono = true;
        for (std::size_t i = 1; i < trace.elbo.size(); ++i)
            if (trace.elbo[i] - trace.elbo[i - 1] < -1e-8) mono = false;
        if (!mono || !trace.converged || trace.iterations > 200) {
            std::fprintf(stderr, "  [5] k=%d: converged=%d iters=%d monotone=%d\n", k,
                         int(trace.converged), trace.iterations, int(mono));
            ok = false;
        }
        if (k == 3) {
            const double bound =
                trace.elbo.back() - double(std_y.z.size()) * std::log(std_y.sd);
            const auto w = expected_weights(p.gamma, h.truncation);
            double wsum = 0.0;
            for (double v : w) wsum += v;
            std::vector<double> grid;
            for (double x = -10.0; x <= 10.0 + 1e-9; x += 0.01) grid.push_back(x);
            const auto dens = predictive_density(p, h, grid);
            double integral = 0.0;
            for (std::size_t i = 1; i < grid.size(); ++i)
                integral += 0.5 * (dens[i] + dens[i - 1]) * (grid[i] - grid[i - 1]);
            std::fprintf(stderr,
                         "  [5] k=3: %d iters, data-scale bound %.1f, weight sum %.2e off, "
                         "integral %.6f\n",
                         trace.iterations, bound, std::abs(wsum - 1.0), integral);
            ok = ok && trace.iterations <= 50 && bound >= -290.0 && bound <= -235.0 &&
                 std::abs(wsum - 1.0) <= 1e-12 && std::abs(integral - 1.0) <= 1e-3;
        }
    }

    const double el = seconds_since(t0);
    std::fprintf(stderr, "  [5] total %.2f s\n", el);
    return ok && el < 10.0;
}

// ------------------------------------------------------------------ 6

bool criterion_vi_vs_cgs() {
    const auto t0 = Clock::now();
    bool ok = true;
    const auto y = load_galaxies();
    const auto z = standardize(y).z;
    const DpmmHyper h;

    // the 20-start scenario lands in a hard-assignment optimum whose density
    // is directly comparable to the sampler's; the 3-start run merges the
    // central clusters into one broad component
    std::vector<double> grid;
    for (double x = -3.0; x <= 3.0 + 1e-9; x += 0.01) grid.push_back(x);

    // wall time covers each method's full route to a predictive density:
    // fit plus density evaluation
    const auto tv = Clock::now();
    const auto [p, trace] = vi_fit(z, h, 20);
    const auto f_vi = predictive_density(p, h, grid);
    const double vi_wall = seconds_since(tv);

    const auto tc = Clock::now();
    const auto draws = cgs_run(z, h, 1000, 10000, 6101);
    const auto f_cgs = cgs_predictive(draws, z, h, grid);
    const double cgs_wall = seconds_since(tc);
    double l1 = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i)
        l1 += 0.5 * (std::abs(f_vi[i] - f_cgs[i]) + std::abs(f_vi[i - 1] - f_cgs[i - 1])) *
              (grid[i] - grid[i - 1]);
    std::fprintf(stderr, "  [6] predictive L1 %.4f; VI %.4f s vs CGS %.2f s\n", l1,
                 vi_wall, cgs_wall);
    ok = ok && l1 <= 0.2;
    ok = ok && vi_wall <= cgs_wall / 50.0;

    const Eigen::MatrixXd inc_vi = vi_incidence(p);
    const Eigen::MatrixXd inc_cgs = incidence(draws.assignments);
    auto symmetric_unit_diag = [](const Eigen::MatrixXd& m) {
        if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            if (m(i, i) != 1.0) return false;
        return true;
    };
    ok = ok && symmetric_unit_diag(inc_vi) && symmetric_unit_diag(inc_cgs);

    const double el = seconds_since(t0);
    std::fprintf(stderr, "  [6] total %.1f s\n", el);
    return ok && el < 900.0;
}

// ------------------------------------------------------------------ 7

bool run_cli(const std::string& args) {
    const std::string cmd = std::string(BAYES_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// run the same command into two fresh directories and byte-compare every
// output except the manifest (whose wall-clock timings legitimately differ)
bool rerun_identical(const std::string& name, const std::string& args_sans_out) {
    const fs::path a = fs::temp_directory_path() / ("bayes_acc_" + name + "_a");
    const fs::path b = fs::temp_directory_path() / ("bayes_acc_" + name + "_b");
    fs::remove_all(a);
    fs::remove_all(b);
    if (!run_cli(args_sans_out + " --out " + a.string()) ||
        !run_cli(args_sans_out + " --out " + b.string())) {
        std::fprintf(stderr, "  [7] %s: command failed\n", name.c_str());
        return false;
    }
    int compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        const std::string f = e.path().filename().string();
        if (f == "manifest.json") continue;
        if (!fs::exists(b / f) || slurp(a / f) != slurp(b / f)) {
            std::fprintf(stderr, "  [7] %s: %s differs between reruns\n", name.c_str(),
                         f.c_str());
            return false;
        }
        ++compared;
    }
    std::fprintf(stderr, "  [7] %s: %d files byte-identical\n", name.c_str(), compared);
    return compared >= 1;
}

bool criterion_determinism() {
    const auto t0 = Clock::now();
    const std::string galaxies = std::string(BAYES_DATA_DIR) + "/galaxies.csv";
    const fs::path tmp = fs::temp_directory_path();
    bool ok = true;

    // simulate covers all three generators; its outputs feed the fitters
    ok = ok && rerun_identical(
                   "sim_hier",
                   "simulate --model hier --seed 71 --groups 3 --devices 4 --records 5");
    ok = ok && rerun_identical("sim_spatial",
                               "simulate --model spatial --seed 72 --sites 8 --years 3");
    ok = ok && rerun_identical(
                   "sim_mtd",
                   "simulate --model mtd --seed 73 --length 150 --lambda 0.3,0.7 --q "
                   "'0.8,0.1,0.1;0.1,0.8,0.1;0.1,0.1,0.8'");

    const fs::path hier_in = tmp / "bayes_acc_sim_hier_a" / "data.csv";
    const fs::path spatial_in = tmp / "bayes_acc_sim_spatial_a" / "data.csv";
    const fs::path mtd_in = tmp / "bayes_acc_sim_mtd_a" / "data.csv";

    ok = ok && rerun_identical("hier", "hier --input " + hier_in.string() +
                                           " --seed 74 --burn-in 50 --iters 100 --thin 1");
    ok = ok && rerun_identical("spatial",
                               "spatial --input " + spatial_in.string() +
                                   " --seed 75 --burn-in 50 --iters 100");
    ok = ok && rerun_identical("mtd", "mtd --input " + mtd_in.string() +
                                          " --states --seed 76 --burn-in 50 --iters 100 "
                                          "--order-max 2");
    ok = ok && rerun_identical("dpmm_vi", "dpmm-vi --input " + galaxies +
                                              " --seed 77 --init-clusters 3");
    ok = ok && rerun_identical("dpmm_cgs", "dpmm-cgs --input " + galaxies +
                                               " --seed 78 --burn-in 50 --iters 100");

    std::fprintf(stderr, "  [7] total %.1f s\n", seconds_since(t0));
    return ok;
}

} // namespace

int main() {
    struct Criterion {
        const char* label;
        bool (*fn)();
    };
    const Criterion criteria[] = {
        {"criterion 1 (conjugate closed forms)", criterion_conjugate},
        {"criterion 2 (hierarchical sampler calibration)", criterion_hier},
        {"criterion 3 (spatial sampler against closed forms)", criterion_spatial},
        {"criterion 4 (mixture-transition chain)", criterion_mtd},
        {"criterion 5 (variational mixture on galaxies)", criterion_vi},
        {"criterion 6 (variational vs collapsed-Gibbs agreement)", criterion_vi_vs_cgs},
        {"criterion 7 (seeded rerun determinism)", criterion_determinism},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        bool pass = false;
        try {
            pass = c.fn();
        } catch (const std::exception& e) {
            std::fprintf(stderr, "  %s threw: %s\n", c.label, e.what());
        }
        std::printf("%s: %s\n", c.label, pass ? "PASS" : "FAIL");
        std::fflush(stdout);
        if (!pass) ++failures;
    }
    return failures;
}
