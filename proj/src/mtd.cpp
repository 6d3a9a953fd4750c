#include "bayes/mtd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bayes/special.hpp"

namespace bayes {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int pow_int(int base, int exp) {
    int r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

} // namespace

void ChainData::validate() const {
    if (m < 2) throw data_error("mtd: need at least two states");
    if (lmax < 1) throw data_error("mtd: lmax must be >= 1");
    if (effective_length() < 1)
        throw data_error("mtd: sequence must extend past the conditioned prefix");
    for (int s : x)
        if (s < 1 || s > m) throw data_error("mtd: state out of range");
}

ChainData encode_changes(const std::vector<double>& rates, int lmax) {
    if (rates.size() < 2) throw data_error("encode_changes: need at least two values");
    ChainData data;
    data.m = 3;
    data.lmax = lmax;
    data.x.reserve(rates.size() - 1);
    for (std::size_t t = 1; t < rates.size(); ++t) {
        const double d = rates[t] - rates[t - 1];
        data.x.push_back(d < 0.0 ? 1 : (d > 0.0 ? 3 : 2));
    }
    return data;
}

double mtd_loglik(const MTDParams& params, const ChainData& data) {
    const int ell = params.order();
    if (ell > data.lmax) throw parameter_error("mtd_loglik: order exceeds lmax");
    double total = 0.0;
    const int T = static_cast<int>(data.x.size());
    for (int t = data.lmax; t < T; ++t) {
        double inner = 0.0;
        for (int g = 1; g <= ell; ++g)
            inner += params.lambda[static_cast<std::size_t>(g - 1)] *
                     params.Q(data.x[static_cast<std::size_t>(t - g)] - 1,
                              data.x[static_cast<std::size_t>(t)] - 1);
        if (inner <= 0.0) return kNegInf;
        total += std::log(inner);
    }
    return total;
}

void mtd_gibbs_sweep(MTDParams& params, std::vector<int>& latents, const ChainData& data,
                     const MTDPriors& priors, RngStream& rng) {
    const int ell = params.order();
    const int m = data.m;
    const int T = static_cast<int>(data.x.size());
    const int N = T - data.lmax;
    if (static_cast<int>(latents.size()) != N)
        throw parameter_error("mtd_gibbs_sweep: latent vector length mismatch");

    // (1) latent lags
    std::vector<double> weights(static_cast<std::size_t>(ell));
    for (int t = data.lmax; t < T; ++t) {
        for (int g = 1; g <= ell; ++g)
            weights[static_cast<std::size_t>(g - 1)] =
                params.lambda[static_cast<std::size_t>(g - 1)] *
                params.Q(data.x[static_cast<std::size_t>(t - g)] - 1,
                         data.x[static_cast<std::size_t>(t)] - 1);
        latents[static_cast<std::size_t>(t - data.lmax)] =
            rng.categorical(weights.data(), ell) + 1;
    }

    // (2) lambda | w
    std::vector<double> conc(static_cast<std::size_t>(ell), 0.5);
    if (!priors.b.empty()) {
        if (static_cast<int>(priors.b.size()) != ell)
            throw parameter_error("mtd_gibbs_sweep: lambda prior length mismatch");
        conc = priors.b;
    }
    for (int w : latents) conc[static_cast<std::size_t>(w - 1)] += 1.0;
    params.lambda = rng.dirichlet(conc);

    // (3) Q rows | w
    Eigen::MatrixXd counts;
    if (priors.A.size() == 0) {
        counts = Eigen::MatrixXd::Constant(m, m, 0.5);
    } else {
        if (priors.A.rows() != m || priors.A.cols() != m)
            throw parameter_error("mtd_gibbs_sweep: Q prior shape mismatch");
        counts = priors.A;
    }
    for (int t = data.lmax; t < T; ++t) {
        const int w = latents[static_cast<std::size_t>(t - data.lmax)];
        counts(data.x[static_cast<std::size_t>(t - w)] - 1,
               data.x[static_cast<std::size_t>(t)] - 1) += 1.0;
    }
    for (int i = 0; i < m; ++i) {
        std::vector<double> row(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) row[static_cast<std::size_t>(j)] = counts(i, j);
        const auto draw = rng.dirichlet(row);
        for (int j = 0; j < m; ++j) params.Q(i, j) = draw[static_cast<std::size_t>(j)];
    }
}

MTDFit mtd_fit(const ChainData& data, int order, const MTDPriors& priors,
               std::uint64_t burn_in, std::uint64_t kept, RngStream& rng) {
    data.validate();
    if (order < 1 || order > data.lmax)
        throw parameter_error("mtd_fit: order must lie in [1, lmax]");

    MTDParams params;
    params.lambda.assign(static_cast<std::size_t>(order), 1.0 / order);
    params.Q = Eigen::MatrixXd::Constant(data.m, data.m, 1.0 / data.m);
    std::vector<int> latents(static_cast<std::size_t>(data.effective_length()), 1);

    MTDFit fit;
    fit.draws.reserve(kept);
    fit.logliks.reserve(kept);
    for (std::uint64_t it = 0; it < burn_in; ++it)
        mtd_gibbs_sweep(params, latents, data, priors, rng);
    for (std::uint64_t it = 0; it < kept; ++it) {
        mtd_gibbs_sweep(params, latents, data, priors, rng);
        fit.draws.push_back(params);
        fit.logliks.push_back(mtd_loglik(params, data));
    }
    return fit;
}

OrderReport order_probs(const ChainData& data, int max_order, std::uint64_t draws_per_order,
                        const std::vector<double>& order_prior, std::uint64_t burn_in,
                        std::uint64_t seed) {
    data.validate();
    if (max_order < 1 || max_order > data.lmax)
        throw parameter_error("order_probs: max order must lie in [1, lmax]");
    if (draws_per_order < 10)
        throw parameter_error("order_probs: need at least 10 draws per order");
    std::vector<double> prior = order_prior;
    if (prior.empty()) prior.assign(static_cast<std::size_t>(max_order), 1.0);
    if (static_cast<int>(prior.size()) != max_order)
        throw parameter_error("order_probs: prior length mismatch");

    OrderReport report;
    std::vector<double> log_score(static_cast<std::size_t>(max_order));
    for (int ell = 1; ell <= max_order; ++ell) {
        RngStream rng(seed + static_cast<std::uint64_t>(ell));
        MTDPriors priors;
        const MTDFit fit = mtd_fit(data, ell, priors, burn_in, draws_per_order, rng);
        double mean_ll = 0.0;
        for (double v : fit.logliks) mean_ll += v;
        mean_ll /= static_cast<double>(fit.logliks.size());
        report.mean_log_posterior_likelihood.push_back(mean_ll);
        // log of the Monte Carlo likelihood average, plus the order prior
        log_score[static_cast<std::size_t>(ell - 1)] =
            log_sum_exp(fit.logliks) - std::log(static_cast<double>(fit.logliks.size())) +
            std::log(prior[static_cast<std::size_t>(ell - 1)]);
    }
    const double norm = log_sum_exp(log_score);
    report.posterior_probability.resize(static_cast<std::size_t>(max_order));
    double best = kNegInf;
    for (int ell = 1; ell <= max_order; ++ell) {
        const double p = std::exp(log_score[static_cast<std::size_t>(ell - 1)] - norm);
        report.posterior_probability[static_cast<std::size_t>(ell - 1)] = p;
        if (p > best) { // strict: ties resolve toward the lower order
            best = p;
            report.modal_order = ell;
        }
    }
    return report;
}

Eigen::MatrixXd reconstruct_P(const MTDParams& params) {
    const int ell = params.order();
    const int m = static_cast<int>(params.Q.rows());
    const int rows = pow_int(m, ell);
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(rows, m);
    for (int r = 0; r < rows; ++r) {
        // decode tuple: digit with weight m^{g-1} is the lag-g state
        for (int g = 1; g <= ell; ++g) {
            const int ig = (r / pow_int(m, g - 1)) % m; // 0-based
            for (int j = 0; j < m; ++j)
                P(r, j) += params.lambda[static_cast<std::size_t>(g - 1)] * params.Q(ig, j);
        }
    }
    return P;
}

Eigen::VectorXd stationary(const Eigen::MatrixXd& P, int m, int order, double tol,
                           int max_iter) {
    const int rows = pow_int(m, order);
    if (P.rows() != rows || P.cols() != m)
        throw parameter_error("stationary: transition array shape mismatch");
    const int shift = pow_int(m, order - 1);
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(rows, 1.0 / rows);
    Eigen::VectorXd next(rows);
    for (int it = 0; it < max_iter; ++it) {
        next.setZero();
        for (int r = 0; r < rows; ++r) {
            const int base = (r % shift) * m;
            for (int j = 0; j < m; ++j) next(base + j) += pi(r) * P(r, j);
        }
        next /= next.sum();
        const double delta = (next - pi).cwiseAbs().maxCoeff();
        pi = next;
        if (delta < tol) return pi;
    }
    throw convergence_error("stationary: power iteration did not converge");
}

std::vector<Eigen::MatrixXd> fit_full_markov(const ChainData& data, int order,
                                             std::uint64_t draws, RngStream& rng,
                                             double prior_conc) {
    data.validate();
    if (order < 1 || order > data.lmax)
        throw parameter_error("fit_full_markov: order must lie in [1, lmax]");
    const int m = data.m;
    const int rows = pow_int(m, order);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Constant(rows, m, prior_conc);
    const int T = static_cast<int>(data.x.size());
    for (int t = data.lmax; t < T; ++t) {
        int r = 0;
        for (int g = 1; g <= order; ++g)
            r += (data.x[static_cast<std::size_t>(t - g)] - 1) * pow_int(m, g - 1);
        counts(r, data.x[static_cast<std::size_t>(t)] - 1) += 1.0;
    }
    std::vector<Eigen::MatrixXd> out;
    out.reserve(draws);
    for (std::uint64_t k = 0; k < draws; ++k) {
        Eigen::MatrixXd P(rows, m);
        for (int r = 0; r < rows; ++r) {
            std::vector<double> conc(static_cast<std::size_t>(m));
            for (int j = 0; j < m; ++j) conc[static_cast<std::size_t>(j)] = counts(r, j);
            const auto row = rng.dirichlet(conc);
            for (int j = 0; j < m; ++j) P(r, j) = row[static_cast<std::size_t>(j)];
        }
        out.push_back(std::move(P));
    }
    return out;
}

PplResult ppl(const Eigen::MatrixXd& pred_draws, const std::vector<double>& observed,
              double r) {
    const Eigen::Index T = pred_draws.rows();
    const Eigen::Index B = pred_draws.cols();
    if (T == 0 || B == 0) throw data_error("ppl: empty predictive draws");
    if (static_cast<Eigen::Index>(observed.size()) != T)
        throw data_error("ppl: observation length mismatch");
    double penalty = 0.0;
    double fit = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
        const double mean = pred_draws.row(t).mean();
        double var = 0.0;
        if (B > 1) {
            for (Eigen::Index j = 0; j < B; ++j) {
                const double d = pred_draws(t, j) - mean;
                var += d * d;
            }
            var /= static_cast<double>(B - 1);
        }
        penalty += var;
        const double e = observed[static_cast<std::size_t>(t)] - mean;
        fit += e * e;
    }
    const double weight = std::isinf(r) ? 1.0 : r / (r + 1.0);
    return {penalty, fit, penalty + weight * fit};
}

Eigen::MatrixXd mtd_predictive_draws(const MTDFit& fit, const ChainData& data,
                                     RngStream& rng) {
    const int T = static_cast<int>(data.x.size());
    const int N = T - data.lmax;
    const Eigen::Index B = static_cast<Eigen::Index>(fit.draws.size());
    Eigen::MatrixXd out(N, B);
    std::vector<double> probs(static_cast<std::size_t>(data.m));
    for (Eigen::Index j = 0; j < B; ++j) {
        const MTDParams& p = fit.draws[static_cast<std::size_t>(j)];
        const int ell = p.order();
        for (int t = data.lmax; t < T; ++t) {
            for (int s = 0; s < data.m; ++s) {
                double v = 0.0;
                for (int g = 1; g <= ell; ++g)
                    v += p.lambda[static_cast<std::size_t>(g - 1)] *
                         p.Q(data.x[static_cast<std::size_t>(t - g)] - 1, s);
                probs[static_cast<std::size_t>(s)] = v;
            }
            out(t - data.lmax, j) = rng.categorical(probs.data(), data.m) + 1;
        }
    }
    return out;
}

Eigen::MatrixXd full_markov_predictive_draws(const std::vector<Eigen::MatrixXd>& draws,
                                             const ChainData& data, int order,
                                             RngStream& rng) {
    const int T = static_cast<int>(data.x.size());
    const int N = T - data.lmax;
    const Eigen::Index B = static_cast<Eigen::Index>(draws.size());
    Eigen::MatrixXd out(N, B);
    std::vector<double> probs(static_cast<std::size_t>(data.m));
    for (Eigen::Index j = 0; j < B; ++j) {
        const Eigen::MatrixXd& P = draws[static_cast<std::size_t>(j)];
        for (int t = data.lmax; t < T; ++t) {
            int r = 0;
            for (int g = 1; g <= order; ++g)
                r += (data.x[static_cast<std::size_t>(t - g)] - 1) * pow_int(data.m, g - 1);
            for (int s = 0; s < data.m; ++s) probs[static_cast<std::size_t>(s)] = P(r, s);
            out(t - data.lmax, j) = rng.categorical(probs.data(), data.m) + 1;
        }
    }
    return out;
}

Eigen::MatrixXd forecast(const MTDFit& fit, const ChainData& data, int horizon) {
    if (horizon < 1) throw parameter_error("forecast: horizon must be >= 1");
    if (fit.draws.empty()) throw data_error("forecast: no posterior draws");
    const int m = data.m;
    const int ell = fit.draws.front().order();
    const int rows = pow_int(m, ell);
    const int shift = pow_int(m, ell - 1);
    const int T = static_cast<int>(data.x.size());

    int start = 0;
    for (int g = 1; g <= ell; ++g)
        start += (data.x[static_cast<std::size_t>(T - g)] - 1) * pow_int(m, g - 1);

    Eigen::MatrixXd result = Eigen::MatrixXd::Zero(horizon, m);
    Eigen::VectorXd dist(rows);
    Eigen::VectorXd next(rows);
    for (const MTDParams& p : fit.draws) {
        const Eigen::MatrixXd P = reconstruct_P(p);
        dist.setZero();
        dist(start) = 1.0;
        for (int h = 0; h < horizon; ++h) {
            next.setZero();
            for (int r = 0; r < rows; ++r) {
                if (dist(r) == 0.0) continue;
                const int base = (r % shift) * m;
                for (int j = 0; j < m; ++j) next(base + j) += dist(r) * P(r, j);
            }
            dist = next;
            // marginal over the most recent state (lag-1 digit)
            for (int r = 0; r < rows; ++r) result(h, r % m) += dist(r);
        }
    }
    result /= static_cast<double>(fit.draws.size());
    return result;
}

} // namespace bayes
