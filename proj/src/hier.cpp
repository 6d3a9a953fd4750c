#include "bayes/hier.hpp"

#include <algorithm>
#include <cmath>

namespace bayes {

namespace {

void check_finite(double v, const char* what, int step) {
    if (!std::isfinite(v))
        throw numerical_error(std::string("hier_sweep step ") + std::to_string(step) +
                              ": non-finite " + what);
}

} // namespace

void HierData::validate() const {
    if (y.empty()) throw data_error("hier: no devices");
    if (y.size() != n.size() || y.size() != group.size())
        throw data_error("hier: field lengths disagree");
    if (num_groups < 1) throw data_error("hier: need at least one group");
    std::vector<int> counts(static_cast<std::size_t>(num_groups), 0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (group[i] < 0 || group[i] >= num_groups)
            throw data_error("hier: group index out of range at device " + std::to_string(i));
        if (!(n[i] >= 1.0))
            throw data_error("hier: record count below 1 at device " + std::to_string(i));
        ++counts[static_cast<std::size_t>(group[i])];
    }
    for (int j = 0; j < num_groups; ++j)
        if (counts[static_cast<std::size_t>(j)] == 0)
            throw data_error("hier: empty group " + std::to_string(j + 1));
}

HierState hier_init(const HierData& data, const HierHyper&) {
    data.validate();
    const int J = data.num_groups;
    const std::size_t D = data.num_devices();

    HierState s;
    s.theta.setZero(J);
    s.sigma2_group.setZero(J);
    s.lambda.setOnes(static_cast<Eigen::Index>(D));

    std::vector<int> counts(static_cast<std::size_t>(J), 0);
    for (std::size_t i = 0; i < D; ++i) {
        s.theta(data.group[i]) += data.y[i];
        ++counts[static_cast<std::size_t>(data.group[i])];
    }
    for (int j = 0; j < J; ++j) s.theta(j) /= counts[static_cast<std::size_t>(j)];

    double grand = 0.0;
    for (std::size_t i = 0; i < D; ++i) grand += data.y[i];
    grand /= static_cast<double>(D);

    double pooled = 0.0;
    for (std::size_t i = 0; i < D; ++i) pooled += (data.y[i] - grand) * (data.y[i] - grand);
    pooled = (D > 1) ? pooled / static_cast<double>(D - 1) : 1.0;
    pooled = std::max(pooled, 1e-6);

    for (std::size_t i = 0; i < D; ++i) {
        const double d = data.y[i] - s.theta(data.group[i]);
        s.sigma2_group(data.group[i]) += d * d;
    }
    for (int j = 0; j < J; ++j) {
        const int c = counts[static_cast<std::size_t>(j)];
        s.sigma2_group(j) = (c > 1) ? std::max(s.sigma2_group(j) / (c - 1), 1e-6) : pooled;
    }

    s.mu = grand;
    double tau2 = 0.0;
    if (J > 1) {
        const double tbar = s.theta.mean();
        for (int j = 0; j < J; ++j) tau2 += (s.theta(j) - tbar) * (s.theta(j) - tbar);
        tau2 /= static_cast<double>(J - 1);
    }
    s.tau2 = std::max(tau2, 1e-6);
    s.sigma2 = 1.0;
    return s;
}

void hier_sweep(HierState& state, const HierData& data, const HierHyper& hyper,
                RngStream& rng) {
    const int J = data.num_groups;
    const std::size_t D = data.num_devices();
    const double half_dof = hyper.dof / 2.0;

    // (1) theta_j | rest: precision-weighted Normal, sums over devices i.
    for (int j = 0; j < J; ++j) {
        double prec = 1.0 / state.tau2;
        double wsum = state.mu / state.tau2;
        for (std::size_t i = 0; i < D; ++i) {
            if (data.group[i] != j) continue;
            const double w = data.n[i] * state.lambda(static_cast<Eigen::Index>(i)) /
                             state.sigma2_group(j);
            prec += w;
            wsum += w * data.y[i];
        }
        const double mean = wsum / prec;
        check_finite(mean, "theta mean", 1);
        state.theta(j) = rng.normal(mean, std::sqrt(1.0 / prec));
    }

    // (2) sigma2_j | rest. The IG(alpha+1, alpha*sigma2) linkage prior gives
    // shape alpha + 1 + N_j/2; the literal mode keeps the printed alpha + N_j/2
    // (the same dropped-exponent slip as step 6).
    const double link_shape =
        hyper.paper_literal_sigma2 ? hyper.alpha : hyper.alpha + 1.0;
    for (int j = 0; j < J; ++j) {
        double nj = 0.0;
        double rate = hyper.alpha * state.sigma2;
        for (std::size_t i = 0; i < D; ++i) {
            if (data.group[i] != j) continue;
            nj += 1.0;
            const double d = data.y[i] - state.theta(j);
            rate += 0.5 * data.n[i] * state.lambda(static_cast<Eigen::Index>(i)) * d * d;
        }
        check_finite(rate, "sigma2_j rate", 2);
        state.sigma2_group(j) = rng.inv_gamma(link_shape + nj / 2.0, rate);
    }

    // (3) lambda_ij | rest ~ Gamma((dof+1)/2, dof/2 + n (y-theta)^2 / (2 sigma2_j)).
    for (std::size_t i = 0; i < D; ++i) {
        const int j = data.group[i];
        const double d = data.y[i] - state.theta(j);
        const double rate = half_dof + 0.5 * data.n[i] * d * d / state.sigma2_group(j);
        check_finite(rate, "lambda rate", 3);
        state.lambda(static_cast<Eigen::Index>(i)) = rng.gamma(half_dof + 0.5, rate);
    }

    // (4)+(5) level-2 block. Default flat prior: the partially collapsed pair
    // tau2 | theta ~ IG((J-1)/2, sum (theta - theta_bar)^2 / 2), then
    // mu | tau2, theta ~ N(theta_bar, tau2/J). With a proper prior the plain
    // full conditionals are used instead.
    if (hyper.proper_level2) {
        const ProperLevel2Prior& p = *hyper.proper_level2;
        double ss = 0.0;
        for (int j = 0; j < J; ++j) ss += (state.theta(j) - state.mu) * (state.theta(j) - state.mu);
        state.tau2 = rng.inv_gamma(p.tau2_shape + J / 2.0, p.tau2_rate + 0.5 * ss);
        const double prec = 1.0 / p.mu_var + J / state.tau2;
        const double mean = (p.mu_mean / p.mu_var + state.theta.sum() / state.tau2) / prec;
        check_finite(mean, "mu mean", 4);
        state.mu = rng.normal(mean, std::sqrt(1.0 / prec));
    } else if (J >= 2) {
        const double tbar = state.theta.mean();
        double ss = 0.0;
        for (int j = 0; j < J; ++j) ss += (state.theta(j) - tbar) * (state.theta(j) - tbar);
        if (ss <= 0.0) ss = 1e-300; // degenerate equal-theta corner
        state.tau2 = rng.inv_gamma((J - 1) / 2.0, 0.5 * ss);
        check_finite(state.tau2, "tau2", 5);
        state.mu = rng.normal(tbar, std::sqrt(state.tau2 / J));
    }
    // J == 1 with the flat prior has no proper tau2 conditional; mu and tau2
    // are left at their current values.

    // (6) sigma2 | sigma2_j ~ Gamma. The model-implied shape is
    // a + J(alpha+1); the paper-literal mode keeps shape a.
    double inv_sum = 0.0;
    for (int j = 0; j < J; ++j) inv_sum += 1.0 / state.sigma2_group(j);
    const double shape =
        hyper.paper_literal_sigma2 ? hyper.a : hyper.a + J * (hyper.alpha + 1.0);
    const double rate = hyper.b + hyper.alpha * inv_sum;
    check_finite(rate, "sigma2 rate", 6);
    state.sigma2 = rng.gamma(shape, rate);
}

PosteriorChain hier_run(const HierData& data, const HierHyper& hyper,
                        std::uint64_t burn_in, std::uint64_t iters, std::uint64_t thin,
                        std::uint64_t seed) {
    if (thin == 0 || iters % thin != 0)
        throw parameter_error("hier_run: iters must be divisible by thin");
    data.validate();
    const int J = data.num_groups;
    const std::size_t D = data.num_devices();
    const std::uint64_t kept = iters / thin;

    PosteriorChain chain;
    chain.burn_in = burn_in;
    chain.thin = thin;
    chain.seed = seed;
    for (int j = 0; j < J; ++j) chain.names.push_back("theta_" + std::to_string(j + 1));
    for (int j = 0; j < J; ++j) chain.names.push_back("sigma2_" + std::to_string(j + 1));
    for (std::size_t i = 0; i < D; ++i) chain.names.push_back("lambda_" + std::to_string(i + 1));
    chain.names.push_back("mu");
    chain.names.push_back("tau2");
    chain.names.push_back("sigma2");
    chain.draws.resize(static_cast<Eigen::Index>(kept),
                       static_cast<Eigen::Index>(chain.names.size()));

    RngStream rng(seed);
    HierState state = hier_init(data, hyper);
    for (std::uint64_t it = 0; it < burn_in; ++it) hier_sweep(state, data, hyper, rng);

    Eigen::Index row = 0;
    for (std::uint64_t it = 1; it <= iters; ++it) {
        hier_sweep(state, data, hyper, rng);
        if (it % thin != 0) continue;
        Eigen::Index c = 0;
        for (int j = 0; j < J; ++j) chain.draws(row, c++) = state.theta(j);
        for (int j = 0; j < J; ++j) chain.draws(row, c++) = state.sigma2_group(j);
        for (std::size_t i = 0; i < D; ++i)
            chain.draws(row, c++) = state.lambda(static_cast<Eigen::Index>(i));
        chain.draws(row, c++) = state.mu;
        chain.draws(row, c++) = state.tau2;
        chain.draws(row, c++) = state.sigma2;
        ++row;
    }
    return chain;
}

std::vector<OutlierRecord> detect_outliers(const PosteriorChain& chain,
                                           std::size_t num_devices, double threshold) {
    std::vector<OutlierRecord> flagged;
    for (std::size_t i = 0; i < num_devices; ++i) {
        const int c = chain.column_index("lambda_" + std::to_string(i + 1));
        Eigen::VectorXd col = chain.draws.col(c);
        std::vector<double> vals(col.data(), col.data() + col.size());
        const double mean = col.mean();
        if (mean < threshold)
            flagged.push_back({i, mean, quantile(vals, 0.5)});
    }
    std::sort(flagged.begin(), flagged.end(),
              [](const OutlierRecord& a, const OutlierRecord& b) {
                  return a.lambda_mean < b.lambda_mean;
              });
    return flagged;
}

BayesianPValues bayesian_p_value(const PosteriorChain& chain, const HierData& data,
                                 RngStream& rng, bool force_replicate_equal) {
    if (chain.rows() == 0) throw data_error("bayesian_p_value: empty chain");
    const std::size_t D = data.num_devices();
    const int J = data.num_groups;
    std::vector<int> theta_col(static_cast<std::size_t>(J));
    std::vector<int> sig_col(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
        theta_col[static_cast<std::size_t>(j)] =
            chain.column_index("theta_" + std::to_string(j + 1));
        sig_col[static_cast<std::size_t>(j)] =
            chain.column_index("sigma2_" + std::to_string(j + 1));
    }
    std::vector<int> lam_col(D);
    for (std::size_t i = 0; i < D; ++i)
        lam_col[i] = chain.column_index("lambda_" + std::to_string(i + 1));

    BayesianPValues out;
    out.per_device.assign(D, 0.0);
    const Eigen::Index K = chain.rows();
    for (Eigen::Index k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < D; ++i) {
            const int j = data.group[i];
            const double theta = chain.draws(k, theta_col[static_cast<std::size_t>(j)]);
            const double sig2 = chain.draws(k, sig_col[static_cast<std::size_t>(j)]);
            const double lam = chain.draws(k, lam_col[i]);
            const double sd = std::sqrt(sig2 / (data.n[i] * lam));
            const double z = force_replicate_equal ? data.y[i] : rng.normal(theta, sd);
            if (std::abs(z - theta) >= std::abs(data.y[i] - theta)) out.per_device[i] += 1.0;
        }
    }
    double avg = 0.0;
    for (std::size_t i = 0; i < D; ++i) {
        out.per_device[i] /= static_cast<double>(K);
        avg += out.per_device[i];
    }
    out.average = avg / static_cast<double>(D);
    return out;
}

} // namespace bayes
