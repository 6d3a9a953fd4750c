#ifndef BAYES_MTD_HPP
#define BAYES_MTD_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "bayes/rng.hpp"

namespace bayes {

/// State sequence in {1..m}; the first lmax observations are conditioned on
/// by every competing order so log-likelihoods are comparable.
struct ChainData {
    std::vector<int> x; // states, 1-based
    int m = 0;          // state count
    int lmax = 1;       // largest conditioned-upon prefix

    void validate() const;
    int effective_length() const { return static_cast<int>(x.size()) - lmax; }
};

/// Mixture-transition-distribution parameters: lag weights on the simplex
/// and a single row-stochastic m x m matrix shared by all lags.
struct MTDParams {
    std::vector<double> lambda; // length = order
    Eigen::MatrixXd Q;          // m x m, rows on the simplex

    int order() const { return static_cast<int>(lambda.size()); }
};

struct MTDPriors {
    std::vector<double> b;  // Dirichlet for lambda; empty = Dir(1/2,...)
    Eigen::MatrixXd A;      // Dirichlet rows for Q; empty = 1/2 everywhere
};

/// Map a numeric series to a 3-state chain of consecutive changes:
/// 1 = decrease, 2 = no change, 3 = increase.
ChainData encode_changes(const std::vector<double>& rates, int lmax);

/// Sum over t = lmax+1..end of log sum_g lambda_g Q[x_{t-g}, x_t].
/// Returns -inf when an inner sum is zero.
double mtd_loglik(const MTDParams& params, const ChainData& data);

/// One augmented Gibbs sweep: latent lags w_t, then lambda, then Q rows.
void mtd_gibbs_sweep(MTDParams& params, std::vector<int>& latents, const ChainData& data,
                     const MTDPriors& priors, RngStream& rng);

struct MTDFit {
    std::vector<MTDParams> draws;   // kept posterior draws
    std::vector<double> logliks;    // matching log-likelihoods
};

MTDFit mtd_fit(const ChainData& data, int order, const MTDPriors& priors,
               std::uint64_t burn_in, std::uint64_t kept, RngStream& rng);

struct OrderReport {
    std::vector<double> mean_log_posterior_likelihood; // per order 1..L
    std::vector<double> posterior_probability;         // sums to 1
    int modal_order = 1;                                // ties -> lower order
};

/// Posterior model probabilities over orders 1..L via the Monte Carlo
/// likelihood average, done in log space.
OrderReport order_probs(const ChainData& data, int max_order, std::uint64_t draws_per_order,
                        const std::vector<double>& order_prior, std::uint64_t burn_in,
                        std::uint64_t seed);

/// Full transition array: row (i_l..i_1) lexicographic with i_l most
/// significant, column i_0; entry = sum_g lambda_g Q[i_g, i_0].
Eigen::MatrixXd reconstruct_P(const MTDParams& params);

/// Stationary distribution of the lifted tuple chain by power iteration.
/// P is the m^l x m transition array from reconstruct_P.
Eigen::VectorXd stationary(const Eigen::MatrixXd& P, int m, int order,
                           double tol = 1e-12, int max_iter = 100000);

/// Conjugate Dirichlet(1/2) posterior draws of a fully parameterized
/// order-l transition array (m^l x m per draw).
std::vector<Eigen::MatrixXd> fit_full_markov(const ChainData& data, int order,
                                             std::uint64_t draws, RngStream& rng,
                                             double prior_conc = 0.5);

struct PplResult {
    double penalty;   // P: summed predictive variance
    double fit;       // G: summed squared error of predictive means
    double d_r;       // P + r/(r+1) G (r = infinity gives P + G)
};

/// Gelfand-Ghosh posterior predictive loss on numeric-coded states.
/// pred_draws is (times x draws); observed has one entry per time.
PplResult ppl(const Eigen::MatrixXd& pred_draws, const std::vector<double>& observed,
              double r);

/// One-step-ahead predictive draws for each in-sample time under each
/// posterior draw, for feeding ppl.
Eigen::MatrixXd mtd_predictive_draws(const MTDFit& fit, const ChainData& data,
                                     RngStream& rng);
Eigen::MatrixXd full_markov_predictive_draws(const std::vector<Eigen::MatrixXd>& draws,
                                             const ChainData& data, int order,
                                             RngStream& rng);

/// Forecast state probabilities for H future steps: per posterior draw the
/// exact state distribution is propagated through the lifted chain from the
/// last observed states, then averaged across draws; rows sum to 1.
Eigen::MatrixXd forecast(const MTDFit& fit, const ChainData& data, int horizon);

} // namespace bayes

#endif
