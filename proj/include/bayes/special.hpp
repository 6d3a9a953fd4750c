#ifndef BAYES_SPECIAL_HPP
#define BAYES_SPECIAL_HPP

#include <vector>

#include "bayes/errors.hpp"

namespace bayes {

/// Digamma function psi(x) for x > 0. Absolute error below 1e-12 on
/// [1e-3, 1e6] (recurrence up to x >= 10, then the asymptotic series).
double digamma(double x);

/// log Gamma(x) for x > 0 (thin wrapper kept for symmetry with digamma).
double log_gamma(double x);

/// log Beta(a, b).
double log_beta(double a, double b);

/// Beta-Bernoulli conjugate update. improper is set when either posterior
/// parameter is zero (Haldane prior with one-sided data).
struct BetaBernoulliPosterior {
    double a;
    double b;
    bool improper;
};
BetaBernoulliPosterior beta_bernoulli_posterior(double a, double b,
                                                const std::vector<int>& xs);

/// Normal likelihood with known variance, Normal prior on the mean.
struct NormalNormalPosterior {
    double mean;
    double variance;
};
NormalNormalPosterior normal_normal_posterior(double mu, double tau2, double sigma2,
                                              const std::vector<double>& xs);

/// Stable log(sum(exp(x))) over a nonempty range.
double log_sum_exp(const std::vector<double>& x);

} // namespace bayes

#endif
