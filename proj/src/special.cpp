#include "bayes/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bayes {

double digamma(double x) {
    if (!(x > 0.0)) throw parameter_error("digamma: x must be positive");
    double result = 0.0;
    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    // Asymptotic expansion with Bernoulli coefficients through B_12.
    const double f = 1.0 / (x * x);
    double series = f * (1.0 / 12.0
                  - f * (1.0 / 120.0
                  - f * (1.0 / 252.0
                  - f * (1.0 / 240.0
                  - f * (1.0 / 132.0
                  - f * (691.0 / 32760.0
                  - f * (1.0 / 12.0)))))));
    return result + std::log(x) - 0.5 / x - series;
}

double log_gamma(double x) {
    if (!(x > 0.0)) throw parameter_error("log_gamma: x must be positive");
    return std::lgamma(x);
}

double log_beta(double a, double b) {
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

BetaBernoulliPosterior beta_bernoulli_posterior(double a, double b,
                                                const std::vector<int>& xs) {
    if (a < 0.0 || b < 0.0)
        throw parameter_error("beta_bernoulli_posterior: a, b must be >= 0");
    double successes = 0.0;
    for (int x : xs) {
        if (x != 0 && x != 1)
            throw data_error("beta_bernoulli_posterior: observations must be 0/1");
        successes += x;
    }
    const double n = static_cast<double>(xs.size());
    BetaBernoulliPosterior post{a + successes, b + (n - successes), false};
    post.improper = (post.a == 0.0 || post.b == 0.0);
    return post;
}

NormalNormalPosterior normal_normal_posterior(double mu, double tau2, double sigma2,
                                              const std::vector<double>& xs) {
    if (!(tau2 > 0.0) || !(sigma2 > 0.0))
        throw parameter_error("normal_normal_posterior: variances must be positive");
    if (xs.empty())
        throw data_error("normal_normal_posterior: empty sample");
    const double n = static_cast<double>(xs.size());
    double xbar = 0.0;
    for (double x : xs) xbar += x;
    xbar /= n;
    const double shrink = sigma2 / (n * tau2 + sigma2);
    return {shrink * mu + (1.0 - shrink) * xbar, (1.0 - shrink) * sigma2 / n};
}

double log_sum_exp(const std::vector<double>& x) {
    if (x.empty()) throw data_error("log_sum_exp: empty input");
    double m = *std::max_element(x.begin(), x.end());
    if (m == -std::numeric_limits<double>::infinity()) return m;
    double s = 0.0;
    for (double v : x) s += std::exp(v - m);
    return m + std::log(s);
}

} // namespace bayes
