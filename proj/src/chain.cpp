#include "bayes/chain.hpp"

#include <algorithm>
#include <cmath>

namespace bayes {

int PosteriorChain::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    throw data_error("PosteriorChain: no column named " + name);
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw data_error("quantile: empty input");
    if (p < 0.0 || p > 1.0) throw parameter_error("quantile: p outside [0,1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double sample_mean(const Eigen::VectorXd& x) {
    if (x.size() == 0) throw data_error("sample_mean: empty input");
    return x.mean();
}

double sample_sd(const Eigen::VectorXd& x) {
    const Eigen::Index n = x.size();
    if (n < 2) return 0.0;
    const double m = x.mean();
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double d = x(i) - m;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(n - 1));
}

std::vector<PosteriorSummary> summarize(const PosteriorChain& chain) {
    if (chain.rows() == 0 || chain.cols() == 0)
        throw data_error("summarize: empty chain");
    std::vector<PosteriorSummary> out;
    out.reserve(static_cast<std::size_t>(chain.cols()));
    for (Eigen::Index j = 0; j < chain.cols(); ++j) {
        Eigen::VectorXd col = chain.draws.col(j);
        std::vector<double> vals(col.data(), col.data() + col.size());
        PosteriorSummary s;
        s.name = chain.names[static_cast<std::size_t>(j)];
        s.mean = sample_mean(col);
        s.sd = sample_sd(col);
        s.q025 = quantile(vals, 0.025);
        s.q50 = quantile(vals, 0.50);
        s.q975 = quantile(vals, 0.975);
        out.push_back(s);
    }
    return out;
}

double ess(const Eigen::VectorXd& column) {
    const Eigen::Index n = column.size();
    if (n < 10) throw data_error("ess: need at least 10 draws");
    const double m = column.mean();
    Eigen::VectorXd centered = column.array() - m;
    const double gamma0 = centered.squaredNorm() / static_cast<double>(n);
    if (gamma0 == 0.0) throw data_error("ess: constant sequence");

    auto autocov = [&](Eigen::Index k) {
        double s = 0.0;
        for (Eigen::Index t = 0; t + k < n; ++t) s += centered(t) * centered(t + k);
        return s / static_cast<double>(n);
    };

    // tau = -1 + 2 * sum of initial positive pair sums (rho_{2m} + rho_{2m+1}).
    double tau = -1.0;
    for (Eigen::Index m2 = 0; 2 * m2 + 1 < n; ++m2) {
        const double pair = (autocov(2 * m2) + autocov(2 * m2 + 1)) / gamma0;
        if (pair <= 0.0) break;
        tau += 2.0 * pair;
    }
    if (tau < 1e-12) tau = 1e-12;
    double result = static_cast<double>(n) / tau;
    return std::min(result, static_cast<double>(n));
}

} // namespace bayes
