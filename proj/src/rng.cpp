#include "bayes/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Cholesky>

namespace bayes {

std::uint64_t RngStream::next_raw() {
    ++position_;
    return engine_();
}

double RngStream::uniform() {
    // 53-bit mantissa; shifted away from 0 so log() is always safe.
    double u = (static_cast<double>(next_raw() >> 11) + 0.5) * 0x1.0p-53;
    return u;
}

double RngStream::uniform(double lo, double hi) {
    if (!(lo < hi)) throw parameter_error("uniform: lo must be < hi");
    return lo + (hi - lo) * uniform();
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
    if (n == 0) throw parameter_error("uniform_index: n must be positive");
    // rejection to avoid modulo bias
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
        r = next_raw();
    } while (r >= limit);
    return r % n;
}

double RngStream::standard_normal() {
    // Box-Muller, cosine branch only; deterministic two raw draws per call.
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RngStream::normal(double mean, double sd) {
    if (!(sd >= 0.0)) throw parameter_error("normal: sd must be >= 0");
    return mean + sd * standard_normal();
}

double RngStream::standard_gamma(double shape) {
    if (shape < 1.0) {
        // Boost via Gamma(shape+1) and a uniform power.
        double g = standard_gamma(shape + 1.0);
        return g * std::pow(uniform(), 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = standard_normal();
        double t = 1.0 + c * x;
        if (t <= 0.0) continue;
        double v = t * t * t;
        double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double RngStream::gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw parameter_error("gamma: shape and rate must be positive");
    return standard_gamma(shape) / rate;
}

double RngStream::inv_gamma(double shape, double rate) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw parameter_error("inv_gamma: shape and rate must be positive");
    return rate / standard_gamma(shape);
}

double RngStream::beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0))
        throw parameter_error("beta: both shapes must be positive");
    double x = standard_gamma(a);
    double y = standard_gamma(b);
    return x / (x + y);
}

std::vector<double> RngStream::dirichlet(const std::vector<double>& conc) {
    if (conc.empty()) throw parameter_error("dirichlet: empty concentration");
    std::vector<double> g(conc.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < conc.size(); ++i) {
        if (!(conc[i] > 0.0))
            throw parameter_error("dirichlet: concentrations must be positive");
        g[i] = standard_gamma(conc[i]);
        sum += g[i];
    }
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] /= sum;
        if (g[i] > g[argmax]) argmax = i;
    }
    double total = 0.0;
    for (double v : g) total += v;
    g[argmax] += 1.0 - total; // absorb rounding residual in the largest slot
    return g;
}

int RngStream::categorical(const double* probs, int k) {
    if (k <= 0) throw parameter_error("categorical: need at least one category");
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        if (!(probs[i] >= 0.0)) throw parameter_error("categorical: negative weight");
        total += probs[i];
    }
    if (!(total > 0.0)) throw parameter_error("categorical: weights sum to zero");
    double u = uniform() * total;
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
        acc += probs[i];
        if (u <= acc) return i;
    }
    return k - 1;
}

int RngStream::categorical(const std::vector<double>& probs) {
    return categorical(probs.data(), static_cast<int>(probs.size()));
}

Eigen::VectorXd RngStream::mvnormal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
    const Eigen::Index n = mean.size();
    if (cov.rows() != n || cov.cols() != n)
        throw parameter_error("mvnormal: dimension mismatch");
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        // One retry: clamp round-off-negative variances at zero and pad the
        // diagonal, so exactly-degenerate conditionals collapse to their mean.
        Eigen::MatrixXd padded = cov;
        padded.diagonal() = padded.diagonal().cwiseMax(0.0);
        const double jitter = std::max(1e-10 * padded.diagonal().mean(), 1e-30);
        padded.diagonal().array() += jitter;
        llt.compute(padded);
        if (llt.info() != Eigen::Success)
            throw decomposition_error("mvnormal: covariance not PD after jitter");
    }
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = standard_normal();
    return mean + llt.matrixL() * z;
}

} // namespace bayes
