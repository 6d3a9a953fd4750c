#ifndef BAYES_RNG_HPP
#define BAYES_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "bayes/errors.hpp"

namespace bayes {

/// Seeded random stream with a fixed set of hand-rolled distribution
/// transforms, so draws are bit-exact for a given seed and call sequence.
/// Gamma and inverse-Gamma use the shape-rate convention throughout:
/// Gamma(a,b) has density proportional to x^{a-1} e^{-bx}.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t position() const { return position_; }

    /// Uniform on the open interval (0,1).
    double uniform();
    double uniform(double lo, double hi);

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n);

    double normal(double mean, double sd);
    double gamma(double shape, double rate);
    double inv_gamma(double shape, double rate);
    double beta(double a, double b);

    /// Concentration parameters must all be positive; the draw is
    /// renormalized so components sum to 1 within 1e-15.
    std::vector<double> dirichlet(const std::vector<double>& conc);

    /// Single categorical draw; probs need not be normalized but must be
    /// nonnegative with a positive sum. Returns an index in [0, k).
    int categorical(const std::vector<double>& probs);
    int categorical(const double* probs, int k);

    /// cov must be symmetric positive definite; a single jitter of
    /// 1e-10 * mean(diag) is attempted before failing.
    Eigen::VectorXd mvnormal(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

private:
    std::uint64_t next_raw();
    double standard_normal();
    double standard_gamma(double shape);

    std::mt19937_64 engine_;
    std::uint64_t seed_;
    std::uint64_t position_ = 0;
};

} // namespace bayes

#endif
