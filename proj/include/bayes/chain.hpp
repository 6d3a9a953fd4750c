#ifndef BAYES_CHAIN_HPP
#define BAYES_CHAIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bayes/errors.hpp"

namespace bayes {

/// Retained MCMC draws, one row per kept iteration, one named column per
/// parameter. rows = (total - burn_in) / thin exactly.
struct PosteriorChain {
    Eigen::MatrixXd draws;
    std::vector<std::string> names;
    std::uint64_t burn_in = 0;
    std::uint64_t thin = 1;
    std::uint64_t seed = 0;

    Eigen::Index rows() const { return draws.rows(); }
    Eigen::Index cols() const { return draws.cols(); }
    int column_index(const std::string& name) const;
};

struct PosteriorSummary {
    std::string name;
    double mean;
    double sd;
    double q025;
    double q50;
    double q975;
};

/// Type-7 quantile (linear interpolation of order statistics); p in [0,1].
double quantile(std::vector<double> values, double p);

double sample_mean(const Eigen::VectorXd& x);
double sample_sd(const Eigen::VectorXd& x); // divisor n-1; 0 for n < 2

std::vector<PosteriorSummary> summarize(const PosteriorChain& chain);

/// Effective sample size via Geyer initial-positive-sequence truncation,
/// clamped to (0, n]. Throws data_error for constant or too-short input.
double ess(const Eigen::VectorXd& column);

} // namespace bayes

#endif
