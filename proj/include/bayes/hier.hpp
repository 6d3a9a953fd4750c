#ifndef BAYES_HIER_HPP
#define BAYES_HIER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bayes/chain.hpp"
#include "bayes/rng.hpp"

namespace bayes {

/// Grouped device-mean measurements; one entry per device.
struct HierData {
    std::vector<double> y;       // device-mean measurement
    std::vector<double> n;       // records per device, >= 1
    std::vector<int> group;      // 0-based group index
    int num_groups = 0;

    std::size_t num_devices() const { return y.size(); }
    void validate() const;
};

/// Proper Normal / inverse-Gamma prior on (mu, tau2), used by the Geweke
/// prior-recovery harness in place of the default flat p(mu, tau2) ~ 1/tau2.
struct ProperLevel2Prior {
    double mu_mean = 0.0;
    double mu_var = 1.0;
    double tau2_shape = 3.0;
    double tau2_rate = 2.0;
};

struct HierHyper {
    double alpha = 2.0; // IG linkage shape for sigma2_j | sigma2
    double a = 2.0;     // Gamma prior shape for sigma2
    double b = 2.0;     // Gamma prior rate for sigma2
    double dof = 5.0;   // t degrees of freedom (fixed)
    // Reproduces the printed variance updates (sigma2_j shape alpha + N_j/2,
    // sigma2 shape a) instead of the shapes alpha + 1 + N_j/2 and
    // a + J(alpha+1) implied by the IG(alpha+1, alpha sigma2) linkage.
    bool paper_literal_sigma2 = false;
    std::optional<ProperLevel2Prior> proper_level2;
};

struct HierState {
    Eigen::VectorXd theta;        // group means
    Eigen::VectorXd sigma2_group; // group scales
    Eigen::VectorXd lambda;       // per-device t-mixing scales
    double mu = 0.0;
    double tau2 = 1.0;
    double sigma2 = 1.0;
};

HierState hier_init(const HierData& data, const HierHyper& hyper);

/// One full Gibbs sweep: theta_j, sigma2_j, lambda_ij, then the blocked
/// (tau2 | theta) -> (mu | tau2, theta) pair, then sigma2. Throws
/// numerical_error naming the step on non-finite intermediates.
void hier_sweep(HierState& state, const HierData& data, const HierHyper& hyper,
                RngStream& rng);

/// Chain columns: theta_1..J, sigma2_1..J, lambda_1..D, mu, tau2, sigma2.
PosteriorChain hier_run(const HierData& data, const HierHyper& hyper,
                        std::uint64_t burn_in, std::uint64_t iters, std::uint64_t thin,
                        std::uint64_t seed);

struct OutlierRecord {
    std::size_t device;  // 0-based index into HierData
    double lambda_mean;
    double lambda_median;
};

/// Devices whose posterior mean lambda falls below threshold, ascending by
/// mean lambda.
std::vector<OutlierRecord> detect_outliers(const PosteriorChain& chain,
                                           std::size_t num_devices,
                                           double threshold = 0.5);

struct BayesianPValues {
    std::vector<double> per_device;
    double average;
};

/// Posterior predictive check with T = |z - theta|. force_replicate_equal
/// is a degenerate test hook that sets z = y.
BayesianPValues bayesian_p_value(const PosteriorChain& chain, const HierData& data,
                                 RngStream& rng, bool force_replicate_equal = false);

} // namespace bayes

#endif
