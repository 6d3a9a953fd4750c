#ifndef BAYES_SIMULATE_HPP
#define BAYES_SIMULATE_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "bayes/hier.hpp"
#include "bayes/mtd.hpp"
#include "bayes/spatial.hpp"

namespace bayes {

/// Synthetic draws from each generative model, with the truth kept alongside
/// for calibration and coverage checks.

struct HierSim {
    HierData data;
    std::vector<double> theta;        // per group
    std::vector<double> sigma2_group; // per group
    std::vector<double> lambda;       // per device
    double mu = 0.0, tau2 = 0.0, sigma2 = 0.0;
};

/// theta_j ~ N(mu, tau2), sigma2_j ~ IG(alpha+1, alpha sigma2),
/// lambda_d ~ Gamma(dof/2, dof/2), y_d ~ N(theta_j, sigma2_j / (n_d lambda_d)).
/// tau2 = 0 collapses all group means onto mu.
HierSim simulate_hier(int groups, int devices_per_group, double records_per_device,
                      double mu, double tau2, double sigma2, double alpha, double dof,
                      std::uint64_t seed);

struct SpatialSim {
    SpatialData data;
    Eigen::VectorXd beta;
    double sigma2 = 0.0, phi = 0.0, gamma2 = 0.0;
};

/// Uniform site layout on [0, extent]^2 with one record per (site, year),
/// responses drawn jointly from N(D beta, sigma2 (R(phi) + gamma2 I)), then
/// a missing_frac share of responses masked at random.
SpatialSim simulate_spatial(int sites, int years, double extent_km,
                            const Eigen::VectorXd& beta, double sigma2, double phi,
                            double gamma2, double missing_frac, double nu,
                            std::uint64_t seed);

struct MtdSim {
    ChainData data;
    MTDParams truth;
};

/// Exact mixture-transition sampling: the first order() states are uniform,
/// each later state picks a lag by the mixture weights and then a column of Q.
MtdSim simulate_mtd(const MTDParams& truth, int length, std::uint64_t seed);

struct DpmmSim {
    std::vector<double> y;
    std::vector<int> component; // 0-based truth labels
};

/// Finite Normal mixture with shared precision phi.
DpmmSim simulate_dpmm(const std::vector<double>& weights, const std::vector<double>& means,
                      double phi, int n, std::uint64_t seed);

} // namespace bayes

#endif
