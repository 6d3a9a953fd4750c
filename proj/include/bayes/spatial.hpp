#ifndef BAYES_SPATIAL_HPP
#define BAYES_SPATIAL_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "bayes/chain.hpp"
#include "bayes/errors.hpp"
#include "bayes/rng.hpp"

namespace bayes {

/// One record per (site, year). Coordinates and altitude in km, years recoded
/// to 1-based integers. NaN rainfall marks a missing response.
struct SpatialData {
    std::vector<int> site_id;
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd altitude;
    Eigen::VectorXi year;
    Eigen::VectorXd rainfall;

    Eigen::Index n() const { return x.size(); }
    Eigen::Index num_missing() const;
    void validate() const;
};

/// Matern correlation with the sqrt(2 nu) d / phi scaling, closed form for
/// half-integer orders 0.5, 1.5, 2.5.
double matern_corr(double d, double phi, double nu = 2.5);

/// n x 7 design: intercept, x, y, altitude, year, y^2, year^2.
/// Throws if the observed rows are rank deficient, naming dependent columns.
Eigen::MatrixXd build_trend(const SpatialData& data);

struct PsiGrid {
    std::vector<double> phi;
    std::vector<double> gamma2;

    void validate() const;
    std::size_t cells() const { return phi.size() * gamma2.size(); }
    // gamma2 step 0.25 over [2,4]; phi log-spaced between the 5th and 95th
    // percentiles of the positive pairwise distances
    static PsiGrid default_for(const SpatialData& data);
};

struct GlsResult {
    Eigen::VectorXd beta_hat;
    double s2 = 0.0;
    double logdet_v = 0.0;
    double logdet_dtvd = 0.0;
    Eigen::MatrixXd r_factor; // k x k upper triangular, R'R = D'V^-1 D
};

/// Correlation-plus-nugget covariance from pairwise record distances:
/// off-diagonal matern, diagonal 1 + gamma2 exactly.
Eigen::MatrixXd assemble_v(const Eigen::MatrixXd& dist, double phi, double gamma2,
                           double nu = 2.5);

/// Profile GLS at fixed psi via one triangular factorization of V and a QR
/// of the whitened design. No explicit inverses.
GlsResult gls_profile(const Eigen::MatrixXd& v, const Eigen::VectorXd& x,
                      const Eigen::MatrixXd& d);

/// Marginal log posterior of psi = (phi, gamma2) up to a constant, with the
/// reciprocal sigma2 prior and p(psi) proportional to 1/phi on gamma2 in [2,4].
/// Outside the support returns -infinity.
double log_post_psi(double phi, double gamma2, const Eigen::MatrixXd& dist,
                    const Eigen::VectorXd& x, const Eigen::MatrixXd& d,
                    double nu = 2.5);

struct PsiState {
    int phi_idx = 0;
    int gamma2_idx = 0;
};

/// One independence-proposal MH step on the psi grid. Returns whether the
/// proposal was accepted; on return gls holds the profile fit at the current
/// (possibly unchanged) state, ready for the conjugate (sigma2, beta) draw.
bool block_mh_step(PsiState& state, const PsiGrid& grid, const Eigen::MatrixXd& dist,
                   const Eigen::VectorXd& x, const Eigen::MatrixXd& d, double nu,
                   RngStream& rng, GlsResult& gls);

/// Conditional-Normal draw of the missing responses given (beta, sigma2) and
/// the assembled covariance over all records. Returns one value per missing
/// index, in order.
Eigen::VectorXd impute_missing(const Eigen::VectorXd& beta, double sigma2,
                               const Eigen::MatrixXd& v, const Eigen::MatrixXd& d,
                               const Eigen::VectorXd& x,
                               const std::vector<int>& obs_idx,
                               const std::vector<int>& mis_idx, RngStream& rng);

struct SpatialOptions {
    PsiGrid grid;                 // empty -> default_for(data)
    double nu = 2.5;
    std::uint64_t burn_in = 500;
    std::uint64_t iters = 1000;
    std::uint64_t thin = 1;
    std::uint64_t seed = 0;
};

/// MH on the psi grid alternating with conjugate (sigma2, beta) draws and
/// Gibbs imputation of missing responses. Chain columns: beta_1..p, sigma2,
/// phi, gamma2, xmis_1..M.
PosteriorChain spatial_run(const SpatialData& data, const SpatialOptions& opts);

struct PredictionMaps {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    Eigen::VectorXd exceedance;
};

struct NewSites {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    Eigen::VectorXi year;
};

/// Kriging at new locations from kept posterior draws; altitude at each new
/// site is copied from the nearest observed site. Exceedance is the fraction
/// of predictive draws above threshold.
PredictionMaps spatial_predict(const SpatialData& data, const PosteriorChain& chain,
                               const NewSites& sites, double threshold, double nu,
                               std::uint64_t seed);

struct VariogramFit {
    double nu = 0.0;
    double sigma2 = 0.0;
    double phi = 0.0;
    double nugget = 0.0;
    double sse = 0.0;
};

/// Least-squares fit of the empirical semivariogram of detrended residuals,
/// one fit per candidate order.
std::vector<VariogramFit> variogram_ls(const SpatialData& data,
                                       const std::vector<double>& nu_candidates,
                                       int bins = 15);

} // namespace bayes

#endif
