#ifndef BAYES_DPMM_CGS_HPP
#define BAYES_DPMM_CGS_HPP

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "bayes/dpmm_vi.hpp"
#include "bayes/rng.hpp"

namespace bayes {

/// Collapsed Gibbs state: cluster locations are integrated out under the
/// Normal base measure at the current shared precision phi.
struct CGSState {
    std::vector<int> assignment;     // cluster label per point, 0-based compact
    std::vector<double> count;       // per active cluster
    std::vector<double> sum;
    std::vector<double> sum_sq;
    double phi = 1.0;

    int num_clusters() const { return static_cast<int>(count.size()); }
    void audit(const std::vector<double>& z) const; // stats must match assignments
};

CGSState cgs_init(const std::vector<double>& z, const DpmmHyper& hyper);

/// Reassign every point in turn (predictive weights n_c m_c and alpha m_0),
/// then refresh phi by instantiating cluster means and drawing from the
/// Gamma full conditional.
void cgs_sweep(CGSState& state, const std::vector<double>& z, const DpmmHyper& hyper,
               RngStream& rng);

struct CGSDraws {
    std::vector<std::vector<int>> assignments; // kept draws
    std::vector<double> phi;
};

CGSDraws cgs_run(const std::vector<double>& z, const DpmmHyper& hyper,
                 std::uint64_t burn_in, std::uint64_t samples, std::uint64_t seed);

/// Co-clustering frequency matrix: entry (i,j) = fraction of draws with
/// L_i == L_j. Symmetric, unit diagonal.
Eigen::MatrixXd incidence(const std::vector<std::vector<int>>& draws);

/// Posterior predictive density averaged across draws: per draw a mixture
/// of cluster predictives plus the alpha-weighted new-cluster term over
/// (n + alpha).
std::vector<double> cgs_predictive(const CGSDraws& draws, const std::vector<double>& z,
                                   const DpmmHyper& hyper, const std::vector<double>& grid);

} // namespace bayes

#endif
