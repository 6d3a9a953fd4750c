#include "bayes/simulate.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

namespace bayes {

HierSim simulate_hier(int groups, int devices_per_group, double records_per_device,
                      double mu, double tau2, double sigma2, double alpha, double dof,
                      std::uint64_t seed) {
    if (groups < 1 || devices_per_group < 1) throw parameter_error("simulate_hier: sizes");
    if (tau2 < 0.0 || sigma2 <= 0.0 || alpha <= 0.0 || dof <= 0.0 ||
        records_per_device < 1.0)
        throw parameter_error("simulate_hier: invalid truth parameters");

    RngStream rng(seed);
    HierSim sim;
    sim.mu = mu;
    sim.tau2 = tau2;
    sim.sigma2 = sigma2;
    sim.data.num_groups = groups;
    for (int j = 0; j < groups; ++j) {
        const double theta = tau2 > 0.0 ? rng.normal(mu, std::sqrt(tau2)) : mu;
        const double s2j = rng.inv_gamma(alpha + 1.0, alpha * sigma2);
        sim.theta.push_back(theta);
        sim.sigma2_group.push_back(s2j);
        for (int d = 0; d < devices_per_group; ++d) {
            const double lambda = rng.gamma(0.5 * dof, 0.5 * dof);
            sim.lambda.push_back(lambda);
            sim.data.y.push_back(
                rng.normal(theta, std::sqrt(s2j / (records_per_device * lambda))));
            sim.data.n.push_back(records_per_device);
            sim.data.group.push_back(j);
        }
    }
    return sim;
}

SpatialSim simulate_spatial(int sites, int years, double extent_km,
                            const Eigen::VectorXd& beta, double sigma2, double phi,
                            double gamma2, double missing_frac, double nu,
                            std::uint64_t seed) {
    if (sites < 1 || years < 1 || extent_km <= 0.0) throw parameter_error("simulate_spatial: sizes");
    if (beta.size() != 7) throw parameter_error("simulate_spatial: beta must have 7 entries");
    if (sigma2 <= 0.0 || phi <= 0.0 || gamma2 < 0.0 || missing_frac < 0.0 ||
        missing_frac >= 1.0)
        throw parameter_error("simulate_spatial: invalid truth parameters");

    RngStream rng(seed);
    const Eigen::Index n = static_cast<Eigen::Index>(sites) * years;
    SpatialSim sim;
    sim.beta = beta;
    sim.sigma2 = sigma2;
    sim.phi = phi;
    sim.gamma2 = gamma2;
    SpatialData& data = sim.data;
    data.x.resize(n);
    data.y.resize(n);
    data.altitude.resize(n);
    data.year.resize(n);
    data.rainfall.resize(n);

    std::vector<double> sx(static_cast<std::size_t>(sites));
    std::vector<double> sy(static_cast<std::size_t>(sites));
    std::vector<double> salt(static_cast<std::size_t>(sites));
    for (int s = 0; s < sites; ++s) {
        sx[static_cast<std::size_t>(s)] = rng.uniform(0.0, extent_km);
        sy[static_cast<std::size_t>(s)] = rng.uniform(0.0, extent_km);
        salt[static_cast<std::size_t>(s)] = rng.uniform(0.0, 2.0);
    }
    Eigen::Index r = 0;
    for (int s = 0; s < sites; ++s)
        for (int t = 1; t <= years; ++t, ++r) {
            data.site_id.push_back(s + 1);
            data.x[r] = sx[static_cast<std::size_t>(s)];
            data.y[r] = sy[static_cast<std::size_t>(s)];
            data.altitude[r] = salt[static_cast<std::size_t>(s)];
            data.year[r] = t;
        }

    Eigen::MatrixXd d(n, 7);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double yr = static_cast<double>(data.year[i]);
        d(i, 0) = 1.0;
        d(i, 1) = data.x[i];
        d(i, 2) = data.y[i];
        d(i, 3) = data.altitude[i];
        d(i, 4) = yr;
        d(i, 5) = data.y[i] * data.y[i];
        d(i, 6) = yr * yr;
    }
    Eigen::MatrixXd v(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i, i) = 1.0 + gamma2;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double dx = data.x[i] - data.x[j];
            const double dy = data.y[i] - data.y[j];
            v(i, j) = v(j, i) = matern_corr(std::sqrt(dx * dx + dy * dy), phi, nu);
        }
    }
    data.rainfall = rng.mvnormal(d * beta, sigma2 * v);

    if (missing_frac > 0.0) {
        for (Eigen::Index i = 0; i < n; ++i)
            if (rng.uniform() < missing_frac)
                data.rainfall[i] = std::numeric_limits<double>::quiet_NaN();
        // keep the design estimable
        Eigen::Index observed = n - data.num_missing();
        for (Eigen::Index i = 0; i < n && observed < 9; ++i)
            if (std::isnan(data.rainfall[i])) {
                data.rainfall[i] = (d.row(i) * beta).value();
                ++observed;
            }
    }
    return sim;
}

MtdSim simulate_mtd(const MTDParams& truth, int length, std::uint64_t seed) {
    const int order = truth.order();
    const int m = static_cast<int>(truth.Q.rows());
    if (order < 1 || m < 2 || truth.Q.cols() != m)
        throw parameter_error("simulate_mtd: malformed truth parameters");
    double lsum = 0.0;
    for (double l : truth.lambda) {
        if (l < 0.0) throw parameter_error("simulate_mtd: negative lag weight");
        lsum += l;
    }
    if (std::abs(lsum - 1.0) > 1e-9) throw parameter_error("simulate_mtd: lag weights must sum to 1");
    for (int i = 0; i < m; ++i) {
        if (std::abs(truth.Q.row(i).sum() - 1.0) > 1e-9 || truth.Q.row(i).minCoeff() < 0.0)
            throw parameter_error("simulate_mtd: Q rows must be on the simplex");
    }
    if (length <= order) throw parameter_error("simulate_mtd: chain too short for the order");

    RngStream rng(seed);
    MtdSim sim;
    sim.truth = truth;
    sim.data.m = m;
    sim.data.lmax = order;
    std::vector<int>& x = sim.data.x;
    for (int t = 0; t < order; ++t)
        x.push_back(static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(m))) + 1);
    std::vector<double> row(static_cast<std::size_t>(m));
    for (int t = order; t < length; ++t) {
        const int g = rng.categorical(truth.lambda) + 1;
        const int from = x[static_cast<std::size_t>(t - g)];
        for (int s = 0; s < m; ++s) row[static_cast<std::size_t>(s)] = truth.Q(from - 1, s);
        x.push_back(rng.categorical(row) + 1);
    }
    return sim;
}

DpmmSim simulate_dpmm(const std::vector<double>& weights, const std::vector<double>& means,
                      double phi, int n, std::uint64_t seed) {
    if (weights.empty() || weights.size() != means.size())
        throw parameter_error("simulate_dpmm: weights and means must align");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw parameter_error("simulate_dpmm: negative weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw parameter_error("simulate_dpmm: weights must sum to 1");
    if (phi <= 0.0 || n < 1) throw parameter_error("simulate_dpmm: invalid phi or size");

    RngStream rng(seed);
    DpmmSim sim;
    const double sd = 1.0 / std::sqrt(phi);
    for (int i = 0; i < n; ++i) {
        const int c = rng.categorical(weights);
        sim.component.push_back(c);
        sim.y.push_back(rng.normal(means[static_cast<std::size_t>(c)], sd));
    }
    return sim;
}

} // namespace bayes
