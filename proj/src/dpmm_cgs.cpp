#include "bayes/dpmm_cgs.hpp"

#include <cmath>
#include <numbers>

namespace bayes {

namespace {

double normal_pdf(double y, double mean, double var) {
    const double d = y - mean;
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

} // namespace

void CGSState::audit(const std::vector<double>& z) const {
    const int K = num_clusters();
    std::vector<double> c(static_cast<std::size_t>(K), 0.0);
    std::vector<double> s(static_cast<std::size_t>(K), 0.0);
    std::vector<double> q(static_cast<std::size_t>(K), 0.0);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const int a = assignment[i];
        if (a < 0 || a >= K) throw numerical_error("cgs audit: label out of range");
        c[static_cast<std::size_t>(a)] += 1.0;
        s[static_cast<std::size_t>(a)] += z[i];
        q[static_cast<std::size_t>(a)] += z[i] * z[i];
    }
    for (int k = 0; k < K; ++k) {
        const std::size_t u = static_cast<std::size_t>(k);
        if (c[u] == 0.0) throw numerical_error("cgs audit: empty active cluster");
        if (std::abs(c[u] - count[u]) > 1e-9 || std::abs(s[u] - sum[u]) > 1e-9 ||
            std::abs(q[u] - sum_sq[u]) > 1e-9)
            throw numerical_error("cgs audit: sufficient statistics drifted");
    }
}

CGSState cgs_init(const std::vector<double>& z, const DpmmHyper& hyper) {
    hyper.validate();
    if (z.empty()) throw data_error("cgs_init: empty data");
    CGSState s;
    s.assignment.assign(z.size(), 0);
    double sum = 0.0, sum_sq = 0.0;
    for (double v : z) {
        sum += v;
        sum_sq += v * v;
    }
    s.count = {static_cast<double>(z.size())};
    s.sum = {sum};
    s.sum_sq = {sum_sq};
    s.phi = hyper.a_phi / hyper.b_phi;
    return s;
}

void cgs_sweep(CGSState& state, const std::vector<double>& z, const DpmmHyper& hyper,
               RngStream& rng) {
    const std::size_t n = z.size();
    std::vector<double> weights;
    for (std::size_t i = 0; i < n; ++i) {
        const double zi = z[i];
        // remove point i
        const int old = state.assignment[i];
        const std::size_t u = static_cast<std::size_t>(old);
        state.count[u] -= 1.0;
        state.sum[u] -= zi;
        state.sum_sq[u] -= zi * zi;
        if (state.count[u] <= 0.0) {
            const int last = state.num_clusters() - 1;
            if (old != last) {
                state.count[u] = state.count[static_cast<std::size_t>(last)];
                state.sum[u] = state.sum[static_cast<std::size_t>(last)];
                state.sum_sq[u] = state.sum_sq[static_cast<std::size_t>(last)];
                for (std::size_t j = 0; j < n; ++j)
                    if (state.assignment[j] == last) state.assignment[j] = old;
            }
            state.count.pop_back();
            state.sum.pop_back();
            state.sum_sq.pop_back();
        }

        // predictive weights: n_c m_c(z_i) for active clusters, alpha m_0
        const int K = state.num_clusters();
        weights.assign(static_cast<std::size_t>(K) + 1, 0.0);
        for (int c = 0; c < K; ++c) {
            const std::size_t v = static_cast<std::size_t>(c);
            const double prec = hyper.nu + state.count[v] * state.phi;
            const double mean = (hyper.nu * hyper.psi + state.phi * state.sum[v]) / prec;
            weights[v] = state.count[v] *
                         normal_pdf(zi, mean, 1.0 / state.phi + 1.0 / prec);
        }
        weights[static_cast<std::size_t>(K)] =
            hyper.alpha * normal_pdf(zi, hyper.psi, 1.0 / state.phi + 1.0 / hyper.nu);

        const int pick = rng.categorical(weights.data(), K + 1);
        if (pick == K) {
            state.count.push_back(0.0);
            state.sum.push_back(0.0);
            state.sum_sq.push_back(0.0);
        }
        const std::size_t v = static_cast<std::size_t>(pick);
        state.assignment[i] = pick;
        state.count[v] += 1.0;
        state.sum[v] += zi;
        state.sum_sq[v] += zi * zi;
    }

    // refresh phi: instantiate cluster means, then the Gamma full conditional
    const int K = state.num_clusters();
    std::vector<double> means(static_cast<std::size_t>(K));
    for (int c = 0; c < K; ++c) {
        const std::size_t v = static_cast<std::size_t>(c);
        const double prec = hyper.nu + state.count[v] * state.phi;
        const double mean = (hyper.nu * hyper.psi + state.phi * state.sum[v]) / prec;
        means[v] = rng.normal(mean, std::sqrt(1.0 / prec));
    }
    double rss = 0.0;
    for (int c = 0; c < K; ++c) {
        const std::size_t v = static_cast<std::size_t>(c);
        rss += state.sum_sq[v] - 2.0 * means[v] * state.sum[v] +
               state.count[v] * means[v] * means[v];
    }
    state.phi = rng.gamma(hyper.a_phi + 0.5 * static_cast<double>(n),
                          hyper.b_phi + 0.5 * rss);
}

CGSDraws cgs_run(const std::vector<double>& z, const DpmmHyper& hyper,
                 std::uint64_t burn_in, std::uint64_t samples, std::uint64_t seed) {
    RngStream rng(seed);
    CGSState state = cgs_init(z, hyper);
    for (std::uint64_t it = 0; it < burn_in; ++it) cgs_sweep(state, z, hyper, rng);
    CGSDraws draws;
    draws.assignments.reserve(samples);
    draws.phi.reserve(samples);
    for (std::uint64_t it = 0; it < samples; ++it) {
        cgs_sweep(state, z, hyper, rng);
        draws.assignments.push_back(state.assignment);
        draws.phi.push_back(state.phi);
    }
    return draws;
}

Eigen::MatrixXd incidence(const std::vector<std::vector<int>>& draws) {
    if (draws.empty()) throw data_error("incidence: no draws");
    const Eigen::Index n = static_cast<Eigen::Index>(draws.front().size());
    Eigen::MatrixXd inc = Eigen::MatrixXd::Zero(n, n);
    for (const auto& a : draws) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i; j < n; ++j)
                if (a[static_cast<std::size_t>(i)] == a[static_cast<std::size_t>(j)]) {
                    inc(i, j) += 1.0;
                    if (i != j) inc(j, i) += 1.0;
                }
    }
    inc /= static_cast<double>(draws.size());
    return inc;
}

std::vector<double> cgs_predictive(const CGSDraws& draws, const std::vector<double>& z,
                                   const DpmmHyper& hyper, const std::vector<double>& grid) {
    if (draws.assignments.empty()) throw data_error("cgs_predictive: no draws");
    const double n = static_cast<double>(z.size());
    std::vector<double> out(grid.size(), 0.0);
    for (std::size_t d = 0; d < draws.assignments.size(); ++d) {
        const auto& a = draws.assignments[d];
        const double phi = draws.phi[d];
        // canonicalize labels by first occurrence so that relabeled draws
        // accumulate in the same order and produce bit-identical output
        int K = 0;
        std::vector<int> relabel(a.size(), -1);
        std::vector<int> canon(a.size(), 0);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::size_t lbl = static_cast<std::size_t>(a[i]);
            if (lbl >= relabel.size()) throw data_error("cgs_predictive: bad label");
            if (relabel[lbl] < 0) relabel[lbl] = K++;
            canon[i] = relabel[lbl];
        }
        std::vector<double> count(static_cast<std::size_t>(K), 0.0);
        std::vector<double> sum(static_cast<std::size_t>(K), 0.0);
        for (std::size_t i = 0; i < z.size(); ++i) {
            count[static_cast<std::size_t>(canon[i])] += 1.0;
            sum[static_cast<std::size_t>(canon[i])] += z[i];
        }
        for (std::size_t g = 0; g < grid.size(); ++g) {
            double dens = hyper.alpha *
                          normal_pdf(grid[g], hyper.psi, 1.0 / phi + 1.0 / hyper.nu);
            for (int c = 0; c < K; ++c) {
                const std::size_t v = static_cast<std::size_t>(c);
                if (count[v] == 0.0) continue;
                const double prec = hyper.nu + count[v] * phi;
                const double mean = (hyper.nu * hyper.psi + phi * sum[v]) / prec;
                dens += count[v] * normal_pdf(grid[g], mean, 1.0 / phi + 1.0 / prec);
            }
            out[g] += dens / (n + hyper.alpha);
        }
    }
    for (double& v : out) v /= static_cast<double>(draws.assignments.size());
    return out;
}

} // namespace bayes
