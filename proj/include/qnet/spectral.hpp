#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qnet/correlation.hpp"
#include "qnet/statespace.hpp"

namespace qnet {

/// <f, -Q^Z f>_pi_tilde, the quadratic form controlling L^2 convergence. Always >= 0.
double dirichlet(const PreparedModel& pm, const Observable& f);

/// dirichlet(f - mean) / Var(f): an exact upper bound on the gap for any
/// non-constant saturated f.
double rayleigh_upper(const PreparedModel& pm, const Observable& f);

/// Smallest nonzero eigenvalue of the additive symmetrization of the truncated
/// generator on L^2(p_hat). Dense solve up to 3000 states, deflated inverse
/// iteration above.
double gap_truncated(const PreparedModel& pm, int N);
double gap_of_chain(const TruncatedChain& chain, const Eigen::VectorXd& p);

/// Exact gap of the breakdown/repair chain on its support.
double gap_env(const PreparedModel& pm);
double gap_env(const EnvironmentChain& chain);

/// eta_j sum_{i up} r^D_{ji} = sum_{i up} eta_i r^D_{ij} for every up node j,
/// internal targets only.
bool check_overall_balance(const NetworkModel& model, Subset D);

/// Network of conditionally independent birth-death queues with the same
/// stationary law: keeps every level's exterior rows/columns and turns all
/// internal transfer mass into self loops.
NetworkModel bd_comparison(const NetworkModel& model);

/// Exact gap of an M/M/1 queue: (sqrt(mu) - sqrt(lambda))^2.
double van_doorn(double lambda_birth, double mu_death);

/// Closed-form gap bounds for the symmetric network with r_{0i} = 1/J,
/// r_{ij} = p (i != j internal), r_{i0} = 1 - p(J-1), constant service mu.
std::pair<double, double> symmetric_bounds(int J, double lambda, double mu, double p);

/// Detects the symmetric pattern above; empty if the model does not match.
std::optional<std::pair<double, double>> detect_symmetric_bounds(const NetworkModel& model);

struct GapReport {
    std::vector<int> levels;
    std::vector<double> gap_estimates;
    std::vector<std::pair<std::string, double>> rayleigh;  // observable text, quotient
    double env_gap = 0.0;
    bool has_env_gap = false;
    std::optional<std::pair<double, double>> closed_bounds;
};

GapReport gap_report(const PreparedModel& pm, const std::vector<int>& levels,
                     const std::vector<Observable>& candidates);

}  // namespace qnet
