#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "qnet/environment.hpp"
#include "qnet/model.hpp"
#include "qnet/routing.hpp"

namespace qnet {

/// Stationary law of a single queue: pi_j(k) = C_j^{-1} prod_{i<=k} eta_j / mu_j(i),
/// with closed-form normalizer and geometric tail (service rates eventually constant).
struct MarginalLaw {
    double eta = 0.0;
    ServiceRateFn service;
    double rho = 0.0;  // eta / mu(K)
    double C = 1.0;

    double weight(int k) const;  // unnormalized prod
    double pmf(int k) const { return weight(k) / C; }
    double tail(int L) const;  // P(n_j >= L)
};

MarginalLaw marginal_law(double eta, const ServiceRateFn& service);

/// A validated model together with everything derived from it (traffic solution,
/// environment chain, rerouting family, marginal laws). Immutable once built.
class PreparedModel {
public:
    explicit PreparedModel(NetworkModel model);
    PreparedModel(const PreparedModel&) = delete;
    PreparedModel& operator=(const PreparedModel&) = delete;

    const NetworkModel& model() const { return model_; }
    const TrafficSolution& traffic() const { return rerouting_->traffic(); }
    const EnvironmentChain& env() const { return env_; }
    const ReroutingFamily& rerouting() const { return *rerouting_; }
    const MarginalLaw& marginal(int j) const { return marginals_[static_cast<size_t>(j - 1)]; }
    int J() const { return model_.J; }

    double marginal_normalizer(int j) const { return marginal(j).C; }
    double joint_pi(const State& s) const { return joint_pi(s.down, s.queues); }
    double joint_pi(Subset down, std::span<const int> queues) const;
    double tail_mass(int j, int L) const { return marginal(j).tail(L); }

private:
    NetworkModel model_;
    EnvironmentChain env_;
    std::unique_ptr<ReroutingFamily> rerouting_;
    std::vector<MarginalLaw> marginals_;
};

/// Relative global-balance residual of the product-form law at one state;
/// Exact prediction is 0 for models satisfying the rerouting invariance assumption.
double balance_residual(const PreparedModel& pm, const State& s);

/// Exact expectation E_pi_tilde[h] for summands h(D, n) that are constant in each
/// coordinate n_j for n_j >= levels[j-1]; the top level of the enumeration box
/// carries the full geometric tail mass.
double lumped_expectation(const PreparedModel& pm, const std::vector<int>& levels,
                          const std::function<double(Subset, std::span<const int>)>& h);

/// Finite chain: environment support x {0..N}^J with blocked-arrival truncation.
struct TruncatedChain {
    int J = 0;
    int N = 0;
    std::vector<Subset> subsets;        // environment support, ascending
    std::vector<int> subset_pos;        // bitmask -> position, -1 off support
    Eigen::SparseMatrix<double, Eigen::RowMajor> Q;

    long long size() const { return Q.rows(); }
    long long index_of(Subset d, std::span<const int> n) const;
    State state_of(long long idx) const;
};

TruncatedChain build_truncated(const PreparedModel& pm, int N);

/// Exact stationary vector of the truncated generator (sparse direct solve).
Eigen::VectorXd truncated_stationary(const TruncatedChain& chain);

}  // namespace qnet
