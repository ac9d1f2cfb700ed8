#pragma once

#include <Eigen/Dense>
#include <map>
#include <mutex>

#include "qnet/model.hpp"

namespace qnet {

/// Solution of the traffic equations eta_j = lambda r_{0j} + sum_i eta_i r_{ij}.
struct TrafficSolution {
    Eigen::VectorXd eta;  // size J, throughputs of nodes 1..J
    Eigen::VectorXd xi;   // size J+1, normalized (lambda, eta) with xi_0 for the exterior
};

TrafficSolution solve_traffic(const Eigen::MatrixXd& R, double lambda);

/// Routing restricted to the up nodes: index set {0} u ({1..J} \ D).
struct LevelRouting {
    std::vector<int> nodes;  // global indices, nodes[0] == 0, ascending
    Eigen::MatrixXd R;       // |nodes| x |nodes|, row stochastic

    int dim() const { return static_cast<int>(nodes.size()); }
    int local_index(int global) const;  // -1 if the node is down
};

Eigen::MatrixXd derive_rerouting(const NetworkModel& model, Subset D);

struct ReroutingCheck {
    bool ok = false;
    double residual = 0.0;
};

/// Validates the eta^D_j = eta_j assumption for the scheme/model pair at level D.
ReroutingCheck verify_rerouting(const NetworkModel& model, Subset D);

/// xi^D: normalization of (lambda, eta_j : j not in D).
Eigen::VectorXd extended_xi(const NetworkModel& model, Subset D);

/// Detailed balance xi_i r_{ij} = xi_j r_{ji} within tolerance.
bool reversibility_check(const Eigen::MatrixXd& R, const Eigen::VectorXd& xi, double tol = 1e-12);

/// Lazily built, cached family D -> (R^D, xi^D). Safe for concurrent readers.
class ReroutingFamily {
public:
    explicit ReroutingFamily(const NetworkModel& model);

    const LevelRouting& level(Subset D) const;
    const Eigen::VectorXd& xi(Subset D) const;
    const TrafficSolution& traffic() const { return traffic_; }

private:
    struct Entry {
        LevelRouting routing;
        Eigen::VectorXd xi;
    };
    const Entry& entry(Subset D) const;

    const NetworkModel* model_;
    TrafficSolution traffic_;
    mutable std::mutex mutex_;
    mutable std::map<Subset, Entry> cache_;
};

}  // namespace qnet
