#pragma once

#include <string>

#include "qnet/model.hpp"
#include "qnet/routing.hpp"

namespace qnet::testing {

// Convex mixing with a xi-preserving target keeps the whole traffic solution,
// giving valid routing-difference pairs. Target is Id or the rank-one matrix
// with every row equal to xi.
inline NetworkModel mixed_routing(NetworkModel m, double a, bool toward_identity) {
    auto sol = qnet::solve_traffic(m.routing, m.lambda);
    const int dim = m.J + 1;
    Eigen::MatrixXd target(dim, dim);
    if (toward_identity) {
        target = Eigen::MatrixXd::Identity(dim, dim);
    } else {
        for (int i = 0; i < dim; ++i) target.row(i) = sol.xi.transpose();
    }
    m.routing = a * m.routing + (1.0 - a) * target;
    m.validate();
    return m;
}

// Tandem: all flow passes node 1 then node 2, no breakdowns.
inline NetworkModel tandem() {
    NetworkModel m;
    m.J = 2;
    m.lambda = 1.0;
    m.routing = Eigen::MatrixXd::Zero(3, 3);
    m.routing(0, 1) = 1.0;
    m.routing(1, 2) = 1.0;
    m.routing(2, 0) = 1.0;
    m.service = {{{2.0}, 1}, {{2.0}, 1}};
    m.environment = EnvironmentSpec::none(2);
    m.rerouting.kind = ReroutingKind::Stalling;
    m.validate();
    return m;
}

// Symmetric two-node network with reversible routing; eta = (2, 2), xi uniform.
inline NetworkModel symmetric2(ReroutingKind kind = ReroutingKind::Skipping, bool breakdowns = false) {
    NetworkModel m;
    m.J = 2;
    m.lambda = 2.0;
    m.routing = Eigen::MatrixXd::Zero(3, 3);
    m.routing(0, 1) = 0.5;
    m.routing(0, 2) = 0.5;
    m.routing(1, 0) = 0.5;
    m.routing(1, 2) = 0.5;
    m.routing(2, 0) = 0.5;
    m.routing(2, 1) = 0.5;
    m.service = {{{5.0}, 1}, {{5.0}, 1}};
    m.environment = breakdowns ? EnvironmentSpec::independent({0.3, 0.2}, {1.0, 1.5})
                               : EnvironmentSpec::none(2);
    m.rerouting.kind = kind;
    m.validate();
    return m;
}

// Three-node network with r_ij = p between distinct internal nodes, r_0i = 1/J;
// routing is reversible w.r.t. xi. Matches the closed-form gap bound setting at
// lambda = 0.3, mu = 1, p = 0.3.
inline NetworkModel symmetric3(double lambda = 0.3, double mu = 1.0, double p = 0.3,
                               ReroutingKind kind = ReroutingKind::Skipping, bool breakdowns = false) {
    NetworkModel m;
    m.J = 3;
    m.lambda = lambda;
    m.routing = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 1; i <= 3; ++i) m.routing(0, i) = 1.0 / 3.0;
    for (int i = 1; i <= 3; ++i) {
        m.routing(i, 0) = 1.0 - 2.0 * p;
        for (int j = 1; j <= 3; ++j)
            if (j != i) m.routing(i, j) = p;
    }
    m.service = {{{mu}, 1}, {{mu}, 1}, {{mu}, 1}};
    m.environment = breakdowns ? EnvironmentSpec::independent({0.2, 0.3, 0.25}, {1.0, 1.2, 0.8})
                               : EnvironmentSpec::none(3);
    m.rerouting.kind = kind;
    m.validate();
    return m;
}

// Single M/M/1-style node, optionally with a two-state environment (alpha, beta).
inline NetworkModel single_node(double lambda = 1.0, double mu = 2.0, double alpha = 0.0, double beta = 1.0,
                                ReroutingKind kind = ReroutingKind::Stalling) {
    NetworkModel m;
    m.J = 1;
    m.lambda = lambda;
    m.routing = Eigen::MatrixXd::Zero(2, 2);
    m.routing(0, 1) = 1.0;
    m.routing(1, 0) = 1.0;
    m.service = {{{mu}, 1}};
    m.environment = alpha > 0.0 ? EnvironmentSpec::independent({alpha}, {beta}) : EnvironmentSpec::none(1);
    m.rerouting.kind = kind;
    m.validate();
    return m;
}

// Routing used by the skipping closed-form example: rows (0,.5,.5), (.3,.2,.5), (.6,.2,.2).
inline Eigen::MatrixXd e3_routing() {
    Eigen::MatrixXd R(3, 3);
    R << 0.0, 0.5, 0.5,
         0.3, 0.2, 0.5,
         0.6, 0.2, 0.2;
    return R;
}

}  // namespace qnet::testing
