#include "qnet/routing.hpp"

#include <cmath>

namespace qnet {

TrafficSolution solve_traffic(const Eigen::MatrixXd& R, double lambda) {
    int J = static_cast<int>(R.rows()) - 1;
    Eigen::VectorXd lam(J);
    for (int j = 0; j < J; ++j) lam(j) = lambda * R(0, j + 1);
    Eigen::MatrixXd interior = R.block(1, 1, J, J);
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(J, J) - interior.transpose();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
    Eigen::VectorXd eta = lu.solve(lam);
    double residual = (system * eta - lam).cwiseAbs().maxCoeff();
    if (!eta.allFinite() || residual > 1e-10 * std::max(1.0, eta.cwiseAbs().maxCoeff()))
        throw ValidationError("traffic equations: linear solve failed");

    TrafficSolution sol;
    sol.eta = eta;
    sol.xi.resize(J + 1);
    double total = lambda + eta.sum();
    sol.xi(0) = lambda / total;
    for (int j = 0; j < J; ++j) sol.xi(j + 1) = eta(j) / total;
    return sol;
}

int LevelRouting::local_index(int global) const {
    for (int i = 0; i < dim(); ++i)
        if (nodes[static_cast<size_t>(i)] == global) return i;
    return -1;
}

namespace {

std::vector<int> up_nodes_with_exterior(int J, Subset D) {
    std::vector<int> nodes{0};
    for (int j = 1; j <= J; ++j)
        if (!contains(D, j)) nodes.push_back(j);
    return nodes;
}


Eigen::MatrixXd skipping_matrix(const NetworkModel& model, Subset D) {
    int J = model.J;
    auto up = up_nodes_with_exterior(J, D);
    std::vector<int> down;
    for (int j = 1; j <= J; ++j)
        if (contains(D, j)) down.push_back(j);
    int nd = static_cast<int>(down.size());
    Eigen::MatrixXd Rdd(nd, nd);
    for (int a = 0; a < nd; ++a)
        for (int b = 0; b < nd; ++b) Rdd(a, b) = model.routing(down[static_cast<size_t>(a)], down[static_cast<size_t>(b)]);
    // Absorption through the down set: N = (Id - R_{DxD})^{-1}.
    Eigen::MatrixXd N = (Eigen::MatrixXd::Identity(nd, nd) - Rdd).partialPivLu().solve(Eigen::MatrixXd::Identity(nd, nd));
    if (!N.allFinite()) throw ValidationError("skipping: (Id - R_DxD) is singular");

    int dim = static_cast<int>(up.size());
    Eigen::MatrixXd out(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            double value = model.routing(up[static_cast<size_t>(i)], up[static_cast<size_t>(j)]);
            for (int a = 0; a < nd; ++a)
                for (int b = 0; b < nd; ++b)
                    value += model.routing(up[static_cast<size_t>(i)], down[static_cast<size_t>(a)]) * N(a, b) *
                             model.routing(down[static_cast<size_t>(b)], up[static_cast<size_t>(j)]);
            out(i, j) = value;
        }
    }
    return out;
}

Eigen::MatrixXd rsrd_matrix(const NetworkModel& model, Subset D) {
    auto up = up_nodes_with_exterior(model.J, D);
    int dim = static_cast<int>(up.size());
    Eigen::MatrixXd out(dim, dim);
    for (int i = 0; i < dim; ++i) {
        int gi = up[static_cast<size_t>(i)];
        for (int j = 0; j < dim; ++j) {
            int gj = up[static_cast<size_t>(j)];
            out(i, j) = model.routing(gi, gj);
        }
        // Mass aimed at down nodes is retried at the current node (row 0: rejected).
        double redirected = 0.0;
        for (int k = 1; k <= model.J; ++k)
            if (contains(D, k)) redirected += model.routing(gi, k);
        out(i, i) += redirected;
    }
    return out;
}

}  // namespace

Eigen::MatrixXd derive_rerouting(const NetworkModel& model, Subset D) {
    if (D == 0) {
        if (model.rerouting.kind == ReroutingKind::Explicit) {
            auto it = model.rerouting.matrices.find(0);
            if (it != model.rerouting.matrices.end()) return it->second;
        }
        return model.routing;
    }
    switch (model.rerouting.kind) {
        case ReroutingKind::Stalling:
            return Eigen::MatrixXd::Identity(model.J + 1 - popcount(D), model.J + 1 - popcount(D));
        case ReroutingKind::Skipping:
            return skipping_matrix(model, D);
        case ReroutingKind::Rsrd: {
            auto traffic = solve_traffic(model.routing, model.lambda);
            if (!reversibility_check(model.routing, traffic.xi))
                throw ValidationError("rsrd rerouting requires a routing matrix reversible w.r.t. xi");
            return rsrd_matrix(model, D);
        }
        case ReroutingKind::Explicit: {
            auto it = model.rerouting.matrices.find(D);
            if (it == model.rerouting.matrices.end())
                throw ValidationError("explicit rerouting matrix missing for " + subset_to_string(D, model.J));
            return it->second;
        }
    }
    throw std::logic_error("unreachable rerouting kind");
}

ReroutingCheck verify_rerouting(const NetworkModel& model, Subset D) {
    auto traffic = solve_traffic(model.routing, model.lambda);
    auto nodes = up_nodes_with_exterior(model.J, D);
    Eigen::MatrixXd RD = derive_rerouting(model, D);
    ReroutingCheck check;
    check.residual = 0.0;
    for (size_t j = 1; j < nodes.size(); ++j) {
        double eta_j = traffic.eta(nodes[j] - 1);
        double rhs = model.lambda * RD(0, static_cast<int>(j));
        for (size_t i = 1; i < nodes.size(); ++i)
            rhs += traffic.eta(nodes[i] - 1) * RD(static_cast<int>(i), static_cast<int>(j));
        double rel = std::abs(eta_j - rhs) / std::max(1.0, std::abs(eta_j));
        check.residual = std::max(check.residual, rel);
    }
    check.ok = check.residual < 1e-10;
    return check;
}

Eigen::VectorXd extended_xi(const NetworkModel& model, Subset D) {
    auto traffic = solve_traffic(model.routing, model.lambda);
    auto nodes = up_nodes_with_exterior(model.J, D);
    Eigen::VectorXd xi(nodes.size());
    xi(0) = model.lambda;
    for (size_t i = 1; i < nodes.size(); ++i) xi(static_cast<int>(i)) = traffic.eta(nodes[i] - 1);
    return xi / xi.sum();
}

bool reversibility_check(const Eigen::MatrixXd& R, const Eigen::VectorXd& xi, double tol) {
    int n = static_cast<int>(R.rows());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (std::abs(xi(i) * R(i, j) - xi(j) * R(j, i)) > tol) return false;
    return true;
}

ReroutingFamily::ReroutingFamily(const NetworkModel& model)
    : model_(&model), traffic_(solve_traffic(model.routing, model.lambda)) {}

const ReroutingFamily::Entry& ReroutingFamily::entry(Subset D) const {
    {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(D);
        if (it != cache_.end()) return it->second;
    }
    Entry e;
    e.routing.nodes = up_nodes_with_exterior(model_->J, D);
    e.routing.R = derive_rerouting(*model_, D);
    Eigen::VectorXd xi(e.routing.dim());
    xi(0) = model_->lambda;
    for (int i = 1; i < e.routing.dim(); ++i) xi(i) = traffic_.eta(e.routing.nodes[static_cast<size_t>(i)] - 1);
    e.xi = xi / xi.sum();

    std::lock_guard lock(mutex_);
    return cache_.try_emplace(D, std::move(e)).first->second;
}

const LevelRouting& ReroutingFamily::level(Subset D) const { return entry(D).routing; }

const Eigen::VectorXd& ReroutingFamily::xi(Subset D) const { return entry(D).xi; }

}  // namespace qnet
