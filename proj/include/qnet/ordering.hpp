#pragma once

#include <Eigen/Dense>
#include <vector>

#include "qnet/statespace.hpp"

namespace qnet {

/// Outcome of an order test. For entrywise (Peskun) failures the witness is the
/// worst violating entry; for the semidefinite tests it is the minimal eigenvalue
/// of the symmetrized weighted form.
struct OrderVerdict {
    bool holds = false;
    double min_eigenvalue = 0.0;  // pd tests only
    int witness_row = -1;         // Peskun failures only
    int witness_col = -1;
    double witness_delta = 0.0;
};

/// Tests R' entrywise below R off the diagonal (R' Peskun-smaller). Both must be
/// stochastic with a common fixed vector; the shared fixed vector is validated
/// when it is unique.
OrderVerdict peskun_matrix(const Eigen::MatrixXd& R, const Eigen::MatrixXd& Rp);

/// Tests R - R' positive semidefinite on L^2(xi), i.e. R' below R in the
/// semidefinite order. Set weighted = false for the plain Euclidean reading.
OrderVerdict pd_matrix(const Eigen::MatrixXd& R, const Eigen::MatrixXd& Rp, const Eigen::VectorXd& xi,
                       bool weighted = true);

/// Same tests for conservative generators sharing a stationary law.
OrderVerdict peskun_generator(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Qp);
OrderVerdict pd_generator(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Qp, const Eigen::VectorXd& pi);

struct LevelVerdict {
    Subset D = 0;
    OrderVerdict peskun;  // R'^D below R^D entrywise
    OrderVerdict pd;      // R'^D - R^D psd on L^2(xi^D), the gap-comparison hypothesis
};

struct OrderTable {
    std::vector<LevelVerdict> levels;
    bool peskun_all = false;
    bool gap_hypotheses_hold = false;  // pd at every level with positive environment mass
};

/// Per-level verdicts for a valid routing-difference pair (a = reference, b = comparison).
OrderTable order_all_levels(const PreparedModel& a, const PreparedModel& b);

}  // namespace qnet
