#include "qnet/ordering.hpp"

#include <cmath>

namespace qnet {

namespace {

constexpr double kEntryTol = 1e-12;
constexpr double kEigTol = 1e-10;

// Unique normalized solution of xM = x if it exists; empty otherwise.
Eigen::VectorXd fixed_vector(const Eigen::MatrixXd& M) {
    const int n = static_cast<int>(M.rows());
    Eigen::MatrixXd A = M.transpose() - Eigen::MatrixXd::Identity(n, n);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    lu.setThreshold(1e-10);
    if (lu.dimensionOfKernel() != 1) return {};
    Eigen::VectorXd v = lu.kernel().col(0);
    double s = v.sum();
    if (std::abs(s) < 1e-12) return {};
    return v / s;
}

void check_common_fixed_vector(const Eigen::MatrixXd& R, const Eigen::MatrixXd& Rp) {
    if (R.rows() != Rp.rows() || R.cols() != Rp.cols() || R.rows() != R.cols())
        throw ValidationError("order test: dimension mismatch");
    Eigen::VectorXd xi = fixed_vector(R);
    if (xi.size() == 0) xi = fixed_vector(Rp);
    if (xi.size() == 0) return;  // neither has a unique fixed vector, nothing to compare
    double ra = (xi.transpose() * R - xi.transpose()).cwiseAbs().maxCoeff();
    double rb = (xi.transpose() * Rp - xi.transpose()).cwiseAbs().maxCoeff();
    if (ra > 1e-8 || rb > 1e-8) throw ValidationError("order test: fixed vectors differ");
}

OrderVerdict entrywise_below(const Eigen::MatrixXd& R, const Eigen::MatrixXd& Rp) {
    OrderVerdict v;
    v.holds = true;
    for (int i = 0; i < R.rows(); ++i) {
        for (int j = 0; j < R.cols(); ++j) {
            if (i == j) continue;
            double excess = Rp(i, j) - R(i, j);
            if (excess > kEntryTol && excess > v.witness_delta) {
                v.holds = false;
                v.witness_row = i;
                v.witness_col = j;
                v.witness_delta = excess;
            }
        }
    }
    return v;
}

OrderVerdict weighted_psd(const Eigen::MatrixXd& diff, const Eigen::VectorXd& w, bool weighted) {
    Eigen::MatrixXd M = weighted ? Eigen::MatrixXd(w.asDiagonal() * diff) : diff;
    Eigen::MatrixXd S = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    OrderVerdict v;
    v.min_eigenvalue = es.eigenvalues().minCoeff();
    v.holds = v.min_eigenvalue >= -kEigTol;
    return v;
}

}  // namespace

OrderVerdict peskun_matrix(const Eigen::MatrixXd& R, const Eigen::MatrixXd& Rp) {
    check_common_fixed_vector(R, Rp);
    return entrywise_below(R, Rp);
}

OrderVerdict pd_matrix(const Eigen::MatrixXd& R, const Eigen::MatrixXd& Rp, const Eigen::VectorXd& xi,
                       bool weighted) {
    if (R.rows() != Rp.rows() || R.rows() != xi.size())
        throw ValidationError("order test: dimension mismatch");
    if ((xi.transpose() * R - xi.transpose()).cwiseAbs().maxCoeff() > 1e-8 ||
        (xi.transpose() * Rp - xi.transpose()).cwiseAbs().maxCoeff() > 1e-8)
        throw ValidationError("order test: xi is not fixed by both kernels");
    return weighted_psd(R - Rp, xi, weighted);
}

OrderVerdict peskun_generator(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Qp) {
    if (Q.rows() != Qp.rows() || Q.rows() != Q.cols()) throw ValidationError("order test: dimension mismatch");
    return entrywise_below(Q, Qp);
}

OrderVerdict pd_generator(const Eigen::MatrixXd& Q, const Eigen::MatrixXd& Qp, const Eigen::VectorXd& pi) {
    if (Q.rows() != Qp.rows() || Q.rows() != pi.size()) throw ValidationError("order test: dimension mismatch");
    if ((pi.transpose() * Q).cwiseAbs().maxCoeff() > 1e-8 || (pi.transpose() * Qp).cwiseAbs().maxCoeff() > 1e-8)
        throw ValidationError("order test: pi is not stationary for both generators");
    return weighted_psd(Q - Qp, pi, true);
}

OrderTable order_all_levels(const PreparedModel& a, const PreparedModel& b) {
    if (a.J() != b.J()) throw ValidationError("order test: dimension mismatch");
    if ((a.traffic().eta - b.traffic().eta).cwiseAbs().maxCoeff() > 1e-10)
        throw ValidationError("order test: traffic solutions differ");
    if ((a.env().pi_hat - b.env().pi_hat).cwiseAbs().maxCoeff() > 1e-12)
        throw ValidationError("order test: environment laws differ");

    OrderTable table;
    table.peskun_all = true;
    table.gap_hypotheses_hold = true;
    for (Subset d : a.env().support) {
        const auto& la = a.rerouting().level(d);
        const auto& lb = b.rerouting().level(d);
        const auto& xi = a.rerouting().xi(d);
        LevelVerdict lv;
        lv.D = d;
        lv.peskun = entrywise_below(la.R, lb.R);
        lv.pd = weighted_psd(lb.R - la.R, xi, true);
        table.peskun_all = table.peskun_all && lv.peskun.holds;
        table.gap_hypotheses_hold = table.gap_hypotheses_hold && lv.pd.holds;
        table.levels.push_back(lv);
    }
    return table;
}

}  // namespace qnet
