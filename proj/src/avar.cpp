#include "qnet/avar.hpp"

#include <cmath>

#include "qnet/routing.hpp"

namespace qnet {

namespace {

double max_exit_rate(const TruncatedChain& chain) {
    double m = 0.0;
    for (int row = 0; row < chain.Q.outerSize(); ++row)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(chain.Q, row); it; ++it)
            if (it.row() == it.col()) m = std::max(m, -it.value());
    return m;
}

Eigen::VectorXd centered(const UniformizedKernel& kernel, const Eigen::VectorXd& f) {
    return f - Eigen::VectorXd::Constant(f.size(), kernel.p.dot(f));
}

double weighted_dot(const Eigen::VectorXd& p, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (p.array() * a.array() * b.array()).sum();
}

}  // namespace

UniformizedKernel uniformize(const TruncatedChain& chain, std::optional<double> epsilon) {
    UniformizedKernel out;
    double maxdiag = max_exit_rate(chain);
    if (maxdiag <= 0.0) {
        out.epsilon = epsilon.value_or(1.0);
    } else {
        out.epsilon = epsilon.value_or(1.0 / (2.0 * maxdiag));
        if (out.epsilon * maxdiag > 1.0 + 1e-12)
            throw ValidationError("uniformize: epsilon too large, kernel would have a negative entry");
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> id(chain.Q.rows(), chain.Q.cols());
    id.setIdentity();
    out.K = id + out.epsilon * chain.Q;
    out.p = truncated_stationary(chain);
    return out;
}

double avar_exact(const UniformizedKernel& kernel, const Eigen::VectorXd& f) {
    const auto n = kernel.K.rows();
    if (f.size() != n) throw ValidationError("avar: observable vector has wrong length");
    Eigen::VectorXd f0 = centered(kernel, f);
    // (Id - K + 1 p^T) h = f0 gives the mean-zero Poisson solution
    Eigen::MatrixXd A = Eigen::MatrixXd(kernel.K) * -1.0;
    A.diagonal().array() += 1.0;
    A.noalias() += Eigen::VectorXd::Ones(n) * kernel.p.transpose();
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    Eigen::VectorXd h = lu.solve(f0);
    if (((A * h) - f0).cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, f0.cwiseAbs().maxCoeff()))
        throw ValidationError("avar: Poisson solve failed (kernel reducible?)");
    return 2.0 * weighted_dot(kernel.p, f0, h) - weighted_dot(kernel.p, f0, f0);
}

double avar_exact(const UniformizedKernel& kernel, const TruncatedChain& chain, const Observable& f) {
    Eigen::VectorXd fv(chain.size());
    for (long long i = 0; i < chain.size(); ++i) {
        State s = chain.state_of(i);
        fv(i) = f.eval(s);
    }
    return avar_exact(kernel, fv);
}

double avar_series(const UniformizedKernel& kernel, const Eigen::VectorXd& f) {
    Eigen::VectorXd f0 = centered(kernel, f);
    double base = weighted_dot(kernel.p, f0, f0);
    double scale = std::sqrt(std::max(base, 1e-300));
    double acc = base;
    Eigen::VectorXd g = f0;
    for (long iter = 0; iter < 2000000; ++iter) {
        g = kernel.K * g;
        acc += 2.0 * weighted_dot(kernel.p, f0, g);
        double norm = std::sqrt(std::max(weighted_dot(kernel.p, g, g), 0.0));
        if (norm <= 1e-12 * scale) return acc;
    }
    throw ValidationError("avar: geometric series did not contract");
}

AvarComparison avar_compare(const PreparedModel& a, const PreparedModel& b, const Observable& f,
                            std::optional<double> epsilon, int N) {
    if (a.J() != b.J() || std::abs(a.model().lambda - b.model().lambda) > 1e-12)
        throw ValidationError("avar_compare: lambda or J mismatch");
    if ((a.traffic().eta - b.traffic().eta).cwiseAbs().maxCoeff() > 1e-10)
        throw ValidationError("avar_compare: traffic solutions differ");
    if ((a.env().pi_hat - b.env().pi_hat).cwiseAbs().maxCoeff() > 1e-12)
        throw ValidationError("avar_compare: environment laws differ");
    for (Subset d : a.env().support) {
        if (!reversibility_check(a.rerouting().level(d).R, a.rerouting().xi(d), 1e-9) ||
            !reversibility_check(b.rerouting().level(d).R, b.rerouting().xi(d), 1e-9))
            throw ValidationError("avar_compare: routing not reversible at level " + subset_to_string(d, a.J()));
    }

    auto chain_a = build_truncated(a, N);
    auto chain_b = build_truncated(b, N);
    double maxdiag = std::max(max_exit_rate(chain_a), max_exit_rate(chain_b));
    double eps = epsilon.value_or(maxdiag > 0.0 ? 1.0 / (2.0 * maxdiag) : 1.0);

    auto ka = uniformize(chain_a, eps);
    auto kb = uniformize(chain_b, eps);
    if ((ka.p - kb.p).cwiseAbs().maxCoeff() > 1e-8)
        throw ValidationError("avar_compare: truncated stationary laws differ");

    AvarComparison out;
    out.epsilon = eps;
    out.value_a = avar_exact(ka, chain_a, f);
    out.value_b = avar_exact(kb, chain_b, f);
    out.ordered = out.value_a >= out.value_b - 1e-9 * (1.0 + std::abs(out.value_a));
    return out;
}

}  // namespace qnet
