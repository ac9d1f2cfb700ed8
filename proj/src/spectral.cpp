#include "qnet/spectral.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <cmath>
#include <random>

#include "qnet/routing.hpp"

namespace qnet {

namespace {

constexpr int kDenseLimit = 3000;

// Smallest eigenvalue of a psd sparse matrix orthogonal to a known kernel vector,
// by deflated inverse iteration with conjugate-gradient solves.
double smallest_deflated_eig(const Eigen::SparseMatrix<double, Eigen::RowMajor>& S, const Eigen::VectorXd& kernel) {
    const auto n = S.rows();
    Eigen::VectorXd v = kernel.normalized();
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = u(rng);
    x -= v.dot(x) * v;
    x.normalize();

    Eigen::ConjugateGradient<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::Lower | Eigen::Upper> cg;
    cg.compute(S);
    cg.setTolerance(1e-13);
    cg.setMaxIterations(40 * n);

    double lam = x.dot(S * x);
    double prev = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 400; ++iter) {
        Eigen::VectorXd guess = x / std::max(lam, 1e-12);
        Eigen::VectorXd y = cg.solveWithGuess(x, guess);
        y -= v.dot(y) * v;
        double norm = y.norm();
        if (!(norm > 0.0) || !std::isfinite(norm)) throw ValidationError("gap eigensolve failed to converge");
        y /= norm;
        lam = y.dot(S * y);
        x = y;
        if (std::abs(lam - prev) <= 1e-11 * std::max(1.0, std::abs(lam))) break;
        prev = lam;
    }
    if (!std::isfinite(lam)) throw ValidationError("gap eigensolve failed to converge");
    return lam;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> symmetrized(const TruncatedChain& chain, const Eigen::VectorXd& p) {
    if (p.minCoeff() <= 0.0) throw ValidationError("gap: stationary vector has nonpositive mass");
    Eigen::VectorXd sq = p.cwiseSqrt();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(chain.Q.nonZeros()) * 2);
    for (int row = 0; row < chain.Q.outerSize(); ++row) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(chain.Q, row); it; ++it) {
            if (it.row() == it.col()) {
                trips.emplace_back(it.row(), it.col(), -it.value());
            } else {
                double val = -0.5 * it.value() * sq(it.row()) / sq(it.col());
                trips.emplace_back(it.row(), it.col(), val);
                trips.emplace_back(it.col(), it.row(), val);
            }
        }
    }
    Eigen::SparseMatrix<double, Eigen::RowMajor> S(chain.Q.rows(), chain.Q.cols());
    S.setFromTriplets(trips.begin(), trips.end());
    return S;
}

}  // namespace

double dirichlet(const PreparedModel& pm, const Observable& f) {
    return -corr_formula(pm, f, f, CorrForm::Expanded);
}

double rayleigh_upper(const PreparedModel& pm, const Observable& f) {
    double var = variance(pm, f);
    if (var <= 1e-14) throw ValidationError("rayleigh_upper: observable has zero variance");
    return dirichlet(pm, f) / var;
}

double gap_of_chain(const TruncatedChain& chain, const Eigen::VectorXd& p) {
    auto S = symmetrized(chain, p);
    Eigen::VectorXd kernel = p.cwiseSqrt();
    if (S.rows() <= kDenseLimit) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(S), Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw ValidationError("gap eigensolve failed to converge");
        return es.eigenvalues()(1);
    }
    return smallest_deflated_eig(S, kernel);
}

double gap_truncated(const PreparedModel& pm, int N) {
    auto chain = build_truncated(pm, N);
    auto p = truncated_stationary(chain);
    return gap_of_chain(chain, p);
}

double gap_env(const EnvironmentChain& chain) {
    const auto& support = chain.support;
    const int m = static_cast<int>(support.size());
    if (m < 2) return 0.0;
    Eigen::MatrixXd S(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            if (i == j) {
                S(i, j) = -chain.rate(support[i], support[i]);
            } else {
                double w = std::sqrt(chain.pi_hat(support[i]) / chain.pi_hat(support[j]));
                S(i, j) = -chain.rate(support[i], support[j]) * w;
            }
        }
    }
    Eigen::MatrixXd sym = 0.5 * (S + S.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(1);
}

double gap_env(const PreparedModel& pm) { return gap_env(pm.env()); }

bool check_overall_balance(const NetworkModel& model, Subset D) {
    auto sol = solve_traffic(model.routing, model.lambda);
    auto R = derive_rerouting(model, D);
    std::vector<int> nodes{0};
    for (int j = 1; j <= model.J; ++j)
        if (!contains(D, j)) nodes.push_back(j);
    const int dim = static_cast<int>(nodes.size());
    for (int a = 1; a < dim; ++a) {
        double lhs = 0.0, rhs = 0.0;
        for (int b = 1; b < dim; ++b) {
            lhs += sol.eta(nodes[a] - 1) * R(a, b);
            rhs += sol.eta(nodes[b] - 1) * R(b, a);
        }
        if (std::abs(lhs - rhs) > 1e-10 * std::max(1.0, std::abs(lhs))) return false;
    }
    return true;
}

NetworkModel bd_comparison(const NetworkModel& model) {
    EnvironmentChain chain = env_chain(model.environment, model.J);
    NetworkModel out = model;
    out.rerouting.kind = ReroutingKind::Explicit;
    out.rerouting.matrices.clear();

    for (Subset d : chain.support) {
        auto R = derive_rerouting(model, d);
        std::vector<int> nodes{0};
        for (int j = 1; j <= model.J; ++j)
            if (!contains(d, j)) nodes.push_back(j);
        const int dim = static_cast<int>(nodes.size());
        for (int a = 1; a < dim; ++a) {
            if (R(0, a) <= 0.0 || R(a, 0) <= 0.0)
                throw ValidationError("bd_comparison: node " + std::to_string(nodes[a]) +
                                      " lacks a direct exterior connection at level " + subset_to_string(d, model.J));
        }
        if (!check_overall_balance(model, d))
            throw ValidationError("bd_comparison: overall balance fails at level " + subset_to_string(d, model.J));

        Eigen::MatrixXd Rp = Eigen::MatrixXd::Zero(dim, dim);
        Rp.row(0) = R.row(0);
        for (int a = 1; a < dim; ++a) {
            Rp(a, 0) = R(a, 0);
            Rp(a, a) = 1.0 - R(a, 0);
        }
        if (d == 0)
            out.routing = Rp;
        else
            out.rerouting.matrices[d] = Rp;
    }
    out.validate();
    return out;
}

double van_doorn(double lambda_birth, double mu_death) {
    if (lambda_birth <= 0.0 || mu_death <= 0.0) throw ValidationError("van_doorn: rates must be positive");
    double d = std::sqrt(mu_death) - std::sqrt(lambda_birth);
    return d * d;
}

std::pair<double, double> symmetric_bounds(int J, double lambda, double mu, double p) {
    if (J < 2 || lambda <= 0.0 || mu <= 0.0 || p <= 0.0 || p * (J - 1) >= 1.0 || p * (J - 2) >= 1.0)
        throw ValidationError("symmetric_bounds: parameters outside the closed-form domain");
    double lower = van_doorn(lambda / J, mu * (1.0 - p * (J - 1)));
    double upper = (1.0 + p) / (1.0 - p * (J - 2)) * lower;
    return {lower, upper};
}

std::optional<std::pair<double, double>> detect_symmetric_bounds(const NetworkModel& model) {
    const int J = model.J;
    if (J < 2 || model.environment.has_breakdowns()) return std::nullopt;
    const double tol = 1e-12;
    double mu = model.service[0].top();
    for (const auto& s : model.service)
        if (s.rates.size() != 1 || std::abs(s.top() - mu) > tol) return std::nullopt;
    double p = model.routing(1, 2);
    for (int i = 1; i <= J; ++i) {
        if (std::abs(model.routing(0, i) - 1.0 / J) > tol) return std::nullopt;
        if (std::abs(model.routing(i, i)) > tol) return std::nullopt;
        if (std::abs(model.routing(i, 0) - (1.0 - p * (J - 1))) > tol) return std::nullopt;
        for (int j = 1; j <= J; ++j)
            if (i != j && std::abs(model.routing(i, j) - p) > tol) return std::nullopt;
    }
    if (p <= 0.0 || p * (J - 1) >= 1.0 || p * (J - 2) >= 1.0) return std::nullopt;
    return symmetric_bounds(J, model.lambda, mu, p);
}

GapReport gap_report(const PreparedModel& pm, const std::vector<int>& levels,
                     const std::vector<Observable>& candidates) {
    GapReport report;
    for (int N : levels) {
        report.levels.push_back(N);
        report.gap_estimates.push_back(gap_truncated(pm, N));
    }
    for (const auto& f : candidates) report.rayleigh.emplace_back(f.str(), rayleigh_upper(pm, f));
    if (pm.model().environment.has_breakdowns()) {
        report.env_gap = gap_env(pm);
        report.has_env_gap = true;
    }
    report.closed_bounds = detect_symmetric_bounds(pm.model());
    return report;
}

}  // namespace qnet
