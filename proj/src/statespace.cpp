#include "qnet/statespace.hpp"

#include <Eigen/SparseLU>
#include <cmath>

namespace qnet {

double MarginalLaw::weight(int k) const {
    if (k <= 0) return 1.0;
    if (eta <= 0.0) return 0.0;
    int K = service.constant_after;
    double w = 1.0;
    for (int i = 1; i <= std::min(k, K); ++i) w *= eta / service.at(i);
    if (k > K) w *= std::pow(rho, k - K);
    return w;
}

double MarginalLaw::tail(int L) const {
    if (L <= 0) return 1.0;
    if (eta <= 0.0) return 0.0;
    int K = service.constant_after;
    if (L >= K) return weight(K) * std::pow(rho, L - K) / (1.0 - rho) / C;
    double sum = weight(K) / (1.0 - rho);
    for (int k = L; k < K; ++k) sum += weight(k);
    return sum / C;
}

MarginalLaw marginal_law(double eta, const ServiceRateFn& service) {
    MarginalLaw law;
    law.eta = eta;
    law.service = service;
    if (eta <= 0.0) {
        law.rho = 0.0;
        law.C = 1.0;
        return law;
    }
    law.rho = eta / service.top();
    if (law.rho >= 1.0)
        throw ValidationError("non-ergodic node: eta/mu = " + std::to_string(law.rho) + " >= 1");
    int K = service.constant_after;
    double sum = 0.0;
    for (int k = 0; k < K; ++k) sum += law.weight(k);
    law.C = sum + law.weight(K) / (1.0 - law.rho);
    return law;
}

PreparedModel::PreparedModel(NetworkModel model) : model_(std::move(model)) {
    model_.validate();
    env_ = env_chain(model_.environment, model_.J);
    rerouting_ = std::make_unique<ReroutingFamily>(model_);
    for (int j = 1; j <= model_.J; ++j)
        marginals_.push_back(marginal_law(traffic().eta(j - 1), model_.service[static_cast<size_t>(j - 1)]));
}

double PreparedModel::joint_pi(Subset down, std::span<const int> queues) const {
    double p = env_.pi_hat(down);
    for (int j = 1; j <= model_.J; ++j) p *= marginal(j).pmf(queues[static_cast<size_t>(j - 1)]);
    return p;
}

double balance_residual(const PreparedModel& pm, const State& s) {
    const auto& model = pm.model();
    const auto& env = pm.env();
    const auto& level = pm.rerouting().level(s.down);
    double lambda = model.lambda;

    double inflow = 0.0;
    double exit_rate = 0.0;
    std::vector<int> m = s.queues;

    for (int a = 1; a < level.dim(); ++a) {
        int j = level.nodes[static_cast<size_t>(a)];
        double mu_here = model.service[static_cast<size_t>(j - 1)].at(s.queues[static_cast<size_t>(j - 1)]);
        // exit: admitted arrival at j, departures/transfers from j
        exit_rate += lambda * level.R(0, a);
        exit_rate += mu_here * level.R(a, 0);
        for (int b = 1; b < level.dim(); ++b)
            if (b != a) exit_rate += mu_here * level.R(a, b);

        // inflow: arrival completing at j (from n - e_j)
        if (s.queues[static_cast<size_t>(j - 1)] >= 1) {
            m[static_cast<size_t>(j - 1)] -= 1;
            inflow += pm.joint_pi(s.down, m) * lambda * level.R(0, a);
            m[static_cast<size_t>(j - 1)] += 1;
        }
        // inflow: departure from j (from n + e_j)
        {
            m[static_cast<size_t>(j - 1)] += 1;
            double mu_src = model.service[static_cast<size_t>(j - 1)].at(m[static_cast<size_t>(j - 1)]);
            inflow += pm.joint_pi(s.down, m) * mu_src * level.R(a, 0);
            // inflow: transfer j -> i (from n + e_j - e_i)
            for (int b = 1; b < level.dim(); ++b) {
                if (b == a) continue;
                int i = level.nodes[static_cast<size_t>(b)];
                if (s.queues[static_cast<size_t>(i - 1)] < 1) continue;
                m[static_cast<size_t>(i - 1)] -= 1;
                inflow += pm.joint_pi(s.down, m) * mu_src * level.R(a, b);
                m[static_cast<size_t>(i - 1)] += 1;
            }
            m[static_cast<size_t>(j - 1)] -= 1;
        }
    }

    // environment jumps
    for (Subset h : env.support) {
        if (h == s.down) continue;
        exit_rate += env.rate(s.down, h);
        double q_in = env.rate(h, s.down);
        if (q_in != 0.0) inflow += pm.joint_pi(h, s.queues) * q_in;
    }

    double pi_here = pm.joint_pi(s.down, s.queues);
    double residual = inflow - pi_here * exit_rate;
    double scale = std::max(pi_here * exit_rate, 1e-300);
    return std::abs(residual) / scale;
}

double lumped_expectation(const PreparedModel& pm, const std::vector<int>& levels,
                          const std::function<double(Subset, std::span<const int>)>& h) {
    int J = pm.J();
    if (static_cast<int>(levels.size()) != J) throw ValidationError("lumped_expectation: levels must have J entries");

    // per-coordinate weights: pmf below the top level, tail mass at the top
    std::vector<std::vector<double>> w(static_cast<size_t>(J));
    for (int j = 1; j <= J; ++j) {
        int L = levels[static_cast<size_t>(j - 1)];
        auto& wj = w[static_cast<size_t>(j - 1)];
        wj.resize(static_cast<size_t>(L) + 1);
        for (int k = 0; k < L; ++k) wj[static_cast<size_t>(k)] = pm.marginal(j).pmf(k);
        wj[static_cast<size_t>(L)] = pm.marginal(j).tail(L);
    }

    std::vector<int> n(static_cast<size_t>(J), 0);
    double total = 0.0;
    for (Subset d : pm.env().support) {
        double pid = pm.env().pi_hat(d);
        if (pid <= 0.0) continue;
        std::fill(n.begin(), n.end(), 0);
        for (;;) {
            double weight = pid;
            for (int j = 0; j < J; ++j) weight *= w[static_cast<size_t>(j)][static_cast<size_t>(n[static_cast<size_t>(j)])];
            if (weight != 0.0) total += weight * h(d, n);
            int j = 0;
            while (j < J && n[static_cast<size_t>(j)] == levels[static_cast<size_t>(j)]) {
                n[static_cast<size_t>(j)] = 0;
                ++j;
            }
            if (j == J) break;
            ++n[static_cast<size_t>(j)];
        }
    }
    return total;
}

long long TruncatedChain::index_of(Subset d, std::span<const int> n) const {
    long long pos = subset_pos[d];
    long long idx = pos;
    for (int j = 0; j < J; ++j) idx = idx * (N + 1) + n[static_cast<size_t>(j)];
    return idx;
}

State TruncatedChain::state_of(long long idx) const {
    State s;
    s.queues.assign(static_cast<size_t>(J), 0);
    for (int j = J - 1; j >= 0; --j) {
        s.queues[static_cast<size_t>(j)] = static_cast<int>(idx % (N + 1));
        idx /= (N + 1);
    }
    s.down = subsets[static_cast<size_t>(idx)];
    return s;
}

TruncatedChain build_truncated(const PreparedModel& pm, int N) {
    const auto& model = pm.model();
    const auto& env = pm.env();
    TruncatedChain chain;
    chain.J = model.J;
    chain.N = N;
    chain.subsets = env.support;
    chain.subset_pos.assign(size_t{1} << model.J, -1);
    for (size_t i = 0; i < chain.subsets.size(); ++i) chain.subset_pos[chain.subsets[i]] = static_cast<int>(i);

    long long box = 1;
    for (int j = 0; j < model.J; ++j) box *= (N + 1);
    long long count = box * static_cast<long long>(chain.subsets.size());
    if (count > 5'000'000) throw ValidationError("truncated chain too large: " + std::to_string(count) + " states");

    std::vector<Eigen::Triplet<double>> trips;
    std::vector<int> n(static_cast<size_t>(model.J), 0);
    for (size_t sp = 0; sp < chain.subsets.size(); ++sp) {
        Subset d = chain.subsets[sp];
        const auto& level = pm.rerouting().level(d);
        std::fill(n.begin(), n.end(), 0);
        for (;;) {
            long long from = chain.index_of(d, n);
            double out_total = 0.0;
            auto add = [&](long long to, double rate) {
                if (rate <= 0.0) return;
                trips.emplace_back(static_cast<int>(from), static_cast<int>(to), rate);
                out_total += rate;
            };
            for (int a = 1; a < level.dim(); ++a) {
                int j = level.nodes[static_cast<size_t>(a)];
                int& nj = n[static_cast<size_t>(j - 1)];
                double mu = model.service[static_cast<size_t>(j - 1)].at(nj);
                if (nj < N) {
                    nj += 1;
                    add(chain.index_of(d, n), model.lambda * level.R(0, a));
                    nj -= 1;
                }
                if (nj > 0) {
                    nj -= 1;
                    add(chain.index_of(d, n), mu * level.R(a, 0));
                    for (int b = 1; b < level.dim(); ++b) {
                        if (b == a) continue;
                        int i = level.nodes[static_cast<size_t>(b)];
                        int& ni = n[static_cast<size_t>(i - 1)];
                        if (ni < N) {
                            ni += 1;
                            add(chain.index_of(d, n), mu * level.R(a, b));
                            ni -= 1;
                        }
                    }
                    nj += 1;
                }
            }
            for (Subset h : env.support) {
                if (h == d) continue;
                add(chain.index_of(h, n), env.rate(d, h));
            }
            if (out_total > 0.0) trips.emplace_back(static_cast<int>(from), static_cast<int>(from), -out_total);

            int j = 0;
            while (j < model.J && n[static_cast<size_t>(j)] == N) {
                n[static_cast<size_t>(j)] = 0;
                ++j;
            }
            if (j == model.J) break;
            ++n[static_cast<size_t>(j)];
        }
    }
    chain.Q.resize(static_cast<int>(count), static_cast<int>(count));
    chain.Q.setFromTriplets(trips.begin(), trips.end());
    return chain;
}

Eigen::VectorXd truncated_stationary(const TruncatedChain& chain) {
    int n = static_cast<int>(chain.size());
    // pQ = 0 with normalization: transpose the generator, overwrite the first
    // equation with sum(p) = 1.
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < chain.Q.outerSize(); ++k)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(chain.Q, k); it; ++it)
            if (it.col() != 0) trips.emplace_back(static_cast<int>(it.col()), static_cast<int>(it.row()), it.value());
    for (int x = 0; x < n; ++x) trips.emplace_back(0, x, 1.0);

    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(0) = 1.0;

    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver;
    solver.compute(A);
    if (solver.info() != Eigen::Success) throw ValidationError("truncated stationary solve failed (reducible chain?)");
    Eigen::VectorXd p = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !p.allFinite())
        throw ValidationError("truncated stationary solve failed");
    p /= p.sum();
    Eigen::VectorXd residual = chain.Q.transpose() * p;
    if (residual.cwiseAbs().maxCoeff() > 1e-8)
        throw ValidationError("truncated stationary residual too large");
    return p;
}

}  // namespace qnet
