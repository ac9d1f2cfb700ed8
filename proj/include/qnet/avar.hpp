#pragma once

#include <optional>

#include "qnet/observable.hpp"
#include "qnet/statespace.hpp"

namespace qnet {

/// Discrete sampling kernel K = Id + epsilon * Q over a truncated chain,
/// stochastic by choice of epsilon, sharing the chain's stationary vector.
struct UniformizedKernel {
    double epsilon = 0.0;
    Eigen::SparseMatrix<double, Eigen::RowMajor> K;
    Eigen::VectorXd p;  // stationary law
};

/// Default epsilon = 1 / (2 max |q(x,x)|); a supplied epsilon may not exceed
/// 1 / max |q(x,x)|.
UniformizedKernel uniformize(const TruncatedChain& chain, std::optional<double> epsilon = std::nullopt);

/// Limiting variance of sqrt(m) * (mean of f over m kernel steps), computed by
/// solving the Poisson equation: v = 2<f0,h>_p - <f0,f0>_p with (Id-K)h = f0.
double avar_exact(const UniformizedKernel& kernel, const Eigen::VectorXd& f);
double avar_exact(const UniformizedKernel& kernel, const TruncatedChain& chain, const Observable& f);

/// Same value by the truncated geometric series Var(f0) + 2 sum_k <f0, K^k f0>_p,
/// stopped at contraction tolerance 1e-12. Cross-check route.
double avar_series(const UniformizedKernel& kernel, const Eigen::VectorXd& f);

struct AvarComparison {
    double epsilon = 0.0;
    double value_a = 0.0;
    double value_b = 0.0;
    bool ordered = false;  // value_a >= value_b - tol
};

/// Exact asymptotic variances of the same observable under two networks with one
/// stationary law; both routings must be reversible at every level.
AvarComparison avar_compare(const PreparedModel& a, const PreparedModel& b, const Observable& f,
                            std::optional<double> epsilon, int N);

}  // namespace qnet
