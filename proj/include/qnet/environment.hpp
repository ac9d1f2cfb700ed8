#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "qnet/model.hpp"

namespace qnet {

/// Dense breakdown-repair generator over all 2^J subsets together with its
/// stationary (reversible) law pi_hat. Subsets with A(D)=0 are unreachable and
/// carry pi_hat = 0; the support always contains the empty set.
struct EnvironmentChain {
    int J = 0;
    const EnvironmentSpec* spec = nullptr;
    Eigen::MatrixXd rates;        // 2^J x 2^J generator, row D -> column H
    Eigen::VectorXd pi_hat;       // stationary law, zero off support
    std::vector<Subset> support;  // subsets with A(D) > 0, ascending
    double normalizer = 0.0;      // C_hat

    double rate(Subset from, Subset to) const { return rates(from, to); }
};

EnvironmentChain env_chain(const EnvironmentSpec& spec, int J);

/// (Q^Y h)(D) for an arbitrary function h on subsets.
double apply_env_generator(const EnvironmentChain& chain, const std::function<double(Subset)>& h, Subset D);

/// A'(D) = h(D) A(D), B'(D) = h(D) B(D): same pi_hat, rescaled rates.
EnvironmentSpec env_scale(const EnvironmentSpec& spec, const std::function<double(Subset)>& h);

/// Convenience: h(D) = kappa^{|D|}.
EnvironmentSpec env_scale_kappa(const EnvironmentSpec& spec, double kappa);

}  // namespace qnet
