#include "qnet/environment.hpp"

#include <cmath>

namespace qnet {

EnvironmentChain env_chain(const EnvironmentSpec& spec, int J) {
    spec.validate();
    if (spec.subset_count() != (1 << J)) throw ValidationError("environment tables do not match J");
    int count = 1 << J;
    EnvironmentChain chain;
    chain.J = J;
    chain.spec = &spec;
    chain.rates = Eigen::MatrixXd::Zero(count, count);
    chain.pi_hat = Eigen::VectorXd::Zero(count);

    for (Subset d = 0; d < static_cast<Subset>(count); ++d) {
        if (spec.A[d] <= 0.0 && d != 0) continue;
        chain.support.push_back(d);
        for (Subset h = 0; h < static_cast<Subset>(count); ++h) {
            if (h == d) continue;
            double q = 0.0;
            if (is_subset_of(d, h) && spec.A[d] > 0.0) {
                q = spec.A[h] / spec.A[d];  // breakdown of h \ d
            } else if (is_subset_of(h, d) && spec.B[h] > 0.0) {
                q = spec.B[d] / spec.B[h];  // repair of d \ h
            }
            chain.rates(d, h) = q;
            chain.rates(d, d) -= q;
        }
    }

    double total = 0.0;
    for (Subset d : chain.support) total += spec.A[d] / spec.B[d];
    chain.normalizer = total;
    for (Subset d : chain.support) chain.pi_hat(d) = spec.A[d] / spec.B[d] / total;
    return chain;
}

double apply_env_generator(const EnvironmentChain& chain, const std::function<double(Subset)>& h, Subset D) {
    double hd = h(D);
    double out = 0.0;
    int count = 1 << chain.J;
    for (Subset g = 0; g < static_cast<Subset>(count); ++g) {
        if (g == D) continue;
        double q = chain.rates(D, g);
        if (q != 0.0) out += q * (h(g) - hd);
    }
    return out;
}

EnvironmentSpec env_scale(const EnvironmentSpec& spec, const std::function<double(Subset)>& h) {
    if (h(0) != 1.0) throw ValidationError("env_scale requires h([]) = 1");
    EnvironmentSpec scaled = spec;
    for (size_t d = 0; d < spec.A.size(); ++d) {
        double factor = h(static_cast<Subset>(d));
        if (!(factor > 0.0)) throw ValidationError("env_scale requires h(D) > 0");
        scaled.A[d] = spec.A[d] * factor;
        scaled.B[d] = spec.B[d] * factor;
    }
    return scaled;
}

EnvironmentSpec env_scale_kappa(const EnvironmentSpec& spec, double kappa) {
    return env_scale(spec, [kappa](Subset d) { return std::pow(kappa, popcount(d)); });
}

}  // namespace qnet
