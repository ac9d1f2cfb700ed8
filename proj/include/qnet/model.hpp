#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qnet/types.hpp"

namespace qnet {

/// State dependent service rate mu_j(k), k >= 1, eventually constant:
/// mu_j(k) = rates[constant_after - 1] for k >= constant_after.
struct ServiceRateFn {
    std::vector<double> rates;  // mu(1), ..., mu(K)
    int constant_after = 0;     // K; defaults to rates.size() on load

    double at(int k) const {
        if (k <= 0) return 0.0;
        return rates[static_cast<size_t>(std::min(k, constant_after) - 1)];
    }
    double top() const { return rates[static_cast<size_t>(constant_after - 1)]; }
};

/// Breakdown/repair set functions A, B over 2^{1..J}, stored densely by bitmask.
struct EnvironmentSpec {
    std::vector<double> A;  // size 2^J
    std::vector<double> B;  // size 2^J

    static EnvironmentSpec none(int J);
    static EnvironmentSpec independent(const std::vector<double>& alpha, const std::vector<double>& beta);

    int subset_count() const { return static_cast<int>(A.size()); }
    bool has_breakdowns() const;
    void validate() const;
};

enum class ReroutingKind { Stalling, Skipping, Rsrd, Explicit };

std::string to_string(ReroutingKind kind);

struct ReroutingSpec {
    ReroutingKind kind = ReroutingKind::Stalling;
    // For Explicit: matrix per down-set over index set {0} u ({1..J} \ D),
    // in ascending global index order. D = 0 may be omitted (defaults to R).
    std::map<Subset, Eigen::MatrixXd> matrices;
};

struct NetworkModel {
    int J = 0;
    double lambda = 0.0;
    Eigen::MatrixXd routing;  // (J+1)x(J+1), index 0 = exterior
    std::vector<ServiceRateFn> service;
    EnvironmentSpec environment;
    ReroutingSpec rerouting;

    void validate() const;
};

/// Parses and validates a JSON model config.
NetworkModel load_model(const std::string& config_text);

std::string format_model(const NetworkModel& model);  // JSON, for reports

bool routing_irreducible(const Eigen::MatrixXd& R);

}  // namespace qnet
