#include "qnet/model.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

using nlohmann::json;

namespace qnet {

namespace {
constexpr double kRowSumTol = 1e-12;
}

EnvironmentSpec EnvironmentSpec::none(int J) {
    EnvironmentSpec spec;
    spec.A.assign(size_t{1} << J, 0.0);
    spec.B.assign(size_t{1} << J, 1.0);
    spec.A[0] = 1.0;
    return spec;
}

EnvironmentSpec EnvironmentSpec::independent(const std::vector<double>& alpha, const std::vector<double>& beta) {
    if (alpha.size() != beta.size()) throw ValidationError("independent environment: alpha/beta length mismatch");
    int J = static_cast<int>(alpha.size());
    EnvironmentSpec spec;
    size_t count = size_t{1} << J;
    spec.A.assign(count, 1.0);
    spec.B.assign(count, 1.0);
    for (Subset d = 1; d < count; ++d) {
        double a = 1.0, b = 1.0;
        for (int j = 1; j <= J; ++j) {
            if (!contains(d, j)) continue;
            a *= alpha[static_cast<size_t>(j - 1)];
            b *= beta[static_cast<size_t>(j - 1)];
        }
        spec.A[d] = a;
        spec.B[d] = b;
    }
    return spec;
}

bool EnvironmentSpec::has_breakdowns() const {
    for (size_t d = 1; d < A.size(); ++d)
        if (A[d] > 0.0) return true;
    return false;
}

void EnvironmentSpec::validate() const {
    if (A.empty() || A.size() != B.size() || (A.size() & (A.size() - 1)) != 0)
        throw ValidationError("environment tables must cover all 2^J subsets");
    if (A[0] != 1.0) throw ValidationError("environment requires A([]) = 1");
    if (B[0] != 1.0) throw ValidationError("environment requires B([]) = 1");
    size_t count = A.size();
    for (size_t d = 0; d < count; ++d) {
        if (A[d] < 0.0 || B[d] < 0.0) throw ValidationError("environment rates must be nonnegative");
        if (A[d] > 0.0 && B[d] == 0.0) throw ValidationError("environment requires B(D) > 0 on the support of A");
    }
    // A(D)=0 must propagate upward: supersets of a dead subset stay dead.
    int J = 0;
    while ((size_t{1} << J) < count) ++J;
    for (Subset d = 1; d < count; ++d) {
        if (A[d] != 0.0) continue;
        for (int j = 1; j <= J; ++j) {
            Subset up = with_node(d, j);
            if (up != d && A[up] > 0.0)
                throw ValidationError("environment requires A(D)=0 to imply A(I)=0 for supersets I");
        }
    }
}

std::string to_string(ReroutingKind kind) {
    switch (kind) {
        case ReroutingKind::Stalling: return "stalling";
        case ReroutingKind::Skipping: return "skipping";
        case ReroutingKind::Rsrd: return "rsrd";
        case ReroutingKind::Explicit: return "explicit";
    }
    return "?";
}

bool routing_irreducible(const Eigen::MatrixXd& R) {
    int n = static_cast<int>(R.rows());
    // Reachability closure from node 0 along positive entries, forward and backward.
    auto reach = [&](bool forward) {
        std::vector<bool> seen(n, false);
        std::vector<int> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < n; ++v) {
                double w = forward ? R(u, v) : R(v, u);
                if (w > 0.0 && !seen[v]) {
                    seen[v] = true;
                    stack.push_back(v);
                }
            }
        }
        return seen;
    };
    auto fwd = reach(true);
    auto bwd = reach(false);
    for (int v = 0; v < n; ++v)
        if (!fwd[v] || !bwd[v]) return false;
    return true;
}

void NetworkModel::validate() const {
    if (J < 1) throw ValidationError("J must be at least 1");
    if (J > kMaxNodes) throw ValidationError("J exceeds 16 (environment enumerates 2^J subsets)");
    if (!(lambda > 0.0)) throw ValidationError("lambda must be positive");
    if (routing.rows() != J + 1 || routing.cols() != J + 1)
        throw ValidationError("routing matrix must be (J+1)x(J+1)");
    for (int i = 0; i <= J; ++i) {
        double sum = 0.0;
        for (int j = 0; j <= J; ++j) {
            if (routing(i, j) < 0.0) throw ValidationError("routing entries must be nonnegative");
            sum += routing(i, j);
        }
        if (std::abs(sum - 1.0) > kRowSumTol)
            throw ValidationError("routing row sum != 1 at row " + std::to_string(i));
    }
    if (!routing_irreducible(routing)) throw ValidationError("routing matrix is not irreducible on {0..J}");
    if (static_cast<int>(service.size()) != J) throw ValidationError("service must list one rate function per node");
    for (int j = 0; j < J; ++j) {
        const auto& s = service[static_cast<size_t>(j)];
        if (s.rates.empty()) throw ValidationError("service rates empty at node " + std::to_string(j + 1));
        if (s.constant_after < 1 || s.constant_after > static_cast<int>(s.rates.size()))
            throw ValidationError("constant_after out of range at node " + std::to_string(j + 1));
        for (double mu : s.rates)
            if (!(mu > 0.0)) throw ValidationError("service rates must be positive at node " + std::to_string(j + 1));
    }
    if (environment.subset_count() != (1 << J))
        throw ValidationError("environment tables must cover all 2^J subsets");
    environment.validate();
    if (rerouting.kind == ReroutingKind::Explicit) {
        for (const auto& [d, m] : rerouting.matrices) {
            int dim = J + 1 - popcount(d);
            if (m.rows() != dim || m.cols() != dim)
                throw ValidationError("explicit rerouting matrix has wrong dimension for " + subset_to_string(d, J));
            for (int i = 0; i < dim; ++i) {
                double sum = 0.0;
                for (int j = 0; j < dim; ++j) {
                    if (m(i, j) < 0.0) throw ValidationError("explicit rerouting entries must be nonnegative");
                    sum += m(i, j);
                }
                if (std::abs(sum - 1.0) > kRowSumTol)
                    throw ValidationError("explicit rerouting row sum != 1 for " + subset_to_string(d, J));
            }
        }
    }
}

namespace {

Eigen::MatrixXd matrix_from_flat(const std::vector<double>& flat, int dim, const std::string& what) {
    if (static_cast<int>(flat.size()) != dim * dim)
        throw ValidationError(what + " must have " + std::to_string(dim * dim) + " row-major entries");
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) m(i, j) = flat[static_cast<size_t>(i * dim + j)];
    return m;
}

EnvironmentSpec environment_from_json(const json& spec, int J) {
    std::string kind = spec.value("kind", "independent");
    if (kind == "none") return EnvironmentSpec::none(J);
    if (kind == "independent") {
        auto alpha = spec.at("alpha").get<std::vector<double>>();
        auto beta = spec.at("beta").get<std::vector<double>>();
        if (static_cast<int>(alpha.size()) != J)
            throw ValidationError("independent environment needs J alpha entries");
        return EnvironmentSpec::independent(alpha, beta);
    }
    if (kind == "table") {
        EnvironmentSpec env = EnvironmentSpec::none(J);
        env.A.assign(size_t{1} << J, 0.0);
        env.A[0] = 1.0;
        for (const auto& [key, value] : spec.at("A").items()) {
            Subset d = subset_from_string(key, J);
            env.A[d] = value.get<double>();
        }
        for (const auto& [key, value] : spec.at("B").items()) {
            Subset d = subset_from_string(key, J);
            env.B[d] = value.get<double>();
        }
        if (env.A[0] != 1.0 || env.B[0] != 1.0)
            throw ValidationError("environment tables may not override A([]) = B([]) = 1");
        return env;
    }
    throw ValidationError("unknown environment kind '" + kind + "'");
}

}  // namespace

NetworkModel load_model(const std::string& config_text) {
    json cfg;
    try {
        cfg = json::parse(config_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config parse error: ") + e.what());
    }
    NetworkModel model;
    try {
        model.J = cfg.at("J").get<int>();
        if (model.J < 1 || model.J > kMaxNodes) {
            if (model.J > kMaxNodes) throw ValidationError("J exceeds 16 (environment enumerates 2^J subsets)");
            throw ValidationError("J must be at least 1");
        }
        model.lambda = cfg.at("lambda").get<double>();
        model.routing = matrix_from_flat(cfg.at("routing").get<std::vector<double>>(), model.J + 1, "routing");
        for (const auto& node : cfg.at("service")) {
            ServiceRateFn s;
            s.rates = node.at("rates").get<std::vector<double>>();
            s.constant_after = node.value("constant_after", static_cast<int>(s.rates.size()));
            model.service.push_back(std::move(s));
        }
        if (cfg.contains("environment"))
            model.environment = environment_from_json(cfg.at("environment"), model.J);
        else
            model.environment = EnvironmentSpec::none(model.J);
        if (cfg.contains("rerouting")) {
            const auto& rr = cfg.at("rerouting");
            std::string kind = rr.at("kind").get<std::string>();
            if (kind == "stalling")
                model.rerouting.kind = ReroutingKind::Stalling;
            else if (kind == "skipping")
                model.rerouting.kind = ReroutingKind::Skipping;
            else if (kind == "rsrd")
                model.rerouting.kind = ReroutingKind::Rsrd;
            else if (kind == "explicit")
                model.rerouting.kind = ReroutingKind::Explicit;
            else
                throw ValidationError("unknown rerouting kind '" + kind + "'");
            if (rr.contains("matrices")) {
                for (const auto& [key, value] : rr.at("matrices").items()) {
                    Subset d = subset_from_string(key, model.J);
                    int dim = model.J + 1 - popcount(d);
                    model.rerouting.matrices[d] =
                        matrix_from_flat(value.get<std::vector<double>>(), dim, "rerouting matrix " + key);
                }
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("config schema error: ") + e.what());
    }
    model.validate();
    return model;
}

std::string format_model(const NetworkModel& model) {
    json out;
    out["J"] = model.J;
    out["lambda"] = model.lambda;
    std::vector<double> flat;
    for (int i = 0; i <= model.J; ++i)
        for (int j = 0; j <= model.J; ++j) flat.push_back(model.routing(i, j));
    out["routing"] = flat;
    out["rerouting"] = to_string(model.rerouting.kind);
    out["breakdowns"] = model.environment.has_breakdowns();
    return out.dump();
}

}  // namespace qnet
