#include "qnet/correlation.hpp"

#include <algorithm>
#include <cmath>

#include "qnet/environment.hpp"

namespace qnet {

namespace {

// Arrival, departure and transfer terms of the generator at level D.
double queue_part(const PreparedModel& pm, const Observable& g, Subset D, std::span<const int> n) {
    const auto& lr = pm.rerouting().level(D);
    const auto& m = pm.model();
    double gd = g.eval(D, n);
    double out = 0.0;
    for (int a = 1; a < lr.dim(); ++a) {
        double r = m.lambda * lr.R(0, a);
        if (r > 0.0) out += r * (g.eval_shifted(D, n, lr.nodes[a]) - gd);
    }
    std::vector<int> minus(n.begin(), n.end());
    for (int a = 1; a < lr.dim(); ++a) {
        int j = lr.nodes[a];
        double mu = m.service[static_cast<size_t>(j - 1)].at(n[j - 1]);
        if (mu <= 0.0) continue;
        minus[j - 1] -= 1;
        if (double r = mu * lr.R(a, 0); r > 0.0) out += r * (g.eval(D, minus) - gd);
        for (int b = 1; b < lr.dim(); ++b) {
            if (b == a) continue;
            if (double r = mu * lr.R(a, b); r > 0.0) out += r * (g.eval_shifted(D, minus, lr.nodes[b]) - gd);
        }
        minus[j - 1] += 1;
    }
    return out;
}

// Breakdown/repair terms of the generator; nonzero targets stay in the support.
double env_part(const PreparedModel& pm, const Observable& g, Subset D, std::span<const int> n) {
    const auto& chain = pm.env();
    double gd = g.eval(D, n);
    double out = 0.0;
    for (Subset H : chain.support) {
        if (H == D) continue;
        double r = chain.rate(D, H);
        if (r > 0.0) out += r * (g.eval(H, n) - gd);
    }
    return out;
}

double up_service_total(const PreparedModel& pm, Subset D, std::span<const int> n) {
    double total = 0.0;
    for (int j = 1; j <= pm.J(); ++j)
        if (!contains(D, j)) total += pm.model().service[static_cast<size_t>(j - 1)].at(n[j - 1]);
    return total;
}

void check_routing_pair(const PreparedModel& a, const PreparedModel& b) {
    if (a.J() != b.J() || std::abs(a.model().lambda - b.model().lambda) > 1e-12)
        throw ValidationError("routing-difference pair: lambda or J mismatch");
    for (int j = 0; j < a.J(); ++j) {
        const auto& sa = a.model().service[static_cast<size_t>(j)];
        const auto& sb = b.model().service[static_cast<size_t>(j)];
        if (sa.rates != sb.rates || sa.constant_after != sb.constant_after)
            throw ValidationError("routing-difference pair: service rates differ");
    }
    if (a.model().environment.A != b.model().environment.A || a.model().environment.B != b.model().environment.B)
        throw ValidationError("routing-difference pair: environments differ");
    if ((a.traffic().eta - b.traffic().eta).cwiseAbs().maxCoeff() > 1e-10)
        throw ValidationError("routing-difference pair: traffic solutions differ");
    for (Subset D : a.env().support) {
        if (!verify_rerouting(a.model(), D).ok || !verify_rerouting(b.model(), D).ok)
            throw ValidationError("routing-difference pair: rerouting assumption fails at level " +
                                  subset_to_string(D, a.J()));
    }
}

void check_env_pair(const PreparedModel& a, const PreparedModel& b) {
    if (a.J() != b.J() || std::abs(a.model().lambda - b.model().lambda) > 1e-12)
        throw ValidationError("environment-difference pair: lambda or J mismatch");
    if ((a.model().routing - b.model().routing).cwiseAbs().maxCoeff() > 1e-12)
        throw ValidationError("environment-difference pair: routings differ");
    if (a.model().rerouting.kind != b.model().rerouting.kind)
        throw ValidationError("environment-difference pair: rerouting schemes differ");
    for (int j = 0; j < a.J(); ++j) {
        const auto& sa = a.model().service[static_cast<size_t>(j)];
        const auto& sb = b.model().service[static_cast<size_t>(j)];
        if (sa.rates != sb.rates || sa.constant_after != sb.constant_after)
            throw ValidationError("environment-difference pair: service rates differ");
    }
    if ((a.env().pi_hat - b.env().pi_hat).cwiseAbs().maxCoeff() > 1e-12)
        throw ValidationError("environment-difference pair: stationary environment laws differ");
}

}  // namespace

void require_saturated(const Observable& f, const char* where) {
    if (!f.is_saturated())
        throw ValidationError(std::string(where) + ": observable uses an unbounded queue reference; " +
                              "exact summation needs saturated (qc) references only");
}

std::vector<int> lump_levels(const PreparedModel& pm, std::initializer_list<const Observable*> fs, int extra) {
    std::vector<int> levels(static_cast<size_t>(pm.J()));
    for (int j = 1; j <= pm.J(); ++j) {
        int cut = pm.model().service[static_cast<size_t>(j - 1)].constant_after;
        for (const Observable* f : fs) cut = std::max(cut, f->cutoff(j));
        levels[static_cast<size_t>(j - 1)] = cut + 2 + extra;
    }
    return levels;
}

double apply_Z_generator(const PreparedModel& pm, const Observable& g, const State& s) {
    if (static_cast<int>(s.queues.size()) != pm.J()) throw ValidationError("state dimension mismatch");
    return queue_part(pm, g, s.down, s.queues) + env_part(pm, g, s.down, s.queues);
}

double expectation(const PreparedModel& pm, const Observable& f) {
    require_saturated(f, "expectation");
    return lumped_expectation(pm, lump_levels(pm, {&f}),
                              [&](Subset d, std::span<const int> n) { return f.eval(d, n); });
}

double variance(const PreparedModel& pm, const Observable& f) {
    require_saturated(f, "variance");
    auto levels = lump_levels(pm, {&f});
    double mean = lumped_expectation(pm, levels, [&](Subset d, std::span<const int> n) { return f.eval(d, n); });
    double second = lumped_expectation(pm, levels, [&](Subset d, std::span<const int> n) {
        double v = f.eval(d, n);
        return v * v;
    });
    return second - mean * mean;
}

double corr_direct(const PreparedModel& pm, const Observable& f, const Observable& g) {
    require_saturated(f, "corr_direct");
    require_saturated(g, "corr_direct");
    auto levels = lump_levels(pm, {&f, &g});
    return lumped_expectation(pm, levels, [&](Subset d, std::span<const int> n) {
        return f.eval(d, n) * (queue_part(pm, g, d, n) + env_part(pm, g, d, n));
    });
}

double corr_split(const PreparedModel& pm, const Observable& f, const Observable& g) {
    require_saturated(f, "corr_split");
    require_saturated(g, "corr_split");
    auto levels = lump_levels(pm, {&f, &g});
    double environment = lumped_expectation(pm, levels, [&](Subset d, std::span<const int> n) {
        auto gn = [&](Subset h) { return g.eval(h, n); };
        return f.eval(d, n) * apply_env_generator(pm.env(), gn, d);
    });
    // Per level D the queue terms form the generator of a standalone network on
    // the up nodes with routing R^D; its stationary law is the same product law.
    double subnetworks = lumped_expectation(pm, levels, [&](Subset d, std::span<const int> n) {
        return f.eval(d, n) * queue_part(pm, g, d, n);
    });
    return environment + subnetworks;
}

double corr_formula(const PreparedModel& pm, const Observable& f, const Observable& g, CorrForm form) {
    require_saturated(f, "corr_formula");
    require_saturated(g, "corr_formula");
    auto levels = lump_levels(pm, {&f, &g});
    const auto& m = pm.model();
    const auto& chain = pm.env();

    if (form == CorrForm::Expanded) {
        return lumped_expectation(pm, levels, [&](Subset d, std::span<const int> n) {
            double fd = f.eval(d, n);
            double gd = g.eval(d, n);
            double cross = 0.0, env_out = 0.0;
            for (Subset h : chain.support) {
                if (h == d) continue;
                double r = chain.rate(d, h);
                if (r <= 0.0) continue;
                cross += r * g.eval(h, n);
                env_out += r;
            }
            cross *= fd;

            const auto& lr = pm.rerouting().level(d);
            const auto& xi = pm.rerouting().xi(d);
            double pairs = 0.0;
            for (int a = 0; a < lr.dim(); ++a) {
                double fa = f.eval_shifted(d, n, lr.nodes[a]);
                if (fa == 0.0 || xi(a) == 0.0) continue;
                for (int b = 0; b < lr.dim(); ++b) {
                    double r = lr.R(a, b);
                    if (r <= 0.0) continue;
                    pairs += xi(a) * r * fa * g.eval_shifted(d, n, lr.nodes[b]);
                }
            }
            pairs *= m.lambda / xi(0);

            double diagonal = fd * gd * (env_out + m.lambda + up_service_total(pm, d, n));
            return cross + pairs - diagonal;
        });
    }

    return lumped_expectation(pm, levels, [&](Subset d, std::span<const int> n) {
        const auto& lr = pm.rerouting().level(d);
        const auto& xi = pm.rerouting().xi(d);
        Eigen::VectorXd u(lr.dim()), v(lr.dim());
        for (int a = 0; a < lr.dim(); ++a) {
            u(a) = f.eval_shifted(d, n, lr.nodes[a]);
            v(a) = g.eval_shifted(d, n, lr.nodes[a]);
        }
        double inner = (m.lambda / xi(0)) * xi.cwiseProduct(u).dot(lr.R * v);
        auto gn = [&](Subset h) { return g.eval(h, n); };
        double env = f.eval(d, n) * apply_env_generator(chain, gn, d);
        double loss = f.eval(d, n) * g.eval(d, n) * (m.lambda + up_service_total(pm, d, n));
        return inner + env - loss;
    });
}

double diff_routing(const PreparedModel& a, const PreparedModel& b, const Observable& f, const Observable& g,
                    DiffForm form) {
    require_saturated(f, "diff_routing");
    require_saturated(g, "diff_routing");
    check_routing_pair(a, b);
    auto levels = lump_levels(a, {&f, &g});
    const double lambda = a.model().lambda;

    if (form == DiffForm::Trace) {
        return lumped_expectation(a, levels, [&](Subset d, std::span<const int> n) {
            const auto& la = a.rerouting().level(d);
            const auto& lb = b.rerouting().level(d);
            const auto& xi = a.rerouting().xi(d);
            double sum = 0.0;
            for (int j = 0; j < la.dim(); ++j) {
                double fj = f.eval_shifted(d, n, la.nodes[j]);
                for (int i = 0; i < la.dim(); ++i) {
                    double delta = la.R(j, i) - lb.R(j, i);
                    if (delta == 0.0) continue;
                    sum += fj * g.eval_shifted(d, n, la.nodes[i]) * xi(j) * delta;
                }
            }
            return (lambda / xi(0)) * sum;
        });
    }

    return lumped_expectation(a, levels, [&](Subset d, std::span<const int> n) {
        const auto& la = a.rerouting().level(d);
        const auto& lb = b.rerouting().level(d);
        const auto& xi = a.rerouting().xi(d);
        Eigen::VectorXd u(la.dim()), v(la.dim());
        for (int c = 0; c < la.dim(); ++c) {
            u(c) = f.eval_shifted(d, n, la.nodes[c]);
            v(c) = g.eval_shifted(d, n, la.nodes[c]);
        }
        return (lambda / xi(0)) * xi.cwiseProduct(u).dot((la.R - lb.R) * v);
    });
}

double diff_env(const PreparedModel& a, const PreparedModel& b, const Observable& f, const Observable& g) {
    require_saturated(f, "diff_env");
    require_saturated(g, "diff_env");
    check_env_pair(a, b);
    auto levels = lump_levels(a, {&f, &g});
    return lumped_expectation(a, levels, [&](Subset d, std::span<const int> n) {
        auto gn = [&](Subset h) { return g.eval(h, n); };
        return f.eval(d, n) * (apply_env_generator(a.env(), gn, d) - apply_env_generator(b.env(), gn, d));
    });
}

}  // namespace qnet
