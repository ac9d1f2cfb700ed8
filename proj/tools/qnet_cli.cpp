#include <chrono>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qnet/avar.hpp"
#include "qnet/correlation.hpp"
#include "qnet/ordering.hpp"
#include "qnet/sim.hpp"
#include "qnet/spectral.hpp"

using json = nlohmann::ordered_json;
using namespace qnet;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fingerprint(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

class Timer {
public:
    double ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

json base_report(const std::string& command, const std::string& path, const std::string& config) {
    json r;
    r["schema"] = "qnet-corr/1";
    r["command"] = command;
    r["model"] = path;
    r["fingerprint"] = fingerprint(config);
    return r;
}

json vector_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

struct LoadedModel {
    std::string path;
    std::string config;
    PreparedModel pm;

    explicit LoadedModel(const std::string& p) : path(p), config(read_file(p)), pm(load_model(config)) {}
};

int cmd_validate(const std::string& path) {
    Timer timer;
    LoadedModel lm(path);
    json r = base_report("validate", path, lm.config);
    r["valid"] = true;
    json levels = json::array();
    for (Subset d : lm.pm.env().support) {
        auto check = verify_rerouting(lm.pm.model(), d);
        if (!check.ok) throw ValidationError("rerouting assumption fails at level " + subset_to_string(d, lm.pm.J()));
        levels.push_back({{"D", subset_to_string(d, lm.pm.J())}, {"residual", check.residual}});
    }
    r["rerouting_levels"] = levels;
    json rho = json::array();
    for (int j = 1; j <= lm.pm.J(); ++j) rho.push_back(lm.pm.marginal(j).rho);
    r["rho"] = rho;
    r["timings_ms"] = {{"total", timer.ms()}};
    std::cout << r.dump(2) << "\n";
    return 0;
}

int cmd_traffic(const std::string& path) {
    Timer timer;
    LoadedModel lm(path);
    json r = base_report("traffic", path, lm.config);
    r["eta"] = vector_json(lm.pm.traffic().eta);
    r["xi"] = vector_json(lm.pm.traffic().xi);
    json per_level = json::object();
    for (Subset d : lm.pm.env().support)
        per_level[subset_to_string(d, lm.pm.J())] = vector_json(lm.pm.rerouting().xi(d));
    r["xi_per_level"] = per_level;
    r["timings_ms"] = {{"total", timer.ms()}};
    std::cout << r.dump(2) << "\n";
    return 0;
}

int cmd_stationary(const std::string& path, int states) {
    Timer timer;
    LoadedModel lm(path);
    json r = base_report("stationary", path, lm.config);
    json norm = json::array();
    for (int j = 1; j <= lm.pm.J(); ++j) norm.push_back(lm.pm.marginal(j).C);
    r["normalizers"] = norm;
    json pihat = json::object();
    for (Subset d : lm.pm.env().support)
        pihat[subset_to_string(d, lm.pm.J())] = lm.pm.env().pi_hat(d);
    r["pi_hat"] = pihat;

    std::mt19937 rng(1234);
    const auto& support = lm.pm.env().support;
    json samples = json::array();
    double worst = 0.0;
    for (int k = 0; k < states; ++k) {
        State s;
        s.down = support[rng() % support.size()];
        s.queues.resize(static_cast<size_t>(lm.pm.J()));
        for (auto& q : s.queues) q = static_cast<int>(rng() % 10);
        double res = balance_residual(lm.pm, s);
        worst = std::max(worst, res);
        json entry;
        entry["D"] = subset_to_string(s.down, lm.pm.J());
        entry["n"] = s.queues;
        entry["pi"] = lm.pm.joint_pi(s);
        entry["balance_residual"] = res;
        samples.push_back(entry);
    }
    r["samples"] = samples;
    r["worst_balance_residual"] = worst;
    r["timings_ms"] = {{"total", timer.ms()}};
    std::cout << r.dump(2) << "\n";
    return 0;
}

int cmd_correlate(const std::string& path, const std::string& ftext, const std::string& gtext) {
    Timer timer;
    LoadedModel lm(path);
    Observable f = parse_observable(ftext);
    Observable g = parse_observable(gtext);
    json r = base_report("correlate", path, lm.config);
    r["f"] = f.str();
    r["g"] = g.str();
    double direct = corr_direct(lm.pm, f, g);
    double split = corr_split(lm.pm, f, g);
    double expanded = corr_formula(lm.pm, f, g, CorrForm::Expanded);
    double compact = corr_formula(lm.pm, f, g, CorrForm::Compact);
    r["routes"] = {{"direct", direct}, {"split", split}, {"formula_expanded", expanded}, {"formula_compact", compact}};
    double scale = 1.0 + std::abs(direct);
    double max_delta = std::max({std::abs(direct - split), std::abs(direct - expanded), std::abs(direct - compact)}) / scale;
    r["max_delta"] = max_delta;
    r["tolerances"] = {{"route_agreement", 1e-9}};
    r["timings_ms"] = {{"total", timer.ms()}};
    std::cout << r.dump(2) << "\n";
    return 0;
}

int cmd_compare(const std::string& path_a, const std::string& path_b, const std::string& kind,
                const std::string& ftext, const std::string& gtext) {
    Timer timer;
    LoadedModel a(path_a);
    LoadedModel b(path_b);
    Observable f = parse_observable(ftext);
    Observable g = parse_observable(gtext);
    json r = base_report("compare", path_a, a.config);
    r["model_b"] = path_b;
    r["fingerprint_b"] = fingerprint(b.config);
    r["kind"] = kind;
    r["f"] = f.str();
    r["g"] = g.str();
    double direct = corr_direct(a.pm, f, g) - corr_direct(b.pm, f, g);
    if (kind == "routing") {
        double trace = diff_routing(a.pm, b.pm, f, g, DiffForm::Trace);
        double compact = diff_routing(a.pm, b.pm, f, g, DiffForm::Compact);
        r["routes"] = {{"trace", trace}, {"compact", compact}, {"direct_difference", direct}};
        r["max_delta"] =
            std::max(std::abs(trace - direct), std::abs(compact - direct)) / (1.0 + std::abs(direct));
        auto table = order_all_levels(a.pm, b.pm);
        json verdicts = json::object();
        for (const auto& lv : table.levels) {
            verdicts[subset_to_string(lv.D, a.pm.J())] = {
                {"peskun_b_below_a", lv.peskun.holds},
                {"pd_a_below_b", lv.pd.holds},
                {"pd_min_eigenvalue", lv.pd.min_eigenvalue},
            };
        }
        r["ordering"] = verdicts;
        r["gap_hypotheses_hold"] = table.gap_hypotheses_hold;
    } else if (kind == "environment") {
        double formula = diff_env(a.pm, b.pm, f, g);
        r["routes"] = {{"formula", formula}, {"direct_difference", direct}};
        r["max_delta"] = std::abs(formula - direct) / (1.0 + std::abs(direct));
    } else {
        throw ValidationError("compare: kind must be routing or environment");
    }
    r["timings_ms"] = {{"total", timer.ms()}};
    std::cout << r.dump(2) << "\n";
    return 0;
}

int cmd_gap(const std::string& path, std::vector<int> levels, const std::string& candidates_path) {
    Timer timer;
    LoadedModel lm(path);
    if (levels.empty()) levels = {5, 10};
    std::vector<Observable> candidates;
    if (!candidates_path.empty()) {
        std::istringstream in(read_file(candidates_path));
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) candidates.push_back(parse_observable(line));
        }
    }
    auto report = gap_report(lm.pm, levels, candidates);
    json r = base_report("gap", path, lm.config);
    r["levels"] = report.levels;
    r["dirichlet_gap_estimates"] = report.gap_estimates;
    json ray = json::array();
    for (const auto& [text, value] : report.rayleigh) ray.push_back({{"f", text}, {"quotient", value}});
    r["rayleigh_upper_bounds"] = ray;
    if (report.has_env_gap) r["environment_gap"] = report.env_gap;
    if (report.closed_bounds)
        r["closed_form_bounds"] = {{"lower", report.closed_bounds->first}, {"upper", report.closed_bounds->second}};
    r["timings_ms"] = {{"total", timer.ms()}};
    std::cout << r.dump(2) << "\n";
    return 0;
}

int cmd_avar(const std::string& path, const std::string& ftext, double eps, int trunc) {
    Timer timer;
    LoadedModel lm(path);
    Observable f = parse_observable(ftext);
    auto chain = build_truncated(lm.pm, trunc);
    auto kernel = uniformize(chain, eps > 0.0 ? std::optional<double>(eps) : std::nullopt);
    Eigen::VectorXd fv(chain.size());
    for (long long i = 0; i < chain.size(); ++i) fv(i) = f.eval(chain.state_of(i));
    double poisson = avar_exact(kernel, fv);
    double series = avar_series(kernel, fv);
    json r = base_report("avar", path, lm.config);
    r["f"] = f.str();
    r["epsilon"] = kernel.epsilon;
    r["trunc"] = trunc;
    r["routes"] = {{"poisson", poisson}, {"series", series}};
    r["max_delta"] = std::abs(poisson - series) / (1.0 + std::abs(poisson));
    r["timings_ms"] = {{"total", timer.ms()}};
    std::cout << r.dump(2) << "\n";
    return 0;
}

int cmd_simulate(const std::string& path, double horizon, std::uint64_t seed,
                 const std::vector<std::string>& ftexts, const std::string& export_path) {
    Timer timer;
    LoadedModel lm(path);
    auto traj = simulate(lm.pm, horizon, seed);
    json r = base_report("simulate", path, lm.config);
    r["time"] = horizon;
    r["seed"] = seed;
    r["events"] = traj.events();
    r["counts"] = {{"arrivals", traj.counts.arrivals},   {"departures", traj.counts.departures},
                   {"transfers", traj.counts.transfers}, {"breakdowns", traj.counts.breakdowns},
                   {"repairs", traj.counts.repairs},     {"blocked", traj.counts.blocked}};
    json est = json::array();
    for (const auto& text : ftexts) {
        Observable f = parse_observable(text);
        auto [mean, se] = estimate(traj, f);
        est.push_back({{"f", f.str()}, {"mean", mean}, {"se", se}});
    }
    r["estimates"] = est;
    if (!export_path.empty()) {
        std::ofstream out(export_path, std::ios::binary);
        if (!out) throw ValidationError("cannot write file: " + export_path);
        export_trajectory(traj, out);
        r["export"] = export_path;
    }
    r["timings_ms"] = {{"total", timer.ms()}};
    std::cout << r.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact correlation and spectral analysis for Jackson networks in a random environment"};
    app.require_subcommand(1);

    std::string path, path_b, f_expr = "qc(1,1)", g_expr, kind = "routing", candidates, export_path;
    int states = 10, trunc = 10;
    std::vector<int> levels;
    double eps = 0.0, horizon = 1000.0;
    std::uint64_t seed = 1;
    std::vector<std::string> sim_fs;

    auto* validate = app.add_subcommand("validate", "run all model and rerouting checks");
    validate->add_option("model", path)->required();

    auto* traffic = app.add_subcommand("traffic", "traffic solution and per-level xi");
    traffic->add_option("model", path)->required();

    auto* stationary = app.add_subcommand("stationary", "stationary law summaries and balance residuals");
    stationary->add_option("model", path)->required();
    stationary->add_option("--states", states, "random states to probe");

    auto* correlate = app.add_subcommand("correlate", "one-step correlation by all exact routes");
    correlate->add_option("model", path)->required();
    correlate->add_option("-f", f_expr, "left observable");
    correlate->add_option("-g", g_expr, "right observable (defaults to f)");

    auto* compare = app.add_subcommand("compare", "difference theorems and ordering verdicts");
    compare->add_option("modelA", path)->required();
    compare->add_option("modelB", path_b)->required();
    compare->add_option("--kind", kind, "routing or environment");
    compare->add_option("-f", f_expr);
    compare->add_option("-g", g_expr);

    auto* gap = app.add_subcommand("gap", "spectral gap estimates and bounds");
    gap->add_option("model", path)->required();
    gap->add_option("--trunc", levels, "truncation levels")->delimiter(',');
    gap->add_option("--candidates", candidates, "file with one observable per line");

    auto* avar = app.add_subcommand("avar", "asymptotic variance of the uniformized kernel");
    avar->add_option("model", path)->required();
    avar->add_option("-f", f_expr);
    avar->add_option("--eps", eps, "step scale (default 1/(2 max exit rate))");
    avar->add_option("--trunc", trunc, "truncation level");

    auto* simulate = app.add_subcommand("simulate", "seeded event simulation");
    simulate->add_option("model", path)->required();
    simulate->add_option("--time", horizon);
    simulate->add_option("--seed", seed);
    simulate->add_option("-f", sim_fs, "observables to estimate");
    simulate->add_option("--export", export_path, "trajectory output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (*validate) return cmd_validate(path);
        if (*traffic) return cmd_traffic(path);
        if (*stationary) return cmd_stationary(path, states);
        if (*correlate) return cmd_correlate(path, f_expr, g_expr.empty() ? f_expr : g_expr);
        if (*compare) return cmd_compare(path, path_b, kind, f_expr, g_expr.empty() ? f_expr : g_expr);
        if (*gap) return cmd_gap(path, levels, candidates);
        if (*avar) return cmd_avar(path, f_expr, eps, trunc);
        if (*simulate) return cmd_simulate(path, horizon, seed, sim_fs, export_path);
    } catch (const std::exception& e) {
        json err{{"error", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 2;
}
