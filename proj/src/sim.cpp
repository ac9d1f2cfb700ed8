#include "qnet/sim.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace qnet {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

enum Stream : std::uint64_t { kHolding = 0, kSelection = 1 };

struct Transition {
    double rate;
    enum Kind { Arrival, Departure, Transfer, Breakdown, Repair, Blocked } kind;
    int from = 0;   // node, for services
    int to = 0;     // node, for arrivals/transfers
    Subset env = 0; // target down set, for environment jumps
};

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : base_(mix64(seed ^ mix64(stream * 0xD2B74407B1CE6E93ull))) {}

double CounterRng::uniform() {
    std::uint64_t out = mix64(base_ + (++counter_) * kGolden);
    return (static_cast<double>(out >> 11) + 0.5) * 0x1.0p-53;
}

State Trajectory::state_at(std::size_t i) const {
    auto q = queues_at(i);
    return State{downs[i], {q.begin(), q.end()}};
}

Trajectory simulate(const PreparedModel& pm, double T, std::uint64_t seed) {
    if (T <= 0.0) throw ValidationError("simulate: horizon must be positive");
    const auto& m = pm.model();
    const auto& chain = pm.env();
    const int J = pm.J();

    Trajectory traj;
    traj.J = J;
    traj.horizon = T;
    traj.seed = seed;

    CounterRng holding(seed, kHolding);
    CounterRng selection(seed, kSelection);

    Subset down = 0;
    std::vector<int> n(static_cast<size_t>(J), 0);
    double t = 0.0;
    traj.times.push_back(0.0);
    traj.downs.push_back(down);
    traj.queues.insert(traj.queues.end(), n.begin(), n.end());

    std::vector<Transition> transitions;
    constexpr long long kEventCap = 100000000;
    for (long long events = 0;; ++events) {
        if (events > kEventCap) throw ValidationError("simulate: event cap exceeded");

        const auto& lr = pm.rerouting().level(down);
        transitions.clear();
        double total = 0.0;
        auto add = [&](Transition tr) {
            if (tr.rate <= 0.0) return;
            total += tr.rate;
            transitions.push_back(tr);
        };
        for (int a = 1; a < lr.dim(); ++a)
            add({m.lambda * lr.R(0, a), Transition::Arrival, 0, lr.nodes[a], 0});
        add({m.lambda * lr.R(0, 0), Transition::Blocked, 0, 0, 0});
        for (int a = 1; a < lr.dim(); ++a) {
            int j = lr.nodes[a];
            double mu = m.service[static_cast<size_t>(j - 1)].at(n[j - 1]);
            if (mu <= 0.0) continue;
            add({mu * lr.R(a, 0), Transition::Departure, j, 0, 0});
            for (int b = 1; b < lr.dim(); ++b)
                if (b != a) add({mu * lr.R(a, b), Transition::Transfer, j, lr.nodes[b], 0});
        }
        for (Subset h : chain.support) {
            if (h == down) continue;
            double r = chain.rate(down, h);
            if (r > 0.0)
                add({r, is_subset_of(down, h) ? Transition::Breakdown : Transition::Repair, 0, 0, h});
        }

        if (total <= 0.0) break;  // absorbing; the path stays constant to the horizon
        t += -std::log(holding.uniform()) / total;
        if (t >= T) break;

        double pick = selection.uniform() * total;
        const Transition* chosen = &transitions.back();
        for (const auto& tr : transitions) {
            pick -= tr.rate;
            if (pick <= 0.0) {
                chosen = &tr;
                break;
            }
        }

        switch (chosen->kind) {
            case Transition::Arrival:
                n[chosen->to - 1] += 1;
                traj.counts.arrivals += 1;
                break;
            case Transition::Blocked:
                traj.counts.blocked += 1;
                break;
            case Transition::Departure:
                n[chosen->from - 1] -= 1;
                traj.counts.departures += 1;
                break;
            case Transition::Transfer:
                n[chosen->from - 1] -= 1;
                n[chosen->to - 1] += 1;
                traj.counts.transfers += 1;
                break;
            case Transition::Breakdown:
                down = chosen->env;
                traj.counts.breakdowns += 1;
                break;
            case Transition::Repair:
                down = chosen->env;
                traj.counts.repairs += 1;
                break;
        }
        traj.times.push_back(t);
        traj.downs.push_back(down);
        traj.queues.insert(traj.queues.end(), n.begin(), n.end());
    }
    return traj;
}

namespace {

void check_batches(int batches) {
    if (batches < 10) throw ValidationError("estimate: need at least 10 batches");
}

// Integrates f over [start, stop] into per-batch bins of equal width.
std::vector<double> batch_integrals(const Trajectory& traj, const Observable& f, double start, double stop,
                                    int batches) {
    std::vector<double> bins(static_cast<size_t>(batches), 0.0);
    const double width = (stop - start) / batches;
    const std::size_t count = traj.times.size();
    for (std::size_t i = 0; i < count; ++i) {
        double t0 = std::max(traj.times[i], start);
        double t1 = std::min(i + 1 < count ? traj.times[i + 1] : traj.horizon, stop);
        if (t1 <= t0) continue;
        double value = f.eval(traj.downs[i], traj.queues_at(i));
        // split the segment across batch boundaries
        int b0 = std::min(batches - 1, static_cast<int>((t0 - start) / width));
        int b1 = std::min(batches - 1, static_cast<int>((t1 - start) / width));
        for (int b = b0; b <= b1; ++b) {
            double lo = std::max(t0, start + b * width);
            double hi = std::min(t1, start + (b + 1) * width);
            if (hi > lo) bins[static_cast<size_t>(b)] += value * (hi - lo);
        }
    }
    return bins;
}

std::pair<double, double> mean_and_se(const std::vector<double>& samples) {
    const double B = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double s : samples) mean += s;
    mean /= B;
    double var = 0.0;
    for (double s : samples) var += (s - mean) * (s - mean);
    var /= (B - 1.0);
    return {mean, std::sqrt(var / B)};
}

}  // namespace

std::pair<double, double> estimate(const Trajectory& traj, const Observable& f, double warmup_fraction,
                                   int batches) {
    check_batches(batches);
    const double start = warmup_fraction * traj.horizon;
    const double width = (traj.horizon - start) / batches;
    auto bins = batch_integrals(traj, f, start, traj.horizon, batches);
    for (auto& b : bins) b /= width;
    return mean_and_se(bins);
}

std::pair<double, double> estimate_lag(const Trajectory& traj, const Observable& f, const Observable& g, double tau,
                                       double warmup_fraction, int batches) {
    check_batches(batches);
    if (tau < 0.0) throw ValidationError("estimate_lag: tau must be nonnegative");
    const double start = warmup_fraction * traj.horizon;
    const double stop = traj.horizon - tau;
    if (stop <= start) throw ValidationError("estimate_lag: horizon too short for the requested lag");

    const int points = 200000;
    const double step = (stop - start) / points;
    std::size_t if_ = 0, ig = 0;
    auto advance = [&](std::size_t& idx, double t) {
        while (idx + 1 < traj.times.size() && traj.times[idx + 1] <= t) ++idx;
    };
    std::vector<double> samples(static_cast<size_t>(points));
    for (int k = 0; k < points; ++k) {
        double t = start + (k + 0.5) * step;
        advance(if_, t);
        advance(ig, t + tau);
        samples[static_cast<size_t>(k)] = f.eval(traj.downs[if_], traj.queues_at(if_)) *
                                          g.eval(traj.downs[ig], traj.queues_at(ig));
    }
    // batch means over contiguous grid blocks
    std::vector<double> bins(static_cast<size_t>(batches), 0.0);
    int per = points / batches;
    for (int b = 0; b < batches; ++b) {
        double acc = 0.0;
        for (int k = b * per; k < (b + 1) * per; ++k) acc += samples[static_cast<size_t>(k)];
        bins[static_cast<size_t>(b)] = acc / per;
    }
    return mean_and_se(bins);
}

std::pair<double, double> estimate_avar(const Trajectory& traj, const Observable& f, int batches,
                                        double warmup_fraction) {
    check_batches(batches);
    const double start = warmup_fraction * traj.horizon;
    const double width = (traj.horizon - start) / batches;
    auto bins = batch_integrals(traj, f, start, traj.horizon, batches);
    for (auto& b : bins) b /= width;
    auto [mean, se] = mean_and_se(bins);
    (void)mean;
    // se^2 = var(batch means)/B; avar = width * var(batch means)
    double var_means = se * se * batches;
    double avar = width * var_means;
    double rel = std::sqrt(2.0 / (batches - 1.0));
    return {avar, avar * rel};
}

void export_trajectory(const Trajectory& traj, std::ostream& out) {
    char buf[64];
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", traj.times[i]);
        out << buf << ',' << subset_to_string(traj.downs[i], traj.J);
        auto q = traj.queues_at(i);
        for (int v : q) out << ',' << v;
        out << '\n';
    }
}

}  // namespace qnet
