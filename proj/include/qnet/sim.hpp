#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>

#include "qnet/observable.hpp"
#include "qnet/statespace.hpp"

namespace qnet {

/// Counter-based generator: SplitMix64 finalizer over (seed, stream, counter).
/// Each logical draw type owns a stream, so trajectories are reproducible
/// independent of evaluation order within an event.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream);

    double uniform();  // in (0, 1)

private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

struct EventCounts {
    long long arrivals = 0;
    long long departures = 0;
    long long transfers = 0;
    long long breakdowns = 0;
    long long repairs = 0;
    long long blocked = 0;  // external arrivals rejected by the rerouting row
};

/// Piecewise-constant path; entry i is the state from times[i] onward.
struct Trajectory {
    int J = 0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> times;   // times[0] == 0
    std::vector<Subset> downs;
    std::vector<int> queues;     // row-major, times.size() x J
    EventCounts counts;

    std::span<const int> queues_at(std::size_t i) const { return {queues.data() + i * static_cast<std::size_t>(J), static_cast<std::size_t>(J)}; }
    State state_at(std::size_t i) const;
    std::size_t events() const { return times.size() - 1; }
};

/// Exact-event simulation; bit-reproducible for fixed (model, T, seed).
Trajectory simulate(const PreparedModel& pm, double T, std::uint64_t seed);

/// Time-average of f over the post-warm-up window, with a batch-means standard error.
std::pair<double, double> estimate(const Trajectory& traj, const Observable& f, double warmup_fraction = 0.1,
                                   int batches = 50);

/// Grid average of f(Z_t) g(Z_{t+tau}), with a batch-means standard error.
std::pair<double, double> estimate_lag(const Trajectory& traj, const Observable& f, const Observable& g, double tau,
                                       double warmup_fraction = 0.1, int batches = 50);

/// Batch-means estimate of the asymptotic variance of the time-average of f.
std::pair<double, double> estimate_avar(const Trajectory& traj, const Observable& f, int batches = 50,
                                        double warmup_fraction = 0.1);

/// Line-delimited records "t,subset-literal,n_1,...,n_J"; byte-stable.
void export_trajectory(const Trajectory& traj, std::ostream& out);

}  // namespace qnet
