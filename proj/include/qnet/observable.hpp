#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qnet/types.hpp"

namespace qnet {

/// A real function f(D, n) on environment-state x queue-length states,
/// given by a small expression tree over the atoms
///   qc(j,c) = min(n_j, c), q(j) = n_j, down(j) = 1{j in D}, ndown = |D|
/// and the operators +, -, *, unary -, min, max.
class Observable {
public:
    double eval(const State& s) const { return eval(s.down, s.queues); }
    double eval(Subset down, std::span<const int> queues) const;

    /// f(D, n + e_j); j = 0 is the zero shift, so eval_shifted(s, 0) == eval(s).
    double eval_shifted(Subset down, std::span<const int> queues, int j) const;
    double eval_shifted(const State& s, int j) const { return eval_shifted(s.down, s.queues, j); }

    /// Largest node index referenced by any atom (0 if the expression is constant in n and D).
    int max_node() const { return max_node_; }

    /// Saturation cutoff for coordinate j (1-based): smallest c such that the value is
    /// constant in n_j for n_j >= c. Meaningless if the coordinate is unbounded.
    int cutoff(int j) const { return j <= max_node_ ? cutoffs_[j - 1] : 0; }
    bool unbounded(int j) const { return j <= max_node_ && unbounded_[j - 1]; }

    /// True iff every queue reference goes through qc(j,c); required by the exact
    /// infinite-space summation routes.
    bool is_saturated() const;

    std::string str() const;

    struct Node;

private:
    friend Observable parse_observable(std::string_view text);

    std::shared_ptr<const Node> root_;
    int max_node_ = 0;
    std::vector<int> cutoffs_;
    std::vector<bool> unbounded_;
};

Observable parse_observable(std::string_view text);

}  // namespace qnet
