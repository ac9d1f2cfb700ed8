#pragma once

#include "qnet/observable.hpp"
#include "qnet/statespace.hpp"

namespace qnet {

/// (Q^Z g)(D, n): the full unreliable-network generator applied to g at one state.
double apply_Z_generator(const PreparedModel& pm, const Observable& g, const State& s);

/// <f, Q^Z g>_pi_tilde, exact, by direct application of the generator.
double corr_direct(const PreparedModel& pm, const Observable& f, const Observable& g);

/// Same quantity via the environment/synthetic-subnetwork splitting.
double corr_split(const PreparedModel& pm, const Observable& f, const Observable& g);

enum class CorrForm { Expanded, Compact };

/// Same quantity via the xi^D rearrangement (three-sum form or the
/// difference-operator inner-product form).
double corr_formula(const PreparedModel& pm, const Observable& f, const Observable& g, CorrForm form);

enum class DiffForm { Trace, Compact };

/// <f, Q^Z_A g> - <f, Q^Z_B g> for two networks with the same traffic solution,
/// service rates and environment, evaluated without computing either side.
double diff_routing(const PreparedModel& a, const PreparedModel& b, const Observable& f, const Observable& g,
                    DiffForm form);

/// Same difference for two networks that differ only in the breakdown/repair
/// mechanism, with identical pi_hat.
double diff_env(const PreparedModel& a, const PreparedModel& b, const Observable& f, const Observable& g);

/// E_pi_tilde[f], exact for saturated observables.
double expectation(const PreparedModel& pm, const Observable& f);

/// Var_pi_tilde(f).
double variance(const PreparedModel& pm, const Observable& f);

/// Enumeration box levels making every summand constant beyond the top:
/// max(saturation, constant_after) + 2 per coordinate, plus `extra`.
std::vector<int> lump_levels(const PreparedModel& pm, std::initializer_list<const Observable*> fs, int extra = 0);

/// Throws unless every queue reference is saturated (qc only).
void require_saturated(const Observable& f, const char* where);

}  // namespace qnet
