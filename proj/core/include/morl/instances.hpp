#pragma once

#include "morl/mdp.hpp"

namespace morl::instances {

/// Two-armed bandit with mirrored reward channels: arm 0 pays (1, 0), arm 1
/// pays (0, 1). The fair optimum mixes both arms at 1/2.
TabularMdp symmetric_bandit(double gamma);

/// Two-armed bandit with a genuine trade-off: arm 0 pays (0.9, 0.3), arm 1
/// pays (0.45, 0.8). Under any interior policy each step has exactly two
/// reward outcomes, which keeps exhaustive batch enumeration cheap.
TabularMdp asymmetric_bandit(double gamma);

/// Two states, two actions, two objectives. Action 0 tends to hold the
/// current state, action 1 tends to switch; the channels reward opposite
/// states, so the occupancy trade-off is nontrivial.
TabularMdp two_state_chain(double gamma);

/// Single state, single action, unit reward on every channel; every
/// trajectory is identical. Useful wherever sampling noise must vanish.
TabularMdp deterministic_single(double gamma, int n_objectives = 1);

} // namespace morl::instances
