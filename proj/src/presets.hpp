#pragma once

#include <string>

#include "ksns/pde_core.hpp"
#include "run_config.hpp"

namespace ksns {

// Named initial-data families.  Every preset is written as equilibrium +
// epsilon * deviation, so epsilon = 0 is an exact steady state and the mass
// difference (hence the selected limit level) is independent of epsilon:
//   sperm_excess: means (2, 1) at epsilon = 1, limit (rho, m, c) -> (1, 0, 0)
//   egg_excess:   means (1, 2) at epsilon = 1, limit (0, 0, 1) with c -> m-level
//   balanced:     means (1.5, 1.5) at epsilon = 1, limit equilibrium is zero
// stokes_ab is sperm_excess intended to run under both fluid models; callers
// duplicate the scenario themselves.
Scenario make_preset(const std::string& name, const BoxDomain& dom,
                     double epsilon, unsigned long seed);

// Fully decoupled linear scenario: no sperm, uniform egg density, a chemical
// bump, no flow, no chemotaxis, no potential.  Every nonlinearity vanishes
// identically, so closed forms are available for cross-checks.
Scenario linear_decoupled_scenario(const BoxDomain& dom, double t_end);

// Smooth positive bump, zero normal derivative on the walls, peak 1.
Field bump_field(const BoxDomain& dom);

// Assembles the Scenario a RunConfig describes (preset data + tensor,
// potential, stepping, and output choices).  `stokes_ab` resolves to the
// sperm data; the caller decides which fluid model(s) to run.
Scenario scenario_from_config(const RunConfig& cfg);

}  // namespace ksns
