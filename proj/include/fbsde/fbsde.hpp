#pragma once

// Monte-Carlo solvers for decoupled forward-backward stochastic systems:
// seeded path simulation, the backward-measurability criterion family with
// exact gradients, SGD fitting, and generalized policy iteration for
// finite-horizon stochastic control.

#include "fbsde/brownian.hpp"
#include "fbsde/bsde.hpp"
#include "fbsde/criterion.hpp"
#include "fbsde/csv.hpp"
#include "fbsde/experiments.hpp"
#include "fbsde/gpi.hpp"
#include "fbsde/models.hpp"
#include "fbsde/oracles.hpp"
#include "fbsde/policy_cost.hpp"
#include "fbsde/problem.hpp"
#include "fbsde/rng.hpp"
#include "fbsde/sde.hpp"
#include "fbsde/sgd.hpp"
#include "fbsde/time_grid.hpp"
#include "fbsde/trial.hpp"
#include "fbsde/version.hpp"
