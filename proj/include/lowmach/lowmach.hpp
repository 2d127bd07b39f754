#pragma once

// Everything in one include.

#include "lowmach/calculus.hpp"
#include "lowmach/config.hpp"
#include "lowmach/diagnostics.hpp"
#include "lowmach/error.hpp"
#include "lowmach/grid.hpp"
#include "lowmach/harness.hpp"
#include "lowmach/helmholtz.hpp"
#include "lowmach/io.hpp"
#include "lowmach/linear_solver.hpp"
#include "lowmach/nsf.hpp"
#include "lowmach/ob.hpp"
#include "lowmach/poisson.hpp"
#include "lowmach/scenario.hpp"
#include "lowmach/static_state.hpp"
#include "lowmach/thermo.hpp"
