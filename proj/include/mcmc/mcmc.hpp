#pragma once
// Everything at once.

#include "mcmc/error.hpp"

#include "mcmc/numerics/ipm.hpp"
#include "mcmc/numerics/lp.hpp"
#include "mcmc/numerics/quadrature.hpp"
#include "mcmc/numerics/roots.hpp"
#include "mcmc/numerics/special.hpp"

#include "mcmc/channel/cir.hpp"
#include "mcmc/channel/distance_law.hpp"
#include "mcmc/channel/env_params.hpp"

#include "mcmc/stats/cir_statistics.hpp"

#include "mcmc/sim/parallel.hpp"
#include "mcmc/sim/particle_sim.hpp"
#include "mcmc/sim/rng.hpp"

#include "mcmc/design/drug_delivery.hpp"
#include "mcmc/design/mc_link.hpp"

#include "mcmc/io/commands.hpp"
#include "mcmc/io/config.hpp"
#include "mcmc/io/csv.hpp"
#include "mcmc/io/output.hpp"
