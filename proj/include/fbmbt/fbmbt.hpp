#pragma once

// Umbrella header.

#include "fbmbt/errors.hpp"
#include "fbmbt/log.hpp"
#include "fbmbt/rng.hpp"
#include "fbmbt/gaussian_core.hpp"
#include "fbmbt/hermite_constants.hpp"
#include "fbmbt/crossing_scheme.hpp"
#include "fbmbt/variation_stats.hpp"
#include "fbmbt/limit_oracles.hpp"
#include "fbmbt/statistics.hpp"
#include "fbmbt/oracle_values.hpp"
#include "fbmbt/parallel.hpp"
#include "fbmbt/experiment.hpp"
#include "fbmbt/report.hpp"
