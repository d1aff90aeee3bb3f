#pragma once

#include "thg/calibration.hpp"
#include "thg/coarse_grid.hpp"
#include "thg/diagnostics.hpp"
#include "thg/error.hpp"
#include "thg/models.hpp"
#include "thg/rng.hpp"
#include "thg/sampler.hpp"
#include "thg/schedules.hpp"
#include "thg/solvers.hpp"
#include "thg/vector.hpp"
