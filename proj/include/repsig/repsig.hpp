#pragma once

#include "repsig/alpha_spend.hpp"
#include "repsig/csv.hpp"
#include "repsig/curves.hpp"
#include "repsig/errors.hpp"
#include "repsig/monitor.hpp"
#include "repsig/plan_json.hpp"
#include "repsig/plans.hpp"
#include "repsig/rng.hpp"
#include "repsig/simulate.hpp"
#include "repsig/stats_core.hpp"
