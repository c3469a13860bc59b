#pragma once

#include "enumeration.hpp"
#include "environment.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "experiment.hpp"
#include "parallel.hpp"
#include "partition.hpp"
#include "rng.hpp"
#include "site.hpp"
#include "srw.hpp"
#include "stats.hpp"
#include "step_law.hpp"
#include "strategy.hpp"
#include "visit_table.hpp"
#include "walk.hpp"
