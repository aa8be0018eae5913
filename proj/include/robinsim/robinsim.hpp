#pragma once

#include "robinsim/blocks.hpp"
#include "robinsim/criteria.hpp"
#include "robinsim/domain.hpp"
#include "robinsim/errors.hpp"
#include "robinsim/geometry.hpp"
#include "robinsim/harness.hpp"
#include "robinsim/point.hpp"
#include "robinsim/rng.hpp"
#include "robinsim/serialize.hpp"
#include "robinsim/sim.hpp"
#include "robinsim/stats.hpp"
