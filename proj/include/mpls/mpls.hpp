#pragma once

#include "mpls/error.hpp"
#include "mpls/operators.hpp"
#include "mpls/model.hpp"
#include "mpls/mnr.hpp"
#include "mpls/amnr.hpp"
#include "mpls/selection.hpp"
#include "mpls/simulation.hpp"
#include "mpls/metrics.hpp"
#include "mpls/bench.hpp"
