#pragma once

#include "errors.hpp"
#include "meta_strategies.hpp"
#include "oracles.hpp"
#include "prox_geometry.hpp"
#include "rng.hpp"
#include "solvers.hpp"
#include "trace.hpp"

#include "bench/bounds.hpp"
#include "bench/experiment.hpp"
#include "bench/trace_io.hpp"
#include "bench/zoo.hpp"
