#pragma once

#include "dmads/error.hpp"
#include "dmads/problem_space.hpp"
#include "dmads/evaluation.hpp"
#include "dmads/evaluator.hpp"
#include "dmads/mesh.hpp"
#include "dmads/directions.hpp"
#include "dmads/poll.hpp"
#include "dmads/delaunay.hpp"
#include "dmads/interpolant.hpp"
#include "dmads/surrogate_search.hpp"
#include "dmads/driver.hpp"
#include "dmads/json_io.hpp"
#include "dmads/subprocess.hpp"
#include "dmads/benchmarks.hpp"
#include "dmads/metrics.hpp"
#include "dmads/bench.hpp"
