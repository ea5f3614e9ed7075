#pragma once

#include "config.hpp"
#include "constraint.hpp"
#include "experiment.hpp"
#include "grouped_vector.hpp"
#include "inner_qcls.hpp"
#include "options.hpp"
#include "oracle.hpp"
#include "rng.hpp"
#include "solver.hpp"
#include "surrogate.hpp"
#include "trace_io.hpp"
