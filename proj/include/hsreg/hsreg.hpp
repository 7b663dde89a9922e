#pragma once

#include "hsreg/config.hpp"
#include "hsreg/diagnostics_bounds.hpp"
#include "hsreg/effective_dimension.hpp"
#include "hsreg/error.hpp"
#include "hsreg/experiment_harness.hpp"
#include "hsreg/filters.hpp"
#include "hsreg/grid.hpp"
#include "hsreg/index_function.hpp"
#include "hsreg/io.hpp"
#include "hsreg/mercer.hpp"
#include "hsreg/parallel.hpp"
#include "hsreg/param_choice.hpp"
#include "hsreg/rng.hpp"
#include "hsreg/sampling_estimator.hpp"
#include "hsreg/smoothness_distance.hpp"
#include "hsreg/spectral_model.hpp"
