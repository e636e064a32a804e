#pragma once

#include "levymv/coefficient.hpp"
#include "levymv/density_grid.hpp"
#include "levymv/empirical_measure.hpp"
#include "levymv/fractional_fp.hpp"
#include "levymv/io.hpp"
#include "levymv/levy_driver.hpp"
#include "levymv/particle_engine.hpp"
#include "levymv/rng.hpp"
#include "levymv/smoothing.hpp"
#include "levymv/variation_checks.hpp"
