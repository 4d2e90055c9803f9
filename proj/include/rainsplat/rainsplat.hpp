#pragma once

#include "rainsplat/errors.hpp"
#include "rainsplat/fit.hpp"
#include "rainsplat/gaussian.hpp"
#include "rainsplat/grid.hpp"
#include "rainsplat/grid_io.hpp"
#include "rainsplat/interp.hpp"
#include "rainsplat/sample.hpp"
#include "rainsplat/splat.hpp"
#include "rainsplat/stations.hpp"
#include "rainsplat/synth.hpp"
#include "rainsplat/verify.hpp"
