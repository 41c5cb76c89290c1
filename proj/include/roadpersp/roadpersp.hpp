#pragma once

#include "roadpersp/commands.hpp"
#include "roadpersp/components.hpp"
#include "roadpersp/cutout_pool.hpp"
#include "roadpersp/dataset_io.hpp"
#include "roadpersp/geometry.hpp"
#include "roadpersp/injector.hpp"
#include "roadpersp/metrics.hpp"
#include "roadpersp/parallel.hpp"
#include "roadpersp/random.hpp"
#include "roadpersp/raster.hpp"
