#pragma once

// Umbrella header for the whole toolkit.

#include "lpc/config.hpp"
#include "lpc/csv.hpp"
#include "lpc/geometry.hpp"
#include "lpc/metric.hpp"
#include "lpc/model.hpp"
#include "lpc/net.hpp"
#include "lpc/raster.hpp"
#include "lpc/rng.hpp"
#include "lpc/seqfile.hpp"
#include "lpc/synth.hpp"
#include "lpc/wire.hpp"
