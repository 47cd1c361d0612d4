#pragma once

#include "oscsync/detectors.hpp"
#include "oscsync/ensemble.hpp"
#include "oscsync/fastmath.hpp"
#include "oscsync/integrator.hpp"
#include "oscsync/io.hpp"
#include "oscsync/linewidth.hpp"
#include "oscsync/network.hpp"
#include "oscsync/parallel.hpp"
#include "oscsync/readout.hpp"
#include "oscsync/rng.hpp"
#include "oscsync/sweeps.hpp"
#include "oscsync/units.hpp"
