#pragma once

// Umbrella header for the nvlex library.

#include "nvlex/beam.hpp"
#include "nvlex/csv.hpp"
#include "nvlex/fitcore.hpp"
#include "nvlex/odmr.hpp"
#include "nvlex/photonstats.hpp"
#include "nvlex/photophys.hpp"
#include "nvlex/pulse.hpp"
#include "nvlex/report.hpp"
#include "nvlex/rng.hpp"
#include "nvlex/synth.hpp"
