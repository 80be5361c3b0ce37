#pragma once

// Umbrella header for the whole library.

#include "treelet/baselines.hpp"
#include "treelet/datagen.hpp"
#include "treelet/error.hpp"
#include "treelet/io.hpp"
#include "treelet/matrix.hpp"
#include "treelet/model_io.hpp"
#include "treelet/parallel.hpp"
#include "treelet/rng.hpp"
#include "treelet/selection.hpp"
#include "treelet/stats.hpp"
#include "treelet/treelet.hpp"
