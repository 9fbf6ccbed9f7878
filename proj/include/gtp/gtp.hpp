#pragma once

// Umbrella header for the fair-coin game-theoretic probability library.

#include "gtp/constprop.hpp"
#include "gtp/game.hpp"
#include "gtp/ingest.hpp"
#include "gtp/mixtures.hpp"
#include "gtp/numeric.hpp"
#include "gtp/psi.hpp"
#include "gtp/quadrature.hpp"
#include "gtp/reality.hpp"
#include "gtp/sharpness.hpp"
#include "gtp/sweep.hpp"
#include "gtp/validity.hpp"
