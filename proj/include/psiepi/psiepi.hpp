#pragma once

#include "psiepi/errors.hpp"
#include "psiepi/inequality.hpp"
#include "psiepi/ontic.hpp"
#include "psiepi/optimizer.hpp"
#include "psiepi/quantum.hpp"
#include "psiepi/rng.hpp"
#include "psiepi/scenario_io.hpp"
#include "psiepi/simulation.hpp"
