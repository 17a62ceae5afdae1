/*
 * This code is licensed under the Apache License, Version 2.0. You may
 * obtain a copy of the license at http://www.apache.org/licenses/LICENSE-2.0
 */

#pragma once

/// Convenience umbrella for the whole library.

#include "aimc/characterization.hpp"
#include "aimc/config.hpp"
#include "aimc/core.hpp"
#include "aimc/csv.hpp"
#include "aimc/device.hpp"
#include "aimc/experiments.hpp"
#include "aimc/inference.hpp"
#include "aimc/input_dist.hpp"
#include "aimc/manifest.hpp"
#include "aimc/plan.hpp"
#include "aimc/programming.hpp"
#include "aimc/rng.hpp"
#include "aimc/snapshot.hpp"
#include "aimc/version.hpp"
