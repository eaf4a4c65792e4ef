#pragma once

// Umbrella header.

#include <quasar/benchfn.hpp>
#include <quasar/core.hpp>
#include <quasar/de.hpp>
#include <quasar/init.hpp>
#include <quasar/optimizer.hpp>
#include <quasar/rng.hpp>
#include <quasar/stats.hpp>
