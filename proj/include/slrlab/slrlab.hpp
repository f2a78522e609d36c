#pragma once

#include "slrlab/commands.hpp"
#include "slrlab/config.hpp"
#include "slrlab/errors.hpp"
#include "slrlab/harness.hpp"
#include "slrlab/hash.hpp"
#include "slrlab/io.hpp"
#include "slrlab/lambert.hpp"
#include "slrlab/optimizer.hpp"
#include "slrlab/problems.hpp"
#include "slrlab/rng.hpp"
#include "slrlab/schedule.hpp"
#include "slrlab/sf.hpp"
#include "slrlab/stats.hpp"
#include "slrlab/tdist.hpp"
#include "slrlab/validator.hpp"
