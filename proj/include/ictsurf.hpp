#pragma once

#include "ictsurf/errors.hpp"
#include "ictsurf/random.hpp"
#include "ictsurf/autodiff.hpp"
#include "ictsurf/discretization.hpp"
#include "ictsurf/model.hpp"
#include "ictsurf/loss.hpp"
#include "ictsurf/metrics.hpp"
#include "ictsurf/data.hpp"
#include "ictsurf/training.hpp"
#include "ictsurf/commands.hpp"
