#pragma once

// Umbrella header: optimal subsampling under measurement constraints for
// generalized linear models.

#include "osmc/asymptotics.hpp"
#include "osmc/cli.hpp"
#include "osmc/config.hpp"
#include "osmc/csv.hpp"
#include "osmc/dataset.hpp"
#include "osmc/designs.hpp"
#include "osmc/errors.hpp"
#include "osmc/estimators.hpp"
#include "osmc/experiment.hpp"
#include "osmc/family.hpp"
#include "osmc/format.hpp"
#include "osmc/glm.hpp"
#include "osmc/linalg.hpp"
#include "osmc/metrics.hpp"
#include "osmc/rng.hpp"
#include "osmc/sampling.hpp"
#include "osmc/solver.hpp"
